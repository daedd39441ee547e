#include "predvar/lorenz.hpp"

#include <cmath>
#include <random>
#include <string>

namespace predvar {

namespace {

using State = Eigen::Vector3d;

State lorenz_rhs(const LorenzConfig& c, const State& x) {
  return {c.sigma * (x(1) - x(0)), x(0) * (c.rho - x(2)) - x(1), x(0) * x(1) - c.beta * x(2)};
}

State step(const LorenzConfig& c, const State& x) {
  const double h = c.dt;
  if (c.integrator == Integrator::Euler) return x + h * lorenz_rhs(c, x);
  const State k1 = lorenz_rhs(c, x);
  const State k2 = lorenz_rhs(c, x + 0.5 * h * k1);
  const State k3 = lorenz_rhs(c, x + 0.5 * h * k2);
  const State k4 = lorenz_rhs(c, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

void LorenzConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::ConfigError, "Lorenz dt must be positive");
  if (!std::isfinite(sigma) || !std::isfinite(rho) || !std::isfinite(beta)) {
    throw Error(ErrorKind::ConfigError, "Lorenz parameters must be finite");
  }
}

TimeSeries integrate_lorenz(const LorenzConfig& config, std::size_t n) {
  config.validate();
  if (n < 1) throw Error(ErrorKind::InvalidInput, "need at least one Lorenz sample");
  State x(config.initial_state[0], config.initial_state[1], config.initial_state[2]);
  Matrix out(static_cast<Eigen::Index>(n), 3);
  for (std::size_t k = 0; k < config.discard + n; ++k) {
    x = step(config, x);
    if (!x.allFinite()) throw Error(ErrorKind::IntegrationError, "Lorenz trajectory diverged at step " + std::to_string(k + 1));
    if (k >= config.discard) out.row(static_cast<Eigen::Index>(k - config.discard)) = x.transpose();
  }
  return TimeSeries(std::move(out));
}

Matrix case_study_loadings() {
  Matrix p = Matrix::Zero(6, 3);
  p.topRows(3).setIdentity();
  return p;
}

Matrix case_study_static_loadings() {
  Matrix pbar(6, 3);
  pbar << -0.2997, -0.4611, -0.2868,
          -0.2403,  0.2559,  0.6444,
          -0.1334,  0.5749, -0.5168,
          -0.2997, -0.4611, -0.2868,
          -0.5400, -0.2052,  0.3576,
          -0.6733,  0.3697, -0.1592;
  return pbar;
}

Matrix orthogonal_static_loadings() {
  Matrix pbar = Matrix::Zero(6, 3);
  pbar.bottomRows(3).setIdentity();
  return pbar;
}

SyntheticDataset mix_case_study(const TimeSeries& latent, const Matrix& loadings, const Matrix& static_loadings,
                                std::uint64_t seed, const CaseStudyConfig& config, std::string generator) {
  const auto n = static_cast<Eigen::Index>(latent.length());
  const auto l = loadings.cols();
  const auto q = static_loadings.cols();
  if (latent.dim() != static_cast<std::size_t>(l)) throw Error(ErrorKind::DimensionError, "latent dimension != loadings columns");
  if (config.train > latent.length() || config.test > latent.length()) {
    throw Error(ErrorKind::ConfigError, "train/test splits exceed the series length");
  }
  if (config.train + config.test > latent.length()) throw Error(ErrorKind::ConfigError, "train and test ranges overlap");

  Matrix v = latent.data();
  if (config.center_latent) v = v.rowwise() - v.colwise().mean();
  const Matrix latent_cov = sample_covariance(TimeSeries(v));

  Matrix noise_cov = Matrix::Zero(q, q);
  if (q != l && config.noise_variance != NoiseVariance::Total) {
    throw Error(ErrorKind::ConfigError, "matching noise to latent variance needs p - ell == ell");
  }
  switch (config.noise_variance) {
    case NoiseVariance::Diagonal: noise_cov.diagonal() = latent_cov.diagonal(); break;
    case NoiseVariance::Full: noise_cov = latent_cov; break;
    case NoiseVariance::Total: noise_cov.diagonal().setConstant(latent_cov.trace() / static_cast<double>(l)); break;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix z(n, q);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < q; ++j) z(i, j) = normal(rng);
  const Matrix noise = z * psd_sqrt(noise_cov);  // rows ~ N(0, noise_cov)

  SyntheticDataset out;
  out.y = TimeSeries(v * loadings.transpose() + noise * static_loadings.transpose());
  out.v_true = TimeSeries(std::move(v));
  out.static_noise = TimeSeries(noise);
  out.params_true.loadings = loadings;
  out.params_true.static_loadings = static_loadings;
  out.params_true.static_noise_cov = noise_cov;
  out.params_true.validate();
  out.train = {0, config.train};
  out.test = {latent.length() - config.test, config.test};
  out.seed = seed;
  out.generator = std::move(generator);
  return out;
}

SyntheticDataset paper_case_study(std::uint64_t seed, const CaseStudyConfig& config) {
  return mix_case_study(integrate_lorenz(config.lorenz, config.samples), case_study_loadings(),
                        case_study_static_loadings(), seed, config, "paper");
}

SyntheticDataset orth_case_study(std::uint64_t seed, const CaseStudyConfig& config) {
  return mix_case_study(integrate_lorenz(config.lorenz, config.samples), case_study_loadings(),
                        orthogonal_static_loadings(), seed, config, "orth");
}

SyntheticDataset simulated_case(const PredVarParams& params, std::size_t samples, std::size_t train,
                                std::size_t test, std::uint64_t seed) {
  params.validate();
  if (!params.has_dynamics()) throw Error(ErrorKind::ConfigError, "simulation needs VAR coefficients and Sigma_eps");
  if (samples <= params.order() + 2) throw Error(ErrorKind::ConfigError, "too few samples to simulate");
  if (train + test > samples) throw Error(ErrorKind::ConfigError, "train and test splits must fit without overlap");
  const SimulatedSeries sim = simulate(params, samples - params.order(), seed);
  SyntheticDataset d;
  d.y = sim.y;
  d.v_true = sim.v;
  const WeightMatrices w = weights_from_loadings(params);
  d.static_noise = TimeSeries((sim.y.data() - sim.v.data() * params.loadings.transpose()) * w.static_);
  d.params_true = params;
  d.train = {0, train};
  d.test = {samples - test, test};
  d.seed = seed;
  d.generator = "simulate";
  return d;
}

}  // namespace predvar
