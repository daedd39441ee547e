#pragma once

// Synthetic case-study data: Lorenz-oscillator latents mixed into six sensors
// together with static noise.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

#include "predvar/model.hpp"

namespace predvar {

enum class Integrator { Rk4, Euler };

struct LorenzConfig {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double dt = 0.01;
  std::array<double, 3> initial_state{1.0, 1.0, 1.0};
  Integrator integrator = Integrator::Rk4;
  std::size_t discard = 1000;

  void validate() const;
};

/// n states of the Lorenz system after `discard` leading steps, one step per
/// row. Throws IntegrationError on a non-finite state.
TimeSeries integrate_lorenz(const LorenzConfig& config, std::size_t n);

/// How the static-noise covariance is matched to the latent data.
enum class NoiseVariance {
  Diagonal,  ///< diag of per-coordinate latent variances
  Full,      ///< full latent sample covariance
  Total,     ///< mean latent variance times identity
};

struct CaseStudyConfig {
  LorenzConfig lorenz;
  std::size_t samples = 10000;
  std::size_t train = 3000;
  std::size_t test = 3000;
  bool center_latent = true;
  NoiseVariance noise_variance = NoiseVariance::Diagonal;
};

struct IndexRange {
  std::size_t first = 0;
  std::size_t count = 0;

  std::size_t end() const noexcept { return first + count; }
};

struct SyntheticDataset {
  TimeSeries y;
  TimeSeries v_true;
  TimeSeries static_noise;  ///< the ebar stream
  PredVarParams params_true;  ///< no VAR coefficients for Lorenz latents
  IndexRange train;
  IndexRange test;
  std::uint64_t seed = 0;
  std::string generator;

  std::size_t length() const noexcept { return y.length(); }
};

/// The 6 x 3 case-study loadings: identity over zeros.
Matrix case_study_loadings();
/// The 6 x 3 oblique static loadings used by the main case study.
Matrix case_study_static_loadings();
/// [0 I]^T, making signal and noise subspaces orthogonal.
Matrix orthogonal_static_loadings();

SyntheticDataset paper_case_study(std::uint64_t seed, const CaseStudyConfig& config = {});

/// Same latent and noise streams as paper_case_study, orthogonal static loadings.
SyntheticDataset orth_case_study(std::uint64_t seed, const CaseStudyConfig& config = {});

/// Mix given latents with fresh static noise through (P, Pbar).
SyntheticDataset mix_case_study(const TimeSeries& latent, const Matrix& loadings, const Matrix& static_loadings,
                                std::uint64_t seed, const CaseStudyConfig& config, std::string generator);

/// Dataset drawn from a known linear truth: n = samples rows of (y, v) via
/// simulate, train = first `train` rows, test = last `test` rows. Throws
/// ConfigError when the truth has no dynamics or the splits do not fit.
SyntheticDataset simulated_case(const PredVarParams& params, std::size_t samples, std::size_t train,
                                std::size_t test, std::uint64_t seed);

}  // namespace predvar
