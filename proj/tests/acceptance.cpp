// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "predvar/io.hpp"
#include "support.hpp"

using namespace predvar;
using predvar::testing::conditioned;
using predvar::testing::gaussian;
using predvar::testing::median;
namespace io = predvar::io;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += "; runtime over " + std::to_string(limit_s) + " s";
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

Matrix true_projector(const PredVarParams& p) { return p.loadings * weights_from_loadings(p).dlv.transpose(); }

// Identity residuals of every converged PredVAR fit made below.
std::vector<std::pair<double, double>> identity_log;

FitResult logged_predvar(const TimeSeries& y) {
  FitResult fit = fit_predvar(y, 2, 3);
  if (fit.converged) identity_log.emplace_back(fit.identity_residual(), fit.covariance_residual());
  return fit;
}

PredVarParams random_tuple(std::mt19937_64& rng, std::size_t p, std::size_t l, std::size_t s) {
  return random_params(p, l, s, rng());
}

// ---- 1 ---------------------------------------------------------------------

Outcome duality() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = 2 + trial % 9;
    const int l = 1 + (trial / 9) % (p - 1);
    const Matrix full = conditioned(rng, p, p, 0.2, 3.0);
    const Matrix pl = full.leftCols(l);
    const Matrix pb = full.rightCols(p - l);
    const WeightMatrices w = weights_from_loadings(pl, pb);
    Matrix rr(p, p);
    rr << w.dlv, w.static_;
    worst = std::max(worst, (rr.transpose() * full - Matrix::Identity(p, p)).norm());
  }
  return {worst < 1e-9, "max ||[R Rbar]^T [P Pbar] - I||_F = " + fmt(worst) + " (< 1e-9)"};
}

// ---- 2 ---------------------------------------------------------------------

Outcome constraint_geometry() {
  std::mt19937_64 rng(202);
  double cross = 0.0, null_res = 0.0, angle = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 3 + static_cast<std::size_t>(trial) % 6;
    const std::size_t l = 1 + static_cast<std::size_t>(trial / 6) % (p - 1);
    const PredVarParams t = random_tuple(rng, p, l, 1 + static_cast<std::size_t>(trial) % 3);
    const Matrix sigma_e = to_reduced_rank_var(t).residual_cov;
    const WeightMatrices w = constrained_weights(t.loadings, sigma_e);
    cross = std::max(cross, (w.dlv.transpose() * sigma_e * w.static_).norm() / sigma_e.norm());
    null_res = std::max(null_res, (w.static_.transpose() * t.loadings).norm());
    for (double a : canonical_angles(w.dlv, weights_from_loadings(t).dlv)) angle = std::max(angle, a);
  }
  const bool ok = cross < 1e-8 && null_res < 1e-10 && angle < 0.01;
  return {ok, "max ||R^T Se Rbar||/||Se|| = " + fmt(cross) + ", max ||Rbar^T P|| = " + fmt(null_res) +
                  ", max angle to dual R = " + fmt(angle) + " deg"};
}

// ---- 3 ---------------------------------------------------------------------

Outcome transform_invariance() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 3 + static_cast<std::size_t>(trial) % 5;
    const std::size_t l = 1 + static_cast<std::size_t>(trial / 5) % (p - 1);
    const PredVarParams a = random_tuple(rng, p, l, 1 + static_cast<std::size_t>(trial) % 3);
    const PredVarParams b = equivalent_transform(a, conditioned(rng, static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)),
                                                 conditioned(rng, static_cast<Eigen::Index>(p - l),
                                                             static_cast<Eigen::Index>(p - l)));
    const Matrix ra = weights_from_loadings(a).dlv;
    const Matrix rb = weights_from_loadings(b).dlv;
    worst = std::max(worst, (a.loadings * ra.transpose() - b.loadings * rb.transpose()).norm());
    worst = std::max(worst, (to_reduced_rank_var(a).residual_cov - to_reduced_rank_var(b).residual_cov).norm());
    for (std::size_t j = 0; j < a.order(); ++j) {
      worst = std::max(worst, (a.loadings * a.var_coeffs[j] * ra.transpose() -
                               b.loadings * b.var_coeffs[j] * rb.transpose()).norm());
    }
  }
  return {worst < 1e-9, "max Frobenius change of P R^T, Sigma_e, P B_j R^T = " + fmt(worst) + " (< 1e-9)"};
}

// ---- 5 ---------------------------------------------------------------------

Outcome mstep_optimality() {
  std::mt19937_64 rng(505);
  int violations = 0;
  double worst_gap = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 4 + static_cast<std::size_t>(trial) % 3;
    const std::size_t l = 1 + static_cast<std::size_t>(trial) % 3;
    const std::size_t s = 1 + static_cast<std::size_t>(trial / 3) % 3;
    const PredVarParams t = random_tuple(rng, p, l, s);
    const StackedData st(simulate(t, 400, rng()).y.data(), s);
    const Matrix r = orthonormal_basis(gaussian(rng, static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)));
    const DlvStacks d = extract_dlvs(st, r);
    const DynamicsEstimate dyn = update_dynamics(d);
    const LoadingsEstimate le = update_loadings(st, d, dyn.stacked);
    const double j_dlv = dlv_objective(d, dyn.stacked, dyn.innovation_cov);
    const double j_proj = proj_objective(st, d, dyn.stacked, le.loadings, le.residual_cov);
    for (int k = 0; k < 20; ++k) {
      const double eps = 0.1 * std::pow(0.5, k % 5);
      const Matrix db = eps * gaussian(rng, dyn.stacked.rows(), dyn.stacked.cols());
      const Matrix a = eps * gaussian(rng, dyn.innovation_cov.rows(), dyn.innovation_cov.cols());
      const Matrix dp = eps * gaussian(rng, le.loadings.rows(), le.loadings.cols());
      const Matrix c = eps * gaussian(rng, le.residual_cov.rows(), le.residual_cov.cols());
      const double pert_dlv = dlv_objective(d, dyn.stacked + db, dyn.innovation_cov + a * a.transpose());
      const double pert_proj = proj_objective(st, d, dyn.stacked, le.loadings + dp, le.residual_cov + c * c.transpose());
      worst_gap = std::max({worst_gap, j_dlv - pert_dlv, j_proj - pert_proj});
      if (j_dlv > pert_dlv + 1e-9) ++violations;
      if (j_proj > pert_proj + 1e-9) ++violations;
    }
  }
  return {violations == 0, std::to_string(violations) + " of 2000 perturbations beat the update; max (update - perturbed) = " +
                               fmt(worst_gap)};
}

// ---- 6 ---------------------------------------------------------------------

Outcome ols_oracle() {
  std::mt19937_64 rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int l = 1 + trial % 3;
    const std::size_t s = 1 + static_cast<std::size_t>(trial / 3) % 3;
    const int n = 40 + 8 * trial;
    const Matrix latent = gaussian(rng, n, l);
    const DynamicsEstimate est = update_dynamics(extract_dlvs(StackedData(latent, s), Matrix::Identity(l, l)));
    const auto oracle = predvar::testing::per_lag_ols(latent, s);
    const auto coeffs = est.coeffs();
    for (std::size_t j = 0; j < s; ++j) worst = std::max(worst, (coeffs[j] - oracle.coeffs[j]).norm());
    worst = std::max(worst, (est.innovation_cov - oracle.innovation_cov).norm());
  }
  return {worst < 1e-9, "max deviation from per-lag OLS = " + fmt(worst) + " (< 1e-9)"};
}

// ---- 7 ---------------------------------------------------------------------

Outcome linear_consistency() {
  const PredVarParams truth = random_params(6, 3, 2, 0, 0.95, 0.7);
  const Matrix pi = true_projector(truth);
  std::vector<double> small, large;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    small.push_back(frobenius_distance(logged_predvar(simulate(truth, 2000, seed).y).projector_original(), pi));
    large.push_back(frobenius_distance(logged_predvar(simulate(truth, 10000, seed).y).projector_original(), pi));
  }
  const double m2 = median(small), m10 = median(large);
  return {m10 < 0.2 && m10 < m2, "median projector error N=10000: " + fmt(m10) + " (< 0.2), N=2000: " + fmt(m2)};
}

// ---- 8, 9, 11 --------------------------------------------------------------

std::vector<SweepRow> lorenz_sweep;

const std::vector<SweepRow>& sweep_rows() {
  if (lorenz_sweep.empty()) {
    SweepSpec spec;
    for (std::size_t n = 1000; n <= 10000; n += 1000) spec.sample_counts.push_back(n);
    spec.algorithms = {Algorithm::OneShot, Algorithm::PredVar, Algorithm::Orth};
    for (std::uint64_t s = 0; s < 10; ++s) spec.seeds.push_back(s);
    lorenz_sweep = consistency_sweep([](std::uint64_t seed) { return paper_case_study(seed); }, spec, 1);
  }
  return lorenz_sweep;
}

double sweep_median(std::size_t count, Algorithm algo, double SweepRow::*field) {
  std::vector<double> v;
  for (const auto& r : sweep_rows())
    if (r.samples == count && r.algorithm == algo && r.ok()) v.push_back(r.*field);
  return v.empty() ? std::nan("") : median(v);
}

Outcome lorenz_ordering() {
  const double pv = sweep_median(10000, Algorithm::PredVar, &SweepRow::projector_distance);
  const double os = sweep_median(10000, Algorithm::OneShot, &SweepRow::projector_distance);
  const double orth = sweep_median(10000, Algorithm::Orth, &SweepRow::projector_distance);
  const bool ok = pv <= os && os <= orth && orth >= 1.5 * pv;
  return {ok, "median distance at 10000: PredVAR " + fmt(pv) + ", OS " + fmt(os) + ", ORTH " + fmt(orth) +
                  " (need PredVAR <= OS <= ORTH, ORTH >= 1.5 PredVAR)"};
}

Outcome lorenz_angles() {
  int wins = 0;
  std::string lost;
  for (std::size_t n = 1000; n <= 10000; n += 1000) {
    const double pv = sweep_median(n, Algorithm::PredVar, &SweepRow::signal_angle_deg);
    const double os = sweep_median(n, Algorithm::OneShot, &SweepRow::signal_angle_deg);
    if (pv <= os) {
      ++wins;
    } else {
      lost += " " + std::to_string(n);
    }
  }
  const double a1 = sweep_median(1000, Algorithm::PredVar, &SweepRow::signal_angle_deg);
  const double a10 = sweep_median(10000, Algorithm::PredVar, &SweepRow::signal_angle_deg);
  const bool ok = a10 <= a1 && wins >= 8;
  return {ok, "median PredVAR angle 1000: " + fmt(a1) + " deg, 10000: " + fmt(a10) + " deg; PredVAR <= OS at " +
                  std::to_string(wins) + "/10 counts" + (lost.empty() ? "" : " (lost at" + lost + ")")};
}

Outcome orthogonal_generation() {
  std::vector<double> orth, pv;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticDataset d = orth_case_study(seed);
    orth.push_back(projector_distance(d, fit_orth(d.y, 2, 3)));
    pv.push_back(projector_distance(d, logged_predvar(d.y)));
  }
  const double oblique = sweep_median(10000, Algorithm::Orth, &SweepRow::projector_distance);
  const double mo = median(orth), mp = median(pv);
  return {mo < oblique && mp <= mo, "median ORTH distance oblique " + fmt(oblique) + " -> orthogonal " + fmt(mo) +
                                        "; PredVAR on orthogonal " + fmt(mp)};
}

// ---- 4 ---------------------------------------------------------------------

Outcome identities() {
  for (std::uint64_t seed = 0; seed < 10; ++seed) logged_predvar(paper_case_study(seed).y);
  double id = 0.0, cov = 0.0;
  for (const auto& [a, b] : identity_log) {
    id = std::max(id, a);
    cov = std::max(cov, b);
  }
  return {!identity_log.empty() && id < 1e-6 && cov < 1e-6,
          std::to_string(identity_log.size()) + " converged fits: max ||R^T P - I|| = " + fmt(id) +
              ", max relative covariance residual = " + fmt(cov)};
}

// ---- 10 --------------------------------------------------------------------

Outcome loading_angles() {
  PredVarParams p;
  p.loadings = case_study_loadings();
  p.static_loadings = case_study_static_loadings();
  const auto a = canonical_angles(weights_from_loadings(p).dlv, p.loadings);
  const bool ok = a.size() == 3 && std::abs(a[0] - 23.99) <= 0.05 && std::abs(a[1] - 51.27) <= 0.05 &&
                  std::abs(a[2] - 60.97) <= 0.05;
  return {ok, "angles " + fmt(a[0]) + ", " + fmt(a[1]) + ", " + fmt(a[2]) + " deg (23.99, 51.27, 60.97 +- 0.05)"};
}

// ---- 12 --------------------------------------------------------------------

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool same_csv(const fs::path& path) { return io::format_csv(io::read_csv(path)) == io::read_text(path); }
bool same_json(const fs::path& path) { return io::read_json(path).dump(2) + "\n" == io::read_text(path); }

Outcome cli_round_trip(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / "predvar_acceptance";
  fs::remove_all(root);
  const std::string data = (root / "data").string();
  std::vector<std::pair<std::string, int>> steps = {
      {"generate --case paper --seed 7 --out " + data, 0},
      {"fit --data " + data + " --algo predvar --out " + (root / "fit").string(), 0},
      {"evaluate --data " + data + " --model " + (root / "fit" / "model.json").string() + " --out " +
           (root / "eval").string(),
       0},
      {"sweep --data " + data + " --out " + (root / "sweep").string(), 0},
  };
  for (const auto& [args, expect] : steps) {
    const int code = run_cli(cli, args);
    if (code != expect) return {false, "'" + args + "' exited " + std::to_string(code)};
  }
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& name) {
    if (!ok) bad.push_back(name);
  };
  const SyntheticDataset d = io::load_dataset(data);
  io::save_dataset(root / "resaved", d);
  for (const char* f : {"y.csv", "v_true.csv", "truth.json"}) {
    check(io::read_text(root / "resaved" / f) == io::read_text(root / "data" / f), f);
  }
  const fs::path model = root / "fit" / "model.json";
  check(io::fit_to_json(io::fit_from_json(io::read_json(model))).dump(2) + "\n" == io::read_text(model), "model.json");
  check(same_json(root / "fit" / "diagnostics.json"), "diagnostics.json");
  const fs::path rep = root / "eval" / "report.json";
  check(io::report_to_json(io::report_from_json(io::read_json(rep))).dump(2) + "\n" == io::read_text(rep), "report.json");
  check(same_csv(root / "eval" / "fig_covariances.csv"), "fig_covariances.csv");
  check(same_csv(root / "eval" / "sensor_traces.csv"), "sensor_traces.csv");
  const fs::path sw = root / "sweep" / "sweep.csv";
  const auto rows = io::sweep_from_table(io::read_csv(sw));
  check(io::format_csv(io::sweep_table(rows)) == io::read_text(sw), "sweep.csv");
  check(rows.size() == 30, "sweep row count");
  fs::remove_all(root);
  if (!bad.empty()) {
    std::string msg = "not lossless:";
    for (const auto& b : bad) msg += " " + b;
    return {false, msg};
  }
  return {true, "generate, fit, evaluate, sweep exit 0; 10 files re-parse to identical bytes"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path to predvar CLI>\n");
    return 2;
  }
  const std::string cli = argv[1];
  report(1, "weight duality", 5, duality);
  report(2, "constrained weights geometry", 10, constraint_geometry);
  report(3, "equivalence-transform invariance", 10, transform_invariance);
  report(5, "M-step optimality", 0, mstep_optimality);
  report(6, "dynamics update vs per-lag OLS", 0, ols_oracle);
  report(7, "linear self-consistency", 120, linear_consistency);
  report(8, "Lorenz projector-distance ordering", 300, lorenz_ordering);
  report(9, "Lorenz signal-angle trend", 0, lorenz_angles);
  report(10, "case-study loading angles", 0, loading_angles);
  report(11, "orthogonal generation", 0, orthogonal_generation);
  report(4, "post-convergence identities", 0, identities);
  report(12, "CLI round trip", 600, [&] { return cli_round_trip(cli); });
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
