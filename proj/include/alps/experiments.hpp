#pragma once

// Scripted, seeded reproductions of the desk-scale phenomena, each emitting
// CSV results plus a JSON manifest. Bodies are deterministic given the seed;
// thread count never changes the numbers.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "alps/common.hpp"
#include "alps/config.hpp"
#include "alps/eval.hpp"
#include "alps/io.hpp"
#include "alps/parallel.hpp"
#include "alps/samplers.hpp"
#include "alps/special.hpp"

namespace alps {

// Validation oracles, deliberately independent of the library formulas they
// check: the ring density is integrated directly over the circle and
// differentiated numerically, never through the Bessel-ratio path.
namespace oracles {

inline double ring_log_density_quadrature(double w, const Vec& x, int n_theta = 4096) {
  const double w2 = w * w;
  const double r2 = x.squaredNorm();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> g(static_cast<size_t>(n_theta));
  for (int i = 0; i < n_theta; ++i) {
    const double theta = 6.283185307179586476925286766559 * double(i) / double(n_theta);
    const double dot = x[0] * std::cos(theta) + x[1] * std::sin(theta);
    g[size_t(i)] = -(r2 + 1.0 - 2.0 * dot) / (2.0 * w2);
    best = std::max(best, g[size_t(i)]);
  }
  double acc = 0;
  for (double v : g) acc += std::exp(v - best);
  // Periodic trapezoid rule: (1/n) sum over the uniform grid.
  return -std::log(6.283185307179586476925286766559 * w2) + best + std::log(acc / double(n_theta));
}

// Fourth-order central second derivative along direction `dir`.
template <typename F>
double second_derivative(const F& f, const Vec& x, const Vec& dir, double h) {
  const double fp2 = f(x + 2.0 * h * dir), fp1 = f(x + h * dir);
  const double fm1 = f(x - h * dir), fm2 = f(x - 2.0 * h * dir);
  return (-fp2 + 16.0 * fp1 - 30.0 * f(x) + 16.0 * fm1 - fm2) / (12.0 * h * h);
}

template <typename F>
double cross_derivative(const F& f, const Vec& x, const Vec& d1, const Vec& d2, double h) {
  return (f(x + h * d1 + h * d2) + f(x - h * d1 - h * d2) - f(x + h * d1 - h * d2) -
          f(x - h * d1 + h * d2)) /
         (4.0 * h * h);
}

template <typename F>
Mat fd_hessian_2d(const F& f, const Vec& x, double h) {
  Mat hess(2, 2);
  Vec e1 = Vec::Zero(2), e2 = Vec::Zero(2);
  e1[0] = 1;
  e2[1] = 1;
  hess(0, 0) = second_derivative(f, x, e1, h);
  hess(1, 1) = second_derivative(f, x, e2, h);
  hess(0, 1) = hess(1, 0) = cross_derivative(f, x, e1, e2, h);
  return hess;
}

template <typename F>
Vec fd_gradient(const F& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec e = Vec::Zero(x.size());
    e[i] = 1;
    g[i] = (f(x + h * e) - f(x - h * e)) / (2.0 * h);
  }
  return g;
}

}  // namespace oracles

struct ExperimentSpec {
  std::string name;
  Config params;
  uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
};

struct ExperimentResult {
  nlohmann::json metrics;
  std::map<std::string, CsvTable> tables;
  nlohmann::json manifest;
};

namespace detail {

inline Mat random_operator(int m, int d, double op_norm, Rng& rng) {
  Mat a(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.gaussian();
  const double top = a.jacobiSvd().singularValues()(0);
  if (op_norm > 0 && top > 0) a *= op_norm / top;
  return a;
}

inline ScheduleParams schedule_from_config(const Config& cfg, int d, int m) {
  ScheduleParams p;
  p.d = d;
  p.m = m;
  p.alpha = cfg.get_real("alpha", 1.0);
  p.lambda = cfg.get_real("lambda", 10.0);
  p.eps = cfg.get_real("eps", 0.1);
  p.C = cfg.get_real("C", 10.0);
  p.R = cfg.get_real("R", kInfiniteRadius);
  return p;
}

// --- variance-curve -------------------------------------------------------

inline ExperimentResult run_variance_curve(const ExperimentSpec& spec) {
  const auto& cfg = spec.params;
  const double eta_sq = cfg.get_real("eta_sq", 0.1);
  const long chains = cfg.get_int("chains", 20000);
  const double h = cfg.get_real("h", 1e-4);
  const double t_max = cfg.get_real("t_max", 1.0);
  const int grid = int(cfg.get_int("grid", 50));
  cfg.reject_unknown();
  require(grid >= 2 && chains > 1, "variance-curve: bad grid/chains");

  const double dt = t_max / double(grid - 1);
  Mat values(chains, grid);
  Rng root(spec.seed);
  StepPolicy pol;
  pol.h = h;
  const double eta = std::sqrt(eta_sq);
  parallel_for(chains, spec.threads, [&](long c) {
    Rng rng = root.split(uint64_t(c) + 1);
    const double x_init = rng.gaussian();
    const double y = x_init + eta * rng.gaussian();
    ChainState state{Vec::Constant(1, x_init), 0.0, rng};
    DriftFn drift = [&](const Vec& x, Vec& out) { out[0] = -x[0] + (y - x[0]) / eta_sq; };
    values(c, 0) = x_init;
    for (int g = 1; g < grid; ++g) {
      euler_maruyama_run(state, drift, dt, pol);
      values(c, g) = state.x[0];
    }
  });

  CsvTable table({"t", "var_analytic", "var_empirical", "mc_stderr"});
  const double t_star = variance_curve_min_time(eta_sq);
  int argmin_emp = 0, argmin_ana = 0;
  double best_emp = std::numeric_limits<double>::infinity();
  double best_ana = std::numeric_limits<double>::infinity();
  double var_at_tstar = 0, se_at_tstar = 0;
  int tstar_cell = 0;
  double tstar_dist = std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid; ++g) {
    const double t = dt * g;
    const double mean = values.col(g).mean();
    const double var =
        (values.col(g).array() - mean).square().sum() / double(chains - 1);
    const double se = var * std::sqrt(2.0 / double(chains - 1));
    const double ana = variance_curve(t, eta_sq);
    table.add_row({t, ana, var, se});
    if (var < best_emp) {
      best_emp = var;
      argmin_emp = g;
    }
    if (ana < best_ana) {
      best_ana = ana;
      argmin_ana = g;
    }
    if (std::abs(t - t_star) < tstar_dist) {
      tstar_dist = std::abs(t - t_star);
      tstar_cell = g;
      var_at_tstar = var;
      se_at_tstar = se;
    }
  }

  ExperimentResult res;
  res.tables.emplace("curve", table);
  res.metrics = {{"t_star", t_star},
                 {"grid_dt", dt},
                 {"t_star_cell", tstar_cell},
                 {"argmin_empirical_cell", argmin_emp},
                 {"argmin_analytic_cell", argmin_ana},
                 {"var_at_t_star_empirical", var_at_tstar},
                 {"var_at_t_star_target", 1.0 - 1.0 / (2.0 * (1.0 + eta_sq))},
                 {"mc_stderr_at_t_star", se_at_tstar},
                 {"chains", chains}};
  return res;
}

// --- gaussian-posterior / rung-stability ----------------------------------

inline ExperimentResult run_gaussian_posterior(const ExperimentSpec& spec, bool per_rung) {
  const auto& cfg = spec.params;
  const int d = int(cfg.get_int("d", 8));
  const int m = int(cfg.get_int("m", 3));
  const double a_norm = cfg.get_real("a_norm", 0.8);
  const double eta = cfg.get_real("eta", 0.5);
  const long chains = cfg.get_int("chains", 10000);
  const double h = cfg.get_real("h", 4e-3);
  ScheduleParams sched = schedule_from_config(cfg, d, m);
  cfg.reject_unknown();

  Rng root(spec.seed);
  Rng setup = root.split(0xA0);
  MeasurementModel model(random_operator(m, d, a_norm, setup), eta);
  const PriorSpec prior = PriorSpec::standard_gaussian(d);
  const Vec x_true = setup.gaussian_vector(d);
  Vec y = simulate_measurement(x_true, model, setup);

  RunConfig run;
  run.schedule = sched;
  run.policy.h = h;
  run.chains = int(chains);
  run.seed = Rng(spec.seed).split(0xA1).seed();
  run.record_rungs = per_rung;
  run.threads = spec.threads;
  RunArtifact art = posterior_sampler(prior, ScoreOracle::exact(prior), y, model, run);

  const GaussianSummary gprior{Vec::Zero(d), Mat(Mat::Identity(d, d))};
  auto moment_errors = [&](const Mat& samples, const MeasurementModel& mdl, const Vec& yy,
                           double* max_z, double* frob) {
    const GaussianSummary post = gaussian_posterior_closed_form(gprior, mdl, yy);
    const Vec mean = sample_mean(samples);
    const Mat cov = sample_covariance(samples);
    double mz = 0;
    for (int j = 0; j < d; ++j) {
      const double se = std::sqrt(post.cov(j, j) / double(samples.rows()));
      mz = std::max(mz, std::abs(mean[j] - post.mean[j]) / se);
    }
    *max_z = mz;
    *frob = (cov - post.cov).norm() / post.cov.norm();
  };

  ExperimentResult res;
  double final_z = 0, final_frob = 0;
  moment_errors(art.samples, model, y, &final_z, &final_frob);

  CsvTable coords({"coord", "mean_analytic", "mean_empirical", "stderr"});
  {
    const GaussianSummary post = gaussian_posterior_closed_form(gprior, model, y);
    const Vec mean = sample_mean(art.samples);
    for (int j = 0; j < d; ++j)
      coords.add_row({double(j + 1), post.mean[j], mean[j],
                      std::sqrt(post.cov(j, j) / double(chains))});
  }
  res.tables.emplace("moments", coords);

  double worst_rung_z = 0, worst_rung_frob = 0;
  if (per_rung) {
    CsvTable rungs({"rung", "eta", "max_abs_z", "cov_frob_rel"});
    for (size_t i = 0; i < art.rung_snapshots.size(); ++i) {
      const double eta_i = art.ladder().etas[i + 1];
      MeasurementModel rung_model(Mat(model.A()), eta_i);
      double z = 0, fr = 0;
      moment_errors(art.rung_snapshots[i], rung_model, art.observations.at_rung(int(i) + 1), &z,
                    &fr);
      worst_rung_z = std::max(worst_rung_z, z);
      worst_rung_frob = std::max(worst_rung_frob, fr);
      rungs.add_row({double(i + 1), eta_i, z, fr});
    }
    res.tables.emplace("rungs", rungs);
  }

  res.metrics = {{"final_max_abs_z", final_z},
                 {"final_cov_frob_rel", final_frob},
                 {"rungs", art.ladder().size() - 1},
                 {"total_steps", art.total_steps},
                 {"chains", chains},
                 {"worst_rung_max_abs_z", worst_rung_z},
                 {"worst_rung_cov_frob_rel", worst_rung_frob},
                 {"wall_seconds", art.wall_seconds}};
  return res;
}

// --- ring ------------------------------------------------------------------

inline ExperimentResult run_ring(const ExperimentSpec& spec) {
  const auto& cfg = spec.params;
  const double w = cfg.get_real("w", 0.1);
  const int n_radii = int(cfg.get_int("n_radii", 20));
  const double r_min = cfg.get_real("r_min", 0.05);
  const double r_max = cfg.get_real("r_max", 1.5);
  const double fd_h = cfg.get_real("fd_h", 1e-3);
  const int n_theta = int(cfg.get_int("n_theta", 4096));
  cfg.reject_unknown();

  auto logp = [&](const Vec& x) { return oracles::ring_log_density_quadrature(w, x, n_theta); };
  CsvTable table({"r", "lambda_radial", "lambda_tangential", "fd_radial", "fd_tangential",
                  "rel_err_radial", "rel_err_tangential"});
  double max_rel_err = 0, max_lambda_radial = -std::numeric_limits<double>::infinity();
  double min_eig = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_radii; ++i) {
    const double r = r_min + (r_max - r_min) * double(i) / double(n_radii - 1);
    const auto eig = ring_hessian_eigs(w, r);
    Vec x(2);
    x << r, 0.0;
    // On the positive x-axis the Hessian is diagonal in (radial, tangential).
    const Mat hess = oracles::fd_hessian_2d(logp, x, fd_h);
    const double fd_r = hess(0, 0), fd_t = hess(1, 1);
    const double er = std::abs(eig.lambda_radial - fd_r) / std::abs(fd_r);
    const double et = std::abs(eig.lambda_tangential - fd_t) / std::abs(fd_t);
    max_rel_err = std::max({max_rel_err, er, et});
    max_lambda_radial = std::max(max_lambda_radial, eig.lambda_radial);
    min_eig = std::min({min_eig, eig.lambda_radial, eig.lambda_tangential});
    table.add_row({r, eig.lambda_radial, eig.lambda_tangential, fd_r, fd_t, er, et});
  }
  const double lt_center = ring_hessian_eigs(w, 1e-4).lambda_tangential;
  const double limit = -1.0 / (w * w) + 0.5 / std::pow(w, 4);

  ExperimentResult res;
  res.tables.emplace("hessian", table);
  res.metrics = {{"w", w},
                 {"lambda_tangential_near_center", lt_center},
                 {"center_limit", limit},
                 {"max_fd_rel_err", max_rel_err},
                 {"max_lambda_radial", max_lambda_radial},
                 {"min_eigenvalue", min_eig},
                 {"global_lower_bound", -1.0 / (w * w)}};
  return res;
}

// --- amplification ----------------------------------------------------------

inline ExperimentResult run_amplification(const ExperimentSpec& spec) {
  const auto& cfg = spec.params;
  const int d = int(cfg.get_int("d", 100));
  const double k = cfg.get_real("k", 4.0);
  const double eps = cfg.get_real("eps", 0.1);
  const double rho = cfg.get_real("rho", 0.3);
  const long n = cfg.get_int("n", 100000);
  cfg.reject_unknown();

  const double sigma_sq = 6.0 / 11.0;
  Vec u = Vec::Zero(d);
  u[0] = 1.0;
  const ShellPerturbation shell(rho, k, eps, u, sigma_sq);
  const PriorSpec prior = PriorSpec::standard_gaussian(d);
  const ScoreOracle base = ScoreOracle::exact(prior);
  const ScoreOracle noisy = shell_perturbed_oracle(base, shell);

  Rng rng = Rng(spec.seed).split(1);
  double sum_e4 = 0;
  long hit_prior = 0, hit_contracted = 0;
  Vec x(d), diff(d);
  const double contracted_sd = std::sqrt(sigma_sq);
  for (long i = 0; i < n; ++i) {
    rng.gaussian_fill(x);
    diff = noisy.score(x, 0.0) - base.score(x, 0.0);
    const double nn = diff.norm();
    sum_e4 += std::pow(nn, 4);
    if (nn >= shell.magnitude) ++hit_prior;
    x *= contracted_sd;  // same uniforms reused as a N(0, sigma^2 I) draw
    if (shell.contains(x)) ++hit_contracted;
  }
  const double e4 = sum_e4 / double(n);
  const double frac_mass = double(hit_prior) / double(n);
  const double mc_rel_sigma =
      std::sqrt(std::max(1.0 - shell.shell_mass_exact, 0.0) /
                (shell.shell_mass_exact * double(n)));
  const double prob_contracted = double(hit_contracted) / double(n);
  const double prob_bound = 1.0 - 2.0 * std::exp(-rho * rho * double(d) / 8.0);

  CsvTable table({"d", "k", "eps", "rho", "shell_mass", "magnitude", "E_e4", "eps4",
                  "mc_rel_sigma", "prob_shell_contracted", "prob_bound", "amplification"});
  table.add_row({double(d), k, eps, rho, shell.shell_mass_exact, shell.magnitude, e4,
                 std::pow(eps, 4), mc_rel_sigma, prob_contracted, prob_bound,
                 shell.magnitude / eps});

  ExperimentResult res;
  res.tables.emplace("amplification", table);
  res.metrics = {{"shell_mass", shell.shell_mass_exact},
                 {"magnitude", shell.magnitude},
                 {"amplification", shell.magnitude / eps},
                 {"E_e4", e4},
                 {"eps4", std::pow(eps, 4)},
                 {"mc_rel_sigma", mc_rel_sigma},
                 {"prior_shell_fraction", frac_mass},
                 {"prob_shell_contracted", prob_contracted},
                 {"prob_bound", prob_bound}};
  return res;
}

// --- compressed-sensing -----------------------------------------------------

inline ExperimentResult run_compressed_sensing(const ExperimentSpec& spec) {
  const auto& cfg = spec.params;
  const int d = int(cfg.get_int("d", 4));
  const int m = int(cfg.get_int("m", 2));
  const double a_norm = cfg.get_real("a_norm", 1.0);
  const double eta = cfg.get_real("eta", 0.5);
  const long trials = cfg.get_int("trials", 500);
  const double delta = cfg.get_real("delta", 0.05);
  const double r_warm = cfg.get_real("r_warm", 1.0);
  const double h = cfg.get_real("h", 5e-3);
  const long oracle_draws = cfg.get_int("oracle_draws", 200000);
  ScheduleParams sched = schedule_from_config(cfg, d, m);
  cfg.reject_unknown();

  Rng root(spec.seed);
  Rng setup = root.split(0xC0);
  MeasurementModel model(random_operator(m, d, a_norm, setup), eta);
  const PriorSpec prior = PriorSpec::standard_gaussian(d);
  const ScoreOracle oracle = ScoreOracle::exact(prior);
  const GaussianSummary gprior{Vec::Zero(d), Mat(Mat::Identity(d, d))};

  // Information-theoretic yardstick: ||x_post - x|| with x ~ p(x|y) and an
  // independent exact posterior draw has law N(0, 2 Sigma_post), identical for
  // every y. Its (1-delta) quantile is the oracle radius r_opt.
  const GaussianSummary post0 = gaussian_posterior_closed_form(gprior, model, Vec::Zero(m));
  Eigen::SelfAdjointEigenSolver<Mat> es((Mat(2.0 * post0.cov)));
  const Vec evals = es.eigenvalues();
  Rng qrng = root.split(0xC1);
  std::vector<double> norms(static_cast<size_t>(oracle_draws));
  for (long i = 0; i < oracle_draws; ++i) {
    double s = 0;
    for (int j = 0; j < d; ++j) {
      const double g = qrng.gaussian();
      s += evals[j] * g * g;
    }
    norms[size_t(i)] = std::sqrt(s);
  }
  std::sort(norms.begin(), norms.end());
  const double r_opt = norms[size_t(std::min<long>(
      long(std::ceil((1.0 - delta) * double(oracle_draws))) - 1, oracle_draws - 1))];

  CsvTable table({"trial", "error", "threshold"});
  std::vector<double> errors(static_cast<size_t>(trials));
  parallel_for(trials, spec.threads, [&](long t) {
    Rng trial_rng = root.split(0xD00 + uint64_t(t));
    const Vec x_true = trial_rng.gaussian_vector(d);
    Vec y = simulate_measurement(x_true, model, trial_rng);
    // Warm start uniform in the R-ball around the truth.
    Vec dir = trial_rng.gaussian_vector(d);
    dir.normalize();
    const Vec x0 = x_true + r_warm * std::pow(trial_rng.uniform(), 1.0 / d) * dir;
    RunConfig run;
    run.schedule = sched;
    run.policy.h = h;
    run.chains = 1;
    run.threads = 1;
    run.seed = trial_rng.split(7).seed();
    auto [xhat, art] = compressed_sensing(prior, oracle, x0, y, model, r_warm, delta, run);
    errors[size_t(t)] = (xhat - x_true).norm();
  });
  long failures = 0;
  for (long t = 0; t < trials; ++t) {
    table.add_row({double(t + 1), errors[size_t(t)], 2.0 * r_opt});
    if (errors[size_t(t)] > 2.0 * r_opt) ++failures;
  }

  ExperimentResult res;
  res.tables.emplace("trials", table);
  res.metrics = {{"r_opt", r_opt},
                 {"failure_rate", double(failures) / double(trials)},
                 {"failure_budget", 5.0 * delta},
                 {"trials", trials},
                 {"delta", delta}};
  return res;
}

// --- schedule-report --------------------------------------------------------

inline ExperimentResult run_schedule_report(const ExperimentSpec& spec) {
  const auto& cfg = spec.params;
  const int d = int(cfg.get_int("d", 4));
  const int m = int(cfg.get_int("m", 2));
  const double a_norm = cfg.get_real("a_norm", 1.0);
  const double eta = cfg.get_real("eta", 1.0);
  ScheduleParams sched = schedule_from_config(cfg, d, m);
  cfg.reject_unknown();

  Mat a = Mat::Zero(m, d);
  a(0, 0) = a_norm;
  MeasurementModel model(std::move(a), eta);
  NoiseLadder ladder = build_admissible_schedule(model, sched);
  const ValidationReport rep = validate_schedule(ladder);

  CsvTable table({"index", "eta", "gamma", "T", "cumulative_T"});
  double cum = 0;
  for (int i = 0; i < ladder.size(); ++i) {
    const bool has_step = i + 1 < ladder.size();
    if (has_step) cum += ladder.times[size_t(i)];
    table.add_row({double(i + 1), ladder.etas[size_t(i)],
                   has_step ? ladder.gammas[size_t(i)] : 0.0,
                   has_step ? ladder.times[size_t(i)] : 0.0, cum});
  }

  const double rho = model.op_norm() / (model.eta() * std::sqrt(sched.alpha));
  const double r_loc = effective_radius(sched, model);
  const double lle = std::log(sched.lambda / sched.eps);
  const double bound = rho * rho * std::sqrt(double(m)) * lle +
                       rho * rho * sched.alpha * r_loc * r_loc / std::sqrt(double(m)) +
                       double(m) * double(m) / (double(m) * lle + sched.alpha * r_loc * r_loc) +
                       std::log(2.0 + sched.lambda * std::sqrt(double(d)) * rho / sched.eps);

  ExperimentResult res;
  res.tables.emplace("schedule", table);
  res.metrics = {{"N", ladder.size()},
                 {"total_time", ladder.total_time()},
                 {"admissible", rep.pass},
                 {"rung_count_bound_formula", bound}};
  return res;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  try {
    if (spec.name == "variance-curve") {
      res = detail::run_variance_curve(spec);
    } else if (spec.name == "gaussian-posterior") {
      res = detail::run_gaussian_posterior(spec, false);
    } else if (spec.name == "rung-stability") {
      res = detail::run_gaussian_posterior(spec, true);
    } else if (spec.name == "ring") {
      res = detail::run_ring(spec);
    } else if (spec.name == "amplification") {
      res = detail::run_amplification(spec);
    } else if (spec.name == "compressed-sensing") {
      res = detail::run_compressed_sensing(spec);
    } else if (spec.name == "schedule-report") {
      res = detail::run_schedule_report(spec);
    } else {
      throw config_error("unknown experiment: " + spec.name);
    }
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("experiment `" + spec.name + "` failed: " + e.what());
  }

  res.manifest = {{"experiment", spec.name},
                  {"seed", spec.seed},
                  {"git", git_describe()},
                  {"wall_seconds",
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                  {"parameters", nlohmann::json::object()}};
  for (const auto& [k, v] : spec.params.entries()) res.manifest["parameters"][k] = v;

  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    for (const auto& [name, table] : res.tables)
      table.write(spec.out_dir + "/" + spec.name + "_" + name + ".csv");
    nlohmann::json manifest = res.manifest;
    manifest["metrics"] = res.metrics;
    std::ofstream f(spec.out_dir + "/" + spec.name + "_manifest.json");
    f << manifest.dump(2) << "\n";
  }
  return res;
}

}  // namespace alps
