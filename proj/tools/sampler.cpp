// Command-line front end: `sampler schedule|run|experiment`.
// Exit codes: 0 success, 2 validation/config failure, 3 divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "alps/config.hpp"
#include "alps/experiments.hpp"
#include "alps/io.hpp"
#include "alps/samplers.hpp"

namespace {

alps::PriorSpec prior_from_config(const alps::Config& cfg, int d) {
  const std::string kind = cfg.get_string("prior", "isotropic_gaussian");
  if (kind == "isotropic_gaussian") {
    alps::Vec mean = alps::Vec::Zero(d);
    if (cfg.has("prior_mean")) {
      const auto vals = cfg.get_real_list("prior_mean");
      alps::require(int(vals.size()) == d, "prior_mean has wrong length");
      for (int i = 0; i < d; ++i) mean[i] = vals[size_t(i)];
    }
    return alps::PriorSpec::isotropic_gaussian(mean, cfg.get_real("prior_var", 1.0));
  }
  if (kind == "ring") return alps::PriorSpec::ring(cfg.get_real("ring_width", 0.1));
  if (kind == "mixture") {
    const auto weights = cfg.get_real_list("mixture_weights");
    const auto flat = cfg.get_real_list("mixture_centers");  // centers concatenated
    alps::require(flat.size() == weights.size() * size_t(d),
                  "mixture_centers must hold weights*d entries");
    std::vector<alps::Vec> centers(weights.size(), alps::Vec(d));
    for (size_t j = 0; j < weights.size(); ++j)
      for (int i = 0; i < d; ++i) centers[j][i] = flat[j * size_t(d) + size_t(i)];
    return alps::PriorSpec::mixture(weights, centers, cfg.get_real("mixture_var", 1.0));
  }
  throw alps::config_error("unknown prior kind: " + kind);
}

alps::Vec vec_from_list(const std::vector<double>& vals) {
  alps::Vec v(Eigen::Index(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v[Eigen::Index(i)] = vals[i];
  return v;
}

int cmd_schedule(const std::string& config_path, const std::string& out_dir) {
  auto cfg = alps::Config::parse_file(config_path);
  const int d = int(cfg.get_int("d"));
  const int m = int(cfg.get_int("m"));
  const double a_norm = cfg.get_real("a_norm");
  const double eta = cfg.get_real("eta");
  alps::ScheduleParams p;
  p.d = d;
  p.m = m;
  p.alpha = cfg.get_real("alpha", 1.0);
  p.lambda = cfg.get_real("lambda", 10.0);
  p.eps = cfg.get_real("eps", 0.1);
  p.C = cfg.get_real("C", 10.0);
  p.R = cfg.get_real("R", alps::kInfiniteRadius);
  cfg.reject_unknown();

  alps::Mat a = alps::Mat::Zero(m, d);
  a(0, 0) = a_norm;
  alps::MeasurementModel model(std::move(a), eta);
  const auto ladder = alps::build_admissible_schedule(model, p);

  std::printf("index,eta,gamma,T,cumulative_T\n");
  double cum = 0;
  for (int i = 0; i < ladder.size(); ++i) {
    if (i + 1 < ladder.size()) {
      cum += ladder.times[size_t(i)];
      std::printf("%d,%s,%s,%s,%s\n", i + 1, alps::format_double(ladder.etas[size_t(i)]).c_str(),
                  alps::format_double(ladder.gammas[size_t(i)]).c_str(),
                  alps::format_double(ladder.times[size_t(i)]).c_str(),
                  alps::format_double(cum).c_str());
    } else {
      std::printf("%d,%s,,,%s\n", i + 1, alps::format_double(ladder.etas[size_t(i)]).c_str(),
                  alps::format_double(cum).c_str());
    }
  }
  if (!out_dir.empty()) {
    alps::ExperimentSpec spec{"schedule-report", alps::Config::parse_file(config_path), 0, out_dir, 0};
    alps::run_experiment(spec);
  }
  return 0;
}

int cmd_run(const std::string& config_path, uint64_t seed, const std::string& out_dir,
            int threads) {
  auto cfg = alps::Config::parse_file(config_path);
  const std::string algorithm = cfg.get_string("algorithm", "posterior");
  const int d = int(cfg.get_int("d"));
  const int m = int(cfg.get_int("m"));
  const double eta = cfg.get_real("eta");

  alps::Mat a;
  if (cfg.has("A_file")) {
    a = alps::read_matrix_csv(cfg.get_string("A_file"));
    alps::require(a.rows() == m && a.cols() == d, "A_file shape mismatch");
  } else {
    const auto flat = cfg.get_real_list("A");  // row-major m*d entries
    alps::require(flat.size() == size_t(m) * size_t(d), "A must hold m*d entries");
    a = alps::Mat(m, d);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = flat[size_t(i) * size_t(d) + size_t(j)];
  }
  alps::MeasurementModel model(std::move(a), eta);
  const alps::PriorSpec prior = prior_from_config(cfg, d);
  const alps::ScoreOracle oracle = alps::ScoreOracle::exact(prior);

  alps::RunConfig run;
  run.schedule.d = d;
  run.schedule.m = m;
  run.schedule.alpha = cfg.get_real("alpha", 1.0);
  run.schedule.lambda = cfg.get_real("lambda", 10.0);
  run.schedule.eps = cfg.get_real("eps", 0.1);
  run.schedule.C = cfg.get_real("C", 10.0);
  run.schedule.R = cfg.get_real("R", alps::kInfiniteRadius);
  run.policy.h = cfg.get_real("h", 0.0);
  run.policy.guard = cfg.get_real("guard", 1e6);
  run.chains = int(cfg.get_int("chains", 1));
  run.seed = seed;
  run.threads = threads;
  run.init = cfg.get_string("init", "exact") == "reverse-diffusion" ? alps::InitKind::reverse_diffusion
                                                                    : alps::InitKind::exact;

  alps::Vec y;
  alps::Rng sim_rng = alps::Rng(seed).split(0xFACE);
  if (cfg.has("y")) {
    y = vec_from_list(cfg.get_real_list("y"));
    alps::require(y.size() == m, "y has wrong length");
  } else {
    const alps::Vec x_true = alps::sample_prior(prior, sim_rng);
    y = alps::simulate_measurement(x_true, model, sim_rng);
  }

  alps::RunArtifact art;
  alps::Vec xhat;
  if (algorithm == "posterior") {
    cfg.reject_unknown();
    art = alps::posterior_sampler(prior, oracle, y, model, run);
  } else if (algorithm == "gaussian") {
    const alps::Vec x0 = vec_from_list(cfg.get_real_list("x0"));
    const double sigma = cfg.get_real("sigma");
    cfg.reject_unknown();
    art = alps::gaussian_sampler(prior, oracle, x0, y, model, sigma, run);
  } else if (algorithm == "compressed-sensing") {
    const alps::Vec x0 = vec_from_list(cfg.get_real_list("x0"));
    const double r_warm = cfg.get_real("R_warm");
    const double delta = cfg.get_real("delta");
    cfg.reject_unknown();
    auto [x_rec, a_rec] = alps::compressed_sensing(prior, oracle, x0, y, model, r_warm, delta, run);
    xhat = x_rec;
    art = std::move(a_rec);
  } else {
    throw alps::config_error("unknown algorithm: " + algorithm);
  }

  alps::write_artifact(art, out_dir.empty() ? "." : out_dir, algorithm);
  if (xhat.size() > 0) {
    std::printf("reconstruction:");
    for (Eigen::Index i = 0; i < xhat.size(); ++i) std::printf(" %s", alps::format_double(xhat[i]).c_str());
    std::printf("\n");
  }
  std::printf("chains=%ld rungs=%d steps=%lld wall=%.2fs\n", long(art.samples.rows()),
              art.ladder().size(), art.total_steps, art.wall_seconds);
  return 0;
}

int cmd_experiment(const std::string& name, const std::string& config_path, uint64_t seed,
                   const std::string& out_dir, int threads) {
  alps::ExperimentSpec spec;
  spec.name = name;
  spec.params = config_path.empty() ? alps::Config() : alps::Config::parse_file(config_path);
  spec.seed = seed;
  spec.out_dir = out_dir;
  spec.threads = threads;
  const auto res = alps::run_experiment(spec);
  std::cout << res.metrics.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"annealed Langevin posterior sampling toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, experiment_name;
  uint64_t seed = 0;
  int threads = 0;

  auto* sched = app.add_subcommand("schedule", "print an admissible noise ladder as CSV");
  sched->add_option("--config", config_path, "config file")->required();
  sched->add_option("--out", out_dir, "also write schedule-report artifacts here");

  auto* run = app.add_subcommand("run", "run a sampler and write its artifact");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--seed", seed, "rng seed")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker cap (0 = hardware)");

  auto* exp = app.add_subcommand("experiment", "run a named experiment");
  exp->add_option("name", experiment_name, "experiment tag")->required();
  exp->add_option("--config", config_path, "config file");
  exp->add_option("--seed", seed, "rng seed")->required();
  exp->add_option("--out", out_dir, "output directory")->required();
  exp->add_option("--threads", threads, "worker cap (0 = hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sched->parsed()) return cmd_schedule(config_path, out_dir);
    if (run->parsed()) return cmd_run(config_path, seed, out_dir, threads);
    return cmd_experiment(experiment_name, config_path, seed, out_dir, threads);
  } catch (const alps::divergence_error& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 3;
  } catch (const alps::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const alps::invalid_input& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const alps::schedule_error& e) {
    std::fprintf(stderr, "schedule error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
