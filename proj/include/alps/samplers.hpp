#pragma once

// The three top-level algorithms: annealed posterior sampling, posterior
// sampling given an extra Gaussian measurement, and competitive compressed
// sensing. One sample per chain; batch statistics come from many chains.

#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "alps/common.hpp"
#include "alps/coupled.hpp"
#include "alps/langevin.hpp"
#include "alps/measurement.hpp"
#include "alps/parallel.hpp"
#include "alps/rng.hpp"
#include "alps/schedule.hpp"
#include "alps/scores.hpp"

namespace alps {

enum class InitKind { exact, reverse_diffusion };

struct RunConfig {
  ScheduleParams schedule;
  StepPolicy policy;
  int chains = 1;
  InitKind init = InitKind::exact;
  uint64_t seed = 0;
  bool record_rungs = false;  // keep per-rung ensemble snapshots
  int threads = 0;            // 0 = hardware concurrency
  double reverse_horizon = 5.0;

  void validate() const {
    require(chains >= 1, "RunConfig: chains must be >= 1");
    schedule.validate();
  }
};

struct RunArtifact {
  Mat samples;                      // chains x d
  std::vector<Mat> rung_snapshots;  // ensemble after each mixing step (optional)
  std::shared_ptr<const NoiseLadder> ladder_ptr;  // stable across moves
  CoupledObservations observations;
  uint64_t seed = 0;
  double wall_seconds = 0;
  long long total_steps = 0;

  const NoiseLadder& ladder() const { return *ladder_ptr; }
};

namespace detail {

// Streams: 0 reserved for the coupled ladder, chain c uses split(c + 1).
inline constexpr uint64_t kLadderStream = 0;

inline Vec initialize_chain(const PriorSpec& prior, const ScoreOracle& oracle,
                            const std::optional<std::pair<Vec, double>>& conditioning,
                            const RunConfig& cfg, Rng& rng) {
  if (cfg.init == InitKind::exact) {
    if (conditioning)
      return sample_conditioned_prior(prior, conditioning->first, conditioning->second, rng);
    return sample_prior(prior, rng);
  }
  StepPolicy pol = cfg.policy;
  if (pol.is_auto()) pol.h = 1e-2;
  return reverse_diffusion_init(oracle, prior.dim(), cfg.reverse_horizon, pol, rng);
}

// One annealed chain through every rung of a prebuilt ladder.
inline Vec run_chain(Vec x0, const ScoreOracle& oracle, const NoiseLadder& ladder,
                     const CoupledObservations& obs, const StepPolicy& policy, Rng rng,
                     long* steps, std::vector<Vec>* rung_out) {
  const Mat& a = ladder.model.A();
  const Mat at = a.transpose();
  ChainState state{std::move(x0), 0.0, rng};
  Vec resid(ladder.model.m());
  for (int i = 0; i + 1 < ladder.size(); ++i) {
    const Vec& y_next = obs.at_rung(i + 1);
    const double eta_sq = ladder.etas[size_t(i + 1)] * ladder.etas[size_t(i + 1)];
    DriftFn drift = [&](const Vec& x, Vec& out) {
      oracle.score_into(x, 0.0, out);
      resid.noalias() = y_next - a * x;
      out.noalias() += at * resid / eta_sq;
    };
    try {
      euler_maruyama_run(state, drift, ladder.times[size_t(i)], policy, nullptr, steps);
    } catch (const divergence_error& e) {
      throw divergence_error(e.what(), i + 1);
    }
    if (rung_out) (*rung_out)[size_t(i)] = state.x;
  }
  return state.x;
}

inline StepPolicy resolve_policy(const RunConfig& cfg, const MeasurementModel& model) {
  StepPolicy pol = cfg.policy;
  if (pol.is_auto()) pol.h = auto_step_size(cfg.schedule, model, 1.0, cfg.schedule.eps);
  return pol;
}

inline RunArtifact annealed_run(const PriorSpec& prior, const ScoreOracle& oracle, const Vec& y,
                                const MeasurementModel& model,
                                const std::optional<std::pair<Vec, double>>& conditioning,
                                const RunConfig& cfg) {
  cfg.validate();
  require(y.size() == model.m(), "posterior_sampler: y has wrong dimension");
  require(cfg.schedule.d == model.d() && cfg.schedule.m == model.m(),
          "posterior_sampler: schedule params inconsistent with the model");
  const auto t0 = std::chrono::steady_clock::now();

  RunArtifact art;
  art.seed = cfg.seed;
  art.ladder_ptr = std::make_shared<const NoiseLadder>(build_admissible_schedule(model, cfg.schedule));
  Rng root(cfg.seed);
  Rng ladder_rng = root.split(kLadderStream);
  art.observations = build_coupled_ladder(y, art.ladder(), ladder_rng);

  const int n_rungs = art.ladder().size();
  const StepPolicy pol = resolve_policy(cfg, model);
  art.samples.resize(cfg.chains, model.d());
  if (cfg.record_rungs && n_rungs > 1)
    art.rung_snapshots.assign(size_t(n_rungs - 1), Mat(cfg.chains, model.d()));

  std::atomic<long long> steps_total{0};
  parallel_for(cfg.chains, cfg.threads, [&](long c) {
    Rng chain_rng = root.split(uint64_t(c) + 1);
    Vec x0 = initialize_chain(prior, oracle, conditioning, cfg, chain_rng);
    long steps = 0;
    std::vector<Vec> rungs;
    if (cfg.record_rungs && n_rungs > 1) rungs.assign(size_t(n_rungs - 1), Vec());
    Vec xn = run_chain(std::move(x0), oracle, art.ladder(), art.observations, pol, chain_rng,
                       &steps, cfg.record_rungs && n_rungs > 1 ? &rungs : nullptr);
    art.samples.row(c) = xn.transpose();
    for (size_t i = 0; i < rungs.size(); ++i) art.rung_snapshots[i].row(c) = rungs[i].transpose();
    steps_total += steps;
  });
  art.total_steps = steps_total.load();
  art.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return art;
}

}  // namespace detail

// Algorithm: build the admissible ladder, couple the observations backward,
// initialize X_1 ~ p(x), then run one frozen-drift mixing step per rung with
// score s(x) + A^T (y_{i+1} - A x) / eta_{i+1}^2.
inline RunArtifact posterior_sampler(const PriorSpec& prior, const ScoreOracle& oracle,
                                     const Vec& y, const MeasurementModel& model,
                                     const RunConfig& cfg) {
  return detail::annealed_run(prior, oracle, y, model, std::nullopt, cfg);
}

// Posterior sampling given an extra Gaussian measurement x0 = x + N(0, sigma^2 I):
// run the annealed sampler against the conditioned prior p_{x0}, whose score is
// oracle.score(x, 0) + (x0 - x)/sigma^2 and whose initialization is exact.
inline RunArtifact gaussian_sampler(const PriorSpec& prior, const ScoreOracle& oracle,
                                    const Vec& x0, const Vec& y, const MeasurementModel& model,
                                    double sigma, const RunConfig& cfg) {
  require(sigma > 0, "gaussian_sampler: sigma must be positive");
  require(x0.size() == model.d(), "gaussian_sampler: x0 has wrong dimension");
  const double sigma_sq = sigma * sigma;
  ScoreOracle cond = conditioned_oracle(oracle, x0, sigma_sq);
  return detail::annealed_run(prior, cond, y, model, std::make_pair(x0, sigma_sq), cfg);
}

// Competitive compressed sensing from a rough estimate x0 with ||x0 - x|| <= R:
// blur the estimate to x0' = x0 + N(0, sigma^2 I) with sigma = R/delta, then
// draw one posterior sample as the reconstruction.
inline std::pair<Vec, RunArtifact> compressed_sensing(const PriorSpec& prior,
                                                      const ScoreOracle& oracle, const Vec& x0,
                                                      const Vec& y, const MeasurementModel& model,
                                                      double r_warm, double delta,
                                                      const RunConfig& cfg) {
  require(r_warm > 0, "compressed_sensing: R must be positive");
  require(delta > 0 && delta < 1, "compressed_sensing: delta must lie in (0,1)");
  const double sigma = r_warm / delta;
  Rng blur_rng = Rng(cfg.seed).split(0xb1u);
  const Vec x0_blurred = x0 + sigma * blur_rng.gaussian_vector(x0.size());
  RunArtifact art = gaussian_sampler(prior, oracle, x0_blurred, y, model, sigma, cfg);
  Vec xhat = art.samples.row(0).transpose();
  return {std::move(xhat), std::move(art)};
}

}  // namespace alps
