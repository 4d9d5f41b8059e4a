#pragma once

// Discretized SDE integrators. The mixing step freezes the whole drift at the
// step start: x_{t+h} = x_t + h * drift(x_t) + sqrt(2h) * xi.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "alps/common.hpp"
#include "alps/measurement.hpp"
#include "alps/rng.hpp"
#include "alps/schedule.hpp"
#include "alps/scores.hpp"

namespace alps {

struct ChainState {
  Vec x;
  double elapsed = 0;
  Rng rng;
};

struct StepPolicy {
  double h = 0;             // explicit step size; 0 requests auto
  long max_steps = 1L << 40;
  double guard = 1e6;       // divergence guard on ||x||
  int record_stride = 0;    // 0 disables trajectory recording

  bool is_auto() const { return h <= 0; }
};

// Rows (t, x_1..x_d) appended every `stride` accepted steps.
struct TrajectoryRecorder {
  std::vector<double> times;
  std::vector<Vec> points;

  void add(double t, const Vec& x) {
    times.push_back(t);
    points.push_back(x);
  }
};

// drift writes into its second argument; signature chosen so hot loops do not
// allocate.
using DriftFn = std::function<void(const Vec&, Vec&)>;

// Advances ceil(T/h) Euler-Maruyama steps; the final partial step uses the
// remaining time. Throws divergence_error when the state leaves the guard
// region or turns non-finite.
inline void euler_maruyama_run(ChainState& state, const DriftFn& drift, double t_total,
                               const StepPolicy& policy, TrajectoryRecorder* rec = nullptr,
                               long* step_counter = nullptr) {
  require(t_total > 0, "euler_maruyama_run: T must be positive");
  require(!policy.is_auto(), "euler_maruyama_run: policy must carry an explicit step size here");
  const Eigen::Index d = state.x.size();
  Vec b(d), noise(d);
  double remaining = t_total;
  long steps = 0;
  while (remaining > 0) {
    const double h = std::min(policy.h, remaining);
    drift(state.x, b);
    for (Eigen::Index i = 0; i < d; ++i) noise[i] = state.rng.gaussian();
    state.x += h * b + std::sqrt(2.0 * h) * noise;
    state.elapsed += h;
    remaining -= h;
    ++steps;
    if (!state.x.allFinite() || state.x.norm() > policy.guard)
      throw divergence_error("euler_maruyama_run: chain diverged after " +
                             std::to_string(steps) + " steps");
    if (rec && policy.record_stride > 0 && steps % policy.record_stride == 0)
      rec->add(state.elapsed, state.x);
    if (steps > policy.max_steps)
      throw divergence_error("euler_maruyama_run: max_steps exceeded");
  }
  if (step_counter) *step_counter += steps;
}

// Vanilla posterior Langevin: no annealing, the full posterior drift at every
// step, started from an exact prior draw.
inline ChainState plain_posterior_langevin(const PriorSpec& prior, const MeasurementModel& model,
                                           const Vec& y, double t_total, const StepPolicy& policy,
                                           Rng rng, TrajectoryRecorder* rec = nullptr) {
  require(y.size() == model.m(), "plain_posterior_langevin: y has wrong dimension");
  ChainState state{sample_prior(prior, rng), 0.0, rng};
  if (t_total <= 0) return state;
  const Mat& a = model.A();
  const Mat at = a.transpose();
  const double eta_sq = model.eta_sq();
  Vec resid(model.m());
  DriftFn drift = [&](const Vec& x, Vec& out) {
    smoothed_score_into(prior, 0.0, x, out);
    resid.noalias() = y - a * x;
    out.noalias() += at * resid / eta_sq;
  };
  euler_maruyama_run(state, drift, t_total, policy, rec);
  return state;
}

// Closed-form Var(X_t) for the 1D Gaussian testbed of the plain posterior
// Langevin run, averaged over y; alpha = (1 + eta^2)/eta^2.
inline double variance_curve(double t, double eta_sq) {
  require(t >= 0 && eta_sq > 0, "variance_curve: bad arguments");
  const double alpha = (1.0 + eta_sq) / eta_sq;
  const double e1 = std::exp(-alpha * t), e2 = e1 * e1;
  return e2 + (1.0 - e2) / alpha + (1.0 - e1) * (1.0 - e1) / (1.0 + eta_sq);
}

inline double variance_curve_min_time(double eta_sq) {
  return eta_sq * std::log(2.0) / (1.0 + eta_sq);
}

// Reverse SDE of the variance-preserving OU forward process, uniform time
// grid, X_0 ~ N(0, I_d). At reverse time t the state sits at noise level
// sigma_t^2 = 1 - e^{-2(T-t)} on the data scale; the marginal equals the
// prior scaled by e^{-(T-t)} and smoothed by e^{2(T-t)} - 1, so the drift is
//   X_t + 2 e^{T-t} s_{e^{2(T-t)}-1}(e^{T-t} X_t).
// Querying the unit-scale smoothed score without this rescaling does not
// reproduce the prior (the Gaussian self-consistency check fails), so the
// scaled form is used.
inline Vec reverse_diffusion_init(const ScoreOracle& oracle, int d, double t_total,
                                  const StepPolicy& policy, Rng& rng) {
  require(d > 0, "reverse_diffusion_init: d must be positive");
  ChainState state{rng.gaussian_vector(d), 0.0, rng};
  if (t_total > 0) {
    Vec scaled(d), sc(d);
    DriftFn drift = [&](const Vec& x, Vec& out) {
      const double u = std::max(t_total - state.elapsed, 0.0);
      const double scale = std::exp(u);
      const double sigma_sq = std::max(scale * scale - 1.0, 0.0);
      scaled = scale * x;
      oracle.score_into(scaled, sigma_sq, sc);
      out = x + 2.0 * scale * sc;
    };
    euler_maruyama_run(state, drift, t_total, policy);
  }
  rng = state.rng;
  return state.x;
}

// Step-size floor from the analysis, exposed for the auto policy. K is the
// iteration surrogate; explicit step sizes always override this.
inline double auto_step_size(const ScheduleParams& params, const MeasurementModel& model,
                             double lipschitz_over_alpha, double delta = 0.1) {
  params.validate();
  const double rho = model.op_norm() / (model.eta() * std::sqrt(params.alpha));
  const double d = params.d, m = params.m;
  const double r_tilde = 2.0 * std::sqrt(d) + std::sqrt(2.0 * std::log(1.0 / delta));
  const double k_poly = rho * rho *
                            ((m * m * std::pow(rho, 4) + 1.0) * r_tilde * r_tilde +
                             std::pow(m, 3) * rho * rho + d * m) /
                            std::sqrt(m) +
                        m / d + std::log(std::max(d, 2.0));
  const double k_sur = std::max(1.0, k_poly / (params.eps * delta));
  const double lt = lipschitz_over_alpha + rho * rho;
  const double r_loc = std::isfinite(params.R)
                           ? params.R
                           : std::sqrt(k_sur * std::sqrt(m) / params.alpha) / std::max(rho, 1e-12);
  const double branch1 = (1.0 / (k_sur * k_sur * delta)) * std::sqrt(params.alpha / m) /
                         (params.alpha * lt *
                          (params.alpha * r_loc * lt + rho * std::sqrt(m * params.alpha)));
  const double branch2 =
      1.0 / (std::pow(k_sur, 4) * delta * delta * params.alpha * m * d * lt * lt);
  return std::min(branch1, branch2) / params.C;
}

}  // namespace alps
