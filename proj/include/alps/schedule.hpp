#pragma once

// Admissible noise schedules (eta_i, T_i): the three admissibility clauses,
// the closed-form per-rung gamma choice, and the iterative builder.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "alps/common.hpp"
#include "alps/measurement.hpp"

namespace alps {

inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

struct ScheduleParams {
  double alpha = 1.0;    // strong log-concavity of the prior (or its local surrogate)
  int d = 1;
  int m = 1;
  double lambda = 10.0;  // per-rung failure odds knob, > 1
  double eps = 0.1;      // per-rung TV budget, in (0,1)
  double R = kInfiniteRadius;  // locality radius; infinite means "derive a default"
  double C = 10.0;       // the analysis constant, configurable

  void validate() const {
    require(alpha > 0 && d > 0 && m > 0 && C > 0, "ScheduleParams: positivity violated");
    require(eps > 0 && eps < 1, "ScheduleParams: eps must lie in (0,1)");
    require(lambda > 1, "ScheduleParams: lambda must exceed 1");
    require(R > 0, "ScheduleParams: R must be positive");
  }
};

// Default locality radius for globally log-concave priors: the concentration
// radius r = 2 sqrt(d/alpha) + sqrt(2 log(1/delta))/sqrt(alpha) plus the
// excursion allowance, with delta = eps as the surrogate.
inline double derived_locality_radius(const ScheduleParams& p, const MeasurementModel& model) {
  const double delta = p.eps;
  const double sa = std::sqrt(p.alpha);
  const double r = 2.0 * std::sqrt(double(p.d) / p.alpha) + std::sqrt(2.0 * std::log(1.0 / delta)) / sa;
  const double lle = std::log(p.lambda / p.eps);
  const double na = model.op_norm();
  const double term1 = (p.m + lle) * na / (p.alpha * model.eta_sq()) *
                       (na * r + model.eta() * std::sqrt(p.m + std::log(1.0 / delta)));
  const double term2 = std::sqrt(p.d * std::log(p.d / delta) * (p.m + lle) / p.alpha);
  return r + p.C * (term1 + term2);
}

inline double effective_radius(const ScheduleParams& p, const MeasurementModel& model) {
  return std::isfinite(p.R) ? p.R : derived_locality_radius(p, model);
}

// Largest gamma in (0,1] with a*gamma^2 + b*gamma <= eta_sq/C, where
//   a = C ||A||^2 m^1.5 / alpha
//   b = C ||A||^2 sqrt(m) log(lambda/eps) / alpha + ||A||^2 R^2 / sqrt(m).
// With T(gamma) = C(m gamma + log(lambda/eps))/alpha this is sufficient for
// the admissibility cross-constraint. Solved by the quadratic formula.
inline double max_admissible_gamma(double eta_sq, const ScheduleParams& p,
                                   const MeasurementModel& model) {
  require(eta_sq > 0, "max_admissible_gamma: eta_sq must be positive");
  p.validate();
  const double r_loc = effective_radius(p, model);
  const double na2 = model.op_norm() * model.op_norm();
  const double sm = std::sqrt(double(p.m));
  const double a = p.C * na2 * double(p.m) * sm / p.alpha;
  const double b = p.C * na2 * sm * std::log(p.lambda / p.eps) / p.alpha + na2 * r_loc * r_loc / sm;
  const double rhs = eta_sq / p.C;
  if (a == 0 && b == 0) return 1.0;  // ||A|| = 0: unconstrained
  double gamma;
  if (a == 0) {
    gamma = rhs / b;
  } else {
    gamma = (-b + std::sqrt(b * b + 4.0 * a * rhs)) / (2.0 * a);
  }
  if (!(gamma > 0)) throw schedule_error("max_admissible_gamma: degenerate root");
  return std::min(gamma, 1.0);
}

struct NoiseLadder {
  std::vector<double> etas;    // descending, etas.back() == model.eta
  std::vector<double> gammas;  // gammas[i] = (etas[i]/etas[i+1])^2 - 1, size N-1
  std::vector<double> times;   // mixing times, size N-1
  ScheduleParams params;
  MeasurementModel model;

  int size() const { return int(etas.size()); }
  double total_time() const {
    double s = 0;
    for (double t : times) s += t;
    return s;
  }
};

struct ClauseReport {
  std::string clause;
  bool pass;
  double slack;  // measured / required (>= 1 passes); direction noted per clause
};

struct ValidationReport {
  std::vector<ClauseReport> clauses;
  bool pass = true;

  void add(const std::string& name, bool ok, double slack) {
    clauses.push_back({name, ok, slack});
    pass = pass && ok;
  }
};

// Checks the three admissibility clauses plus structural sanity; failures are
// report entries, never exceptions.
inline ValidationReport validate_schedule(const NoiseLadder& ladder) {
  ValidationReport rep;
  const auto& p = ladder.params;
  const auto& model = ladder.model;
  const int n = ladder.size();
  if (n == 0) {
    rep.add("non-empty", false, 0);
    return rep;
  }

  bool desc = true;
  for (int i = 0; i + 1 < n; ++i) desc = desc && ladder.etas[i] > ladder.etas[i + 1];
  rep.add("etas strictly decreasing", desc, desc ? 1.0 : 0.0);

  const double eta_n = ladder.etas.back();
  rep.add("eta_N equals model eta", eta_n == model.eta(),
          eta_n / model.eta());

  const double target = p.lambda * model.op_norm() / p.eps * std::sqrt(double(p.d) / p.alpha);
  rep.add("eta_1 >= (lambda ||A|| / eps) sqrt(d/alpha)",
          ladder.etas.front() >= target,
          target > 0 ? ladder.etas.front() / target : std::numeric_limits<double>::infinity());

  const double r_loc = effective_radius(p, model);
  const double na4 = std::pow(model.op_norm(), 4);
  bool gam_ok = true, time_ok = true, cross_ok = true;
  double gam_slack = 1, time_slack = std::numeric_limits<double>::infinity();
  double cross_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < n; ++i) {
    const double g = ladder.gammas[i];
    const double t = ladder.times[i];
    if (!(g > 0 && g <= 1.0 + 1e-12)) {
      gam_ok = false;
      gam_slack = std::min(gam_slack, 1.0 / std::max(g, 1e-300));
    }
    const double t_min = p.C * (p.m * g + std::log(p.lambda / p.eps)) / p.alpha;
    if (t < t_min * (1.0 - 1e-12)) time_ok = false;
    time_slack = std::min(time_slack, t / t_min);
    const double lhs = na4 * (t * t * p.m + t * r_loc * r_loc);
    const double rhs = std::pow(ladder.etas[i], 4) / (p.C * g * g);
    if (lhs > rhs * (1.0 + 1e-12)) cross_ok = false;
    if (lhs > 0) cross_slack = std::min(cross_slack, rhs / lhs);
  }
  rep.add("gamma_i in (0, 1]", gam_ok, gam_slack);
  rep.add("T_i >= C (m gamma_i + log(lambda/eps)) / alpha", time_ok, time_slack);
  rep.add("||A||^4 (T_i^2 m + T_i R^2) <= eta_i^4 / (C gamma_i^2)", cross_ok, cross_slack);
  return rep;
}

// Iterates eta'_{i+1} = sqrt((1+gamma'_i) eta'_i^2) upward from eta until the
// eta_1 clause holds, then reverses. T_i is set to its lower bound with
// equality (admissibility only lower-bounds it).
inline NoiseLadder build_admissible_schedule(const MeasurementModel& model,
                                             const ScheduleParams& params,
                                             long max_rungs = 1000000) {
  params.validate();
  require(params.d == model.d() && params.m == model.m(),
          "build_admissible_schedule: params (d, m) must match the model");

  const double target = params.lambda * model.op_norm() / params.eps *
                        std::sqrt(double(params.d) / params.alpha);
  std::vector<double> up_etas{model.eta()};
  std::vector<double> up_gammas;
  while (up_etas.back() < target) {
    const double eta_sq = up_etas.back() * up_etas.back();
    const double g = max_admissible_gamma(eta_sq, params, model);
    up_gammas.push_back(g);
    up_etas.push_back(std::sqrt((1.0 + g) * eta_sq));
    if (long(up_gammas.size()) > max_rungs) {
      throw schedule_error(
          "build_admissible_schedule: rung cap exceeded (alpha=" + std::to_string(params.alpha) +
          ", lambda=" + std::to_string(params.lambda) + ", eps=" + std::to_string(params.eps) +
          ", R=" + std::to_string(effective_radius(params, model)) +
          ", ||A||=" + std::to_string(model.op_norm()) + ", eta=" + std::to_string(model.eta()) + ")");
    }
  }

  NoiseLadder ladder{{}, {}, {}, params, model};
  const int n = int(up_etas.size());
  ladder.etas.assign(up_etas.rbegin(), up_etas.rend());
  ladder.gammas.resize(n - 1);
  ladder.times.resize(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    ladder.gammas[i] = up_gammas[size_t(n - 2 - i)];
    ladder.times[i] = params.C * (params.m * ladder.gammas[i] + std::log(params.lambda / params.eps)) /
                      params.alpha;
  }
  // eta_N must equal the model noise bitwise, not within rounding.
  ladder.etas.back() = model.eta();

  auto rep = validate_schedule(ladder);
  if (!rep.pass) {
    std::string bad;
    for (const auto& c : rep.clauses)
      if (!c.pass) bad += (bad.empty() ? "" : "; ") + c.clause;
    throw schedule_error("build_admissible_schedule: constructed ladder failed validation: " + bad);
  }
  return ladder;
}

// Scalar-sequence simulator for the growth recurrence behind the rung-count
// bound: x_{i+1} = (1 + gamma_i) x_i with the largest gamma_i <= 1 satisfying
// a gamma^2 + b gamma <= x_i. Returns the number of steps until x_i >= B.
inline long growth_steps_to_reach(double x0, double a, double b, double bound,
                                  long cap = 100000000) {
  require(x0 > 0 && a >= 0 && b >= 0 && bound > 0, "growth_steps_to_reach: bad parameters");
  double x = x0;
  long k = 0;
  while (x < bound) {
    double g;
    if (a == 0 && b == 0) {
      g = 1.0;
    } else if (a == 0) {
      g = std::min(1.0, x / b);
    } else {
      g = std::min(1.0, (-b + std::sqrt(b * b + 4.0 * a * x)) / (2.0 * a));
    }
    x *= (1.0 + g);
    if (++k > cap) throw schedule_error("growth_steps_to_reach: cap exceeded");
  }
  return k;
}

}  // namespace alps
