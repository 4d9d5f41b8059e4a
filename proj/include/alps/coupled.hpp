#pragma once

// Coupled observation ladder y_1, ..., y_N generated backward from y:
// y_N = y and y_i = y_{i+1} + N(0, (eta_i^2 - eta_{i+1}^2) I_m).

#include <vector>

#include "alps/common.hpp"
#include "alps/rng.hpp"
#include "alps/schedule.hpp"

namespace alps {

struct CoupledObservations {
  std::vector<Vec> ys;  // ys[0] is the noisiest rung (index 1 in the ladder)
  const NoiseLadder* ladder = nullptr;

  const Vec& at_rung(int i) const { return ys[size_t(i)]; }  // 0-based
  int size() const { return int(ys.size()); }
};

inline CoupledObservations build_coupled_ladder(const Vec& y, const NoiseLadder& ladder,
                                                Rng& rng) {
  require(y.size() == ladder.model.m(), "build_coupled_ladder: y has wrong dimension");
  require(all_finite(y), "build_coupled_ladder: y must be finite");
  const int n = ladder.size();
  CoupledObservations obs;
  obs.ladder = &ladder;
  obs.ys.assign(size_t(n), Vec());
  obs.ys[size_t(n - 1)] = y;
  for (int i = n - 2; i >= 0; --i) {
    const double var = ladder.etas[size_t(i)] * ladder.etas[size_t(i)] -
                       ladder.etas[size_t(i + 1)] * ladder.etas[size_t(i + 1)];
    if (var > 0) {
      obs.ys[size_t(i)] = obs.ys[size_t(i + 1)] + std::sqrt(var) * rng.gaussian_vector(y.size());
    } else {
      // A zero-variance rung copies the vector bitwise and consumes no draws.
      obs.ys[size_t(i)] = obs.ys[size_t(i + 1)];
    }
  }
  return obs;
}

}  // namespace alps
