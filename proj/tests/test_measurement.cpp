#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "alps/coupled.hpp"
#include "alps/eval.hpp"
#include "alps/measurement.hpp"
#include "alps/schedule.hpp"

using namespace alps;

namespace {

// Hand ladder over a fixed eta sequence; params only matter to the validator.
NoiseLadder make_ladder(std::vector<double> etas, const MeasurementModel& model) {
  NoiseLadder ladder{std::move(etas), {}, {}, ScheduleParams{}, model};
  ladder.params.d = int(model.d());
  ladder.params.m = int(model.m());
  for (size_t i = 0; i + 1 < ladder.etas.size(); ++i) {
    const double g = ladder.etas[i] * ladder.etas[i] / (ladder.etas[i + 1] * ladder.etas[i + 1]) - 1;
    ladder.gammas.push_back(g);
    ladder.times.push_back(1.0);
  }
  return ladder;
}

}  // namespace

TEST_CASE("operator norm is cached and equals the top singular value") {
  Mat a(2, 3);
  a << 1, 2, 0, -1, 1, 3;
  MeasurementModel model(a, 0.5);
  const double direct = a.jacobiSvd().singularValues()(0);
  REQUIRE(model.op_norm() == Catch::Approx(direct).epsilon(1e-10));
}

TEST_CASE("model rejects bad inputs") {
  Mat a = Mat::Identity(2, 2);
  REQUIRE_THROWS_AS(MeasurementModel(a, 0.0), invalid_input);
  REQUIRE_THROWS_AS(MeasurementModel(a, -1.0), invalid_input);
  Mat bad = a;
  bad(0, 0) = std::nan("");
  REQUIRE_THROWS_AS(MeasurementModel(bad, 1.0), invalid_input);
}

TEST_CASE("A = 0 measurement is the raw noise draw") {
  MeasurementModel model(Mat::Zero(3, 2), 1.0);
  Vec x(2);
  x << 4, -7;
  Rng rng(11), ref(11);
  const Vec y = simulate_measurement(x, model, rng);
  REQUIRE(y == ref.gaussian_vector(3));
}

TEST_CASE("noiseless limit returns Ax") {
  Mat a(1, 1);
  a << 1;
  Vec x(1);
  x << 2;
  Rng rng(3);
  MeasurementModel model(a, 1e-300);
  const Vec y = simulate_measurement(x, model, rng);
  REQUIRE(y[0] == Catch::Approx(2.0).margin(1e-290));
}

TEST_CASE("simulate_measurement rejects dimension mismatch") {
  MeasurementModel model(Mat::Identity(2, 2), 1.0);
  Rng rng(1);
  Vec x(3);
  x.setZero();
  REQUIRE_THROWS_AS(simulate_measurement(x, model, rng), invalid_input);
}

TEST_CASE("Monte Carlo mean of y matches Ax") {
  Mat a(1, 2);
  a << 1, 1;
  MeasurementModel model(a, 0.5);
  Vec x(2);
  x << 1, 2;
  Rng root(99);
  const int n = 100000;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    Rng rng = root.split(uint64_t(i));
    acc += simulate_measurement(x, model, rng)[0];
  }
  acc /= n;
  REQUIRE(std::abs(acc - 3.0) < 3.0 * 0.5 / std::sqrt(double(n)));
}

TEST_CASE("N = 1 coupled ladder returns y unchanged") {
  MeasurementModel model(Mat::Identity(2, 2), 1.0);
  auto ladder = make_ladder({1.0}, model);
  Vec y(2);
  y << 3, -1;
  Rng rng(5);
  const auto obs = build_coupled_ladder(y, ladder, rng);
  REQUIRE(obs.size() == 1);
  REQUIRE(obs.at_rung(0) == y);
}

TEST_CASE("zero-variance rung copies bitwise") {
  MeasurementModel model(Mat::Identity(2, 2), 1.0);
  auto ladder = make_ladder({1.0, 1.0}, model);
  Vec y(2);
  y << 0.1, -0.2;
  Rng rng(5);
  const auto obs = build_coupled_ladder(y, ladder, rng);
  REQUIRE(obs.at_rung(0) == obs.at_rung(1));
}

TEST_CASE("increment covariance is (eta_i^2 - eta_{i+1}^2) I") {
  MeasurementModel model(Mat::Identity(2, 2), 1.0);
  auto ladder = make_ladder({2.0, 1.0}, model);
  Vec y(2);
  y << 0, 0;
  Rng root(17);
  const int n = 100000;
  Mat diffs(n, 2);
  for (int i = 0; i < n; ++i) {
    Rng rng = root.split(uint64_t(i));
    const auto obs = build_coupled_ladder(y, ladder, rng);
    diffs.row(i) = (obs.at_rung(0) - obs.at_rung(1)).transpose();
  }
  const Mat cov = sample_covariance(diffs);
  REQUIRE(cov(0, 0) == Catch::Approx(3.0).epsilon(0.05));
  REQUIRE(cov(1, 1) == Catch::Approx(3.0).epsilon(0.05));
  REQUIRE(std::abs(cov(0, 1)) < 0.05 * 3.0);
}

TEST_CASE("marginal consistency: Cov(y_i) = A A^T + eta_i^2 I at every rung") {
  Mat a(2, 2);
  a << 1.0, 0.3, -0.2, 0.8;
  MeasurementModel model(a, 0.7);
  auto ladder = make_ladder({2.1, 1.3, 0.7}, model);
  Rng root(23);
  const int n = 20000;
  std::vector<Mat> rungs(3, Mat(n, 2));
  for (int i = 0; i < n; ++i) {
    Rng rng = root.split(uint64_t(i));
    const Vec x = rng.gaussian_vector(2);
    const Vec y = simulate_measurement(x, model, rng);
    const auto obs = build_coupled_ladder(y, ladder, rng);
    for (int r = 0; r < 3; ++r) rungs[size_t(r)].row(i) = obs.at_rung(r).transpose();
  }
  const Mat aat = a * a.transpose();
  for (int r = 0; r < 3; ++r) {
    const Mat cov = sample_covariance(rungs[size_t(r)]);
    Mat expected = aat;
    expected.diagonal().array() += ladder.etas[size_t(r)] * ladder.etas[size_t(r)];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        REQUIRE(cov(i, j) == Catch::Approx(expected(i, j)).margin(0.05 * expected.norm()));
  }
}

TEST_CASE("same seed gives an identical ladder") {
  MeasurementModel model(Mat::Identity(2, 2), 1.0);
  auto ladder = make_ladder({2.0, 1.4, 1.0}, model);
  Vec y(2);
  y << 1, 2;
  Rng r1(31), r2(31);
  const auto a = build_coupled_ladder(y, ladder, r1);
  const auto b = build_coupled_ladder(y, ladder, r2);
  for (int i = 0; i < a.size(); ++i) REQUIRE(a.at_rung(i) == b.at_rung(i));
}
