#pragma once

// Closed-form oracles and bound utilities used by tests and experiments.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "alps/common.hpp"
#include "alps/measurement.hpp"
#include "alps/rng.hpp"

namespace alps {

struct GaussianSummary {
  Vec mean;
  Mat cov;

  void validate() const {
    require(cov.rows() == cov.cols() && cov.rows() == mean.size(),
            "GaussianSummary: shape mismatch");
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() <=
                1e-10 * (1.0 + cov.cwiseAbs().maxCoeff()),
            "GaussianSummary: covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    require(es.eigenvalues().minCoeff() >= -1e-10, "GaussianSummary: covariance must be PSD");
  }
};

// Conjugate posterior for y = Ax + N(0, eta^2 I): precision adds A^T A / eta^2.
inline GaussianSummary gaussian_posterior_closed_form(const GaussianSummary& prior,
                                                      const MeasurementModel& model,
                                                      const Vec& y) {
  prior.validate();
  require(y.size() == model.m() && prior.mean.size() == model.d(),
          "gaussian_posterior_closed_form: dimension mismatch");
  Eigen::LLT<Mat> prior_llt(Mat(prior.cov));
  require(prior_llt.info() == Eigen::Success,
          "gaussian_posterior_closed_form: prior covariance must be invertible");
  const Eigen::Index d = model.d();
  Mat prior_prec = prior_llt.solve(Mat::Identity(d, d));
  Mat post_prec = prior_prec + model.A().transpose() * model.A() / model.eta_sq();
  Eigen::LLT<Mat> post_llt(post_prec);
  Mat post_cov = post_llt.solve(Mat::Identity(d, d));
  post_cov = 0.5 * (post_cov + post_cov.transpose()).eval();
  Vec post_mean =
      post_llt.solve(prior_prec * prior.mean + model.A().transpose() * y / model.eta_sq());
  return {std::move(post_mean), std::move(post_cov)};
}

inline double infinity_sentinel() { return std::numeric_limits<double>::infinity(); }

// Exact chi^2(p || q) for Gaussians; +infinity when 2 Sigma_p^{-1} - Sigma_q^{-1}
// is not positive definite (the integrability boundary).
inline double chi_square_gaussians(const GaussianSummary& p, const GaussianSummary& q) {
  p.validate();
  q.validate();
  require(p.mean.size() == q.mean.size(), "chi_square_gaussians: dimension mismatch");
  const Eigen::Index d = p.mean.size();
  Eigen::LLT<Mat> lp(Mat(p.cov)), lq(Mat(q.cov));
  require(lq.info() == Eigen::Success, "chi_square_gaussians: q covariance must be invertible");
  require(lp.info() == Eigen::Success, "chi_square_gaussians: p covariance must be invertible");
  Mat prec_p = lp.solve(Mat::Identity(d, d));
  Mat prec_q = lq.solve(Mat::Identity(d, d));
  Mat prec_star = 2.0 * prec_p - prec_q;
  Eigen::LLT<Mat> ls((Mat(0.5 * (prec_star + prec_star.transpose()))));
  if (ls.info() != Eigen::Success) return infinity_sentinel();
  const Vec h = 2.0 * prec_p * p.mean - prec_q * q.mean;
  auto half_logdet = [](const Eigen::LLT<Mat>& llt, Eigen::Index n) {
    double s = 0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::log(llt.matrixL()(i, i));
    return s;
  };
  // log integral of p^2/q in canonical form.
  const double log_ratio = -2.0 * half_logdet(lp, d) + half_logdet(lq, d) - half_logdet(ls, d) +
                           0.5 * h.dot(ls.solve(h)) - p.mean.dot(prec_p * p.mean) +
                           0.5 * q.mean.dot(prec_q * q.mean);
  return std::expm1(log_ratio);
}

inline double kl_gaussians(const GaussianSummary& p, const GaussianSummary& q) {
  const Eigen::Index d = p.mean.size();
  Eigen::LLT<Mat> lq(Mat(q.cov)), lp(Mat(p.cov));
  Mat prec_q = lq.solve(Mat::Identity(d, d));
  auto half_logdet = [](const Eigen::LLT<Mat>& llt, Eigen::Index n) {
    double s = 0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::log(llt.matrixL()(i, i));
    return s;
  };
  const Vec dm = q.mean - p.mean;
  return 0.5 * ((prec_q * p.cov).trace() + dm.dot(prec_q * dm) - double(d)) +
         half_logdet(lq, d) - half_logdet(lp, d);
}

// min(Pinsker bound sqrt(KL/2), chi^2 bound 0.5 sqrt(chi^2)); both are upper
// bounds on TV(p, q).
inline double tv_upper_bounds(const GaussianSummary& p, const GaussianSummary& q) {
  const double pinsker = std::sqrt(std::max(kl_gaussians(p, q), 0.0) / 2.0);
  const double chi = chi_square_gaussians(p, q);
  const double chi_bound = std::isfinite(chi) ? 0.5 * std::sqrt(std::max(chi, 0.0))
                                              : infinity_sentinel();
  return std::min(pinsker, chi_bound);
}

// Energy-distance V-statistic, fixed summation order:
//   2/(nm) sum ||a_i - b_j|| - 1/n^2 sum ||a_i - a_j|| - 1/m^2 sum ||b_i - b_j||.
inline double energy_distance(const Mat& samples_a, const Mat& samples_b) {
  require(samples_a.rows() > 0 && samples_b.rows() > 0, "energy_distance: empty sample set");
  require(samples_a.cols() == samples_b.cols(), "energy_distance: dimension mismatch");
  const Eigen::Index n = samples_a.rows(), m = samples_b.rows();
  double cross = 0, within_a = 0, within_b = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) cross += (samples_a.row(i) - samples_b.row(j)).norm();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) within_a += (samples_a.row(i) - samples_a.row(j)).norm();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) within_b += (samples_b.row(i) - samples_b.row(j)).norm();
  return 2.0 * cross / double(n * m) - within_a / double(n * n) - within_b / double(m * m);
}

// Permutation p-value for H0: both sets share one law. Precomputes the pooled
// distance matrix once; permutations only reindex it.
inline double energy_distance_permutation_pvalue(const Mat& samples_a, const Mat& samples_b,
                                                 int permutations, Rng& rng) {
  const Eigen::Index n = samples_a.rows(), m = samples_b.rows(), total = n + m;
  Mat pooled(total, samples_a.cols());
  pooled.topRows(n) = samples_a;
  pooled.bottomRows(m) = samples_b;
  Mat dist(total, total);
  for (Eigen::Index i = 0; i < total; ++i) {
    dist(i, i) = 0;
    for (Eigen::Index j = i + 1; j < total; ++j) {
      const double v = (pooled.row(i) - pooled.row(j)).norm();
      dist(i, j) = v;
      dist(j, i) = v;
    }
  }
  auto stat_for = [&](const std::vector<Eigen::Index>& idx) {
    double cross = 0, wa = 0, wb = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) wa += dist(idx[size_t(i)], idx[size_t(j)]);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) wb += dist(idx[size_t(n + i)], idx[size_t(n + j)]);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) cross += dist(idx[size_t(i)], idx[size_t(n + j)]);
    return 2.0 * cross / double(n * m) - wa / double(n * n) - wb / double(m * m);
  };
  std::vector<Eigen::Index> idx(static_cast<size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  const double observed = stat_for(idx);
  int at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    for (Eigen::Index i = total - 1; i > 0; --i) {
      const Eigen::Index j = Eigen::Index(rng() % uint64_t(i + 1));
      std::swap(idx[size_t(i)], idx[size_t(j)]);
    }
    if (stat_for(idx) >= observed) ++at_least;
  }
  return double(1 + at_least) / double(1 + permutations);
}

// Laurent-Massart chi-square thresholds: each tail has mass <= e^{-t}.
struct LaurentMassartThresholds {
  double upper;  // m + 2 sqrt(mt) + 2t
  double lower;  // m - 2 sqrt(mt)
};

inline LaurentMassartThresholds laurent_massart_tail(int m, double t) {
  require(m > 0 && t >= 0, "laurent_massart_tail: bad arguments");
  const double s = 2.0 * std::sqrt(double(m) * t);
  return {double(m) + s + 2.0 * t, double(m) - s};
}

// E[exp(alpha ||Z||^2 + beta ||Z||)] <= exp(beta^2/(4 gamma)) (1-2(alpha+gamma))^{-d/2}.
inline double gaussian_mgf_bound(double alpha, double beta, double gamma, int d) {
  require(gamma > 0, "gaussian_mgf_bound: gamma must be positive");
  require(d > 0, "gaussian_mgf_bound: d must be positive");
  require(alpha + gamma < 0.5, "gaussian_mgf_bound: requires alpha + gamma < 1/2");
  return std::exp(beta * beta / (4.0 * gamma)) *
         std::pow(1.0 - 2.0 * (alpha + gamma), -0.5 * double(d));
}

// Mutual-information bound on E[TV(p(x|y_1), p(x))]: ||A|| m2 / (2 eta_1).
inline double mi_tv_bound(const MeasurementModel& model, double m2, double eta1) {
  require(m2 >= 0 && eta1 > 0, "mi_tv_bound: bad arguments");
  return model.op_norm() * m2 / (2.0 * eta1);
}

// Sample moments used all over the test suites.
inline Vec sample_mean(const Mat& samples) {
  return samples.colwise().mean().transpose();
}

inline Mat sample_covariance(const Mat& samples) {
  const Eigen::Index n = samples.rows();
  require(n > 1, "sample_covariance: need at least two samples");
  Mat centered = samples.rowwise() - samples.colwise().mean();
  return Mat(centered.transpose() * centered / double(n - 1));
}

}  // namespace alps
