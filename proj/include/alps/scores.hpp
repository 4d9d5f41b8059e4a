#pragma once

// Analytic priors and their exact score oracles: Gaussians, isotropic
// mixtures, and the circle-Gaussian ring. Smoothing by N(0, sigma^2 I) stays
// closed-form for every variant (Gaussian widths add in quadrature), so the
// same code path serves plain, smoothed, posterior and conditioned scores.

#include <cmath>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "alps/common.hpp"
#include "alps/measurement.hpp"
#include "alps/rng.hpp"
#include "alps/special.hpp"

namespace alps {

struct IsotropicGaussian {
  Vec mean;
  double var;
};

struct GeneralGaussian {
  Vec mean;
  Mat cov;
};

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Vec> centers;
  double comp_var;  // shared isotropic component variance
};

struct RingPrior {
  double width;  // d is forced to 2
};

class PriorSpec {
 public:
  using Variant = std::variant<IsotropicGaussian, GeneralGaussian, GaussianMixture, RingPrior>;

  PriorSpec(Variant v) : v_(std::move(v)) { validate(); }

  static PriorSpec isotropic_gaussian(Vec mean, double var) {
    return PriorSpec(IsotropicGaussian{std::move(mean), var});
  }
  static PriorSpec standard_gaussian(int d) {
    return isotropic_gaussian(Vec::Zero(d), 1.0);
  }
  static PriorSpec gaussian(Vec mean, Mat cov) {
    return PriorSpec(GeneralGaussian{std::move(mean), std::move(cov)});
  }
  static PriorSpec mixture(std::vector<double> w, std::vector<Vec> c, double comp_var) {
    return PriorSpec(GaussianMixture{std::move(w), std::move(c), comp_var});
  }
  static PriorSpec ring(double width) { return PriorSpec(RingPrior{width}); }

  const Variant& v() const { return v_; }
  int dim() const {
    if (auto* g = std::get_if<IsotropicGaussian>(&v_)) return int(g->mean.size());
    if (auto* g = std::get_if<GeneralGaussian>(&v_)) return int(g->mean.size());
    if (auto* g = std::get_if<GaussianMixture>(&v_)) return int(g->centers[0].size());
    return 2;
  }
  bool is_ring() const { return std::holds_alternative<RingPrior>(v_); }

 private:
  void validate() const {
    if (auto* g = std::get_if<IsotropicGaussian>(&v_)) {
      require(g->var > 0 && all_finite(g->mean), "PriorSpec: bad isotropic Gaussian");
    } else if (auto* g = std::get_if<GeneralGaussian>(&v_)) {
      require(all_finite(g->mean) && all_finite(g->cov), "PriorSpec: non-finite Gaussian");
      require(g->cov.rows() == g->cov.cols() && g->cov.rows() == g->mean.size(),
              "PriorSpec: covariance shape mismatch");
      require((g->cov - g->cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1 + g->cov.cwiseAbs().maxCoeff()),
              "PriorSpec: covariance must be symmetric");
      Eigen::SelfAdjointEigenSolver<Mat> es(g->cov);
      require(es.eigenvalues().minCoeff() > 0, "PriorSpec: covariance must be positive definite");
    } else if (auto* g = std::get_if<GaussianMixture>(&v_)) {
      require(!g->weights.empty() && g->weights.size() == g->centers.size(),
              "PriorSpec: mixture weights/centers mismatch");
      require(g->comp_var > 0, "PriorSpec: component variance must be positive");
      double sum = 0;
      for (double w : g->weights) {
        require(w > 0, "PriorSpec: mixture weights must be positive");
        sum += w;
      }
      require(std::abs(sum - 1.0) <= 1e-12, "PriorSpec: mixture weights must sum to 1");
      for (const auto& c : g->centers)
        require(all_finite(c) && c.size() == g->centers[0].size(), "PriorSpec: bad mixture center");
    } else {
      require(std::get<RingPrior>(v_).width > 0, "PriorSpec: ring width must be positive");
    }
  }

  Variant v_;
};

namespace detail {

inline double log_gauss_iso(const Vec& x, const Vec& mean, double var) {
  const double d = double(x.size());
  return -0.5 * d * std::log(6.283185307179586476925286766559 * var) -
         (x - mean).squaredNorm() / (2.0 * var);
}

}  // namespace detail

// Log density of the prior convolved with N(0, sigma_sq I); sigma_sq = 0 is
// the prior itself.
inline double prior_log_density(const PriorSpec& prior, double sigma_sq, const Vec& x) {
  require(sigma_sq >= 0, "prior_log_density: sigma_sq must be >= 0");
  require(x.size() == prior.dim(), "prior_log_density: x has wrong dimension");
  if (auto* g = std::get_if<IsotropicGaussian>(&prior.v())) {
    return detail::log_gauss_iso(x, g->mean, g->var + sigma_sq);
  }
  if (auto* g = std::get_if<GeneralGaussian>(&prior.v())) {
    Mat cov = g->cov;
    cov.diagonal().array() += sigma_sq;
    Eigen::LLT<Mat> llt(cov);
    const Vec delta = x - g->mean;
    const Vec half = llt.matrixL().solve(delta);
    double logdet = 0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
      logdet += std::log(llt.matrixL()(i, i));
    return -0.5 * double(x.size()) * std::log(6.283185307179586476925286766559) - logdet -
           0.5 * half.squaredNorm();
  }
  if (auto* g = std::get_if<GaussianMixture>(&prior.v())) {
    const double v = g->comp_var + sigma_sq;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> ls(g->weights.size());
    for (size_t j = 0; j < g->weights.size(); ++j) {
      ls[j] = std::log(g->weights[j]) + detail::log_gauss_iso(x, g->centers[j], v);
      best = std::max(best, ls[j]);
    }
    double acc = 0;
    for (double l : ls) acc += std::exp(l - best);
    return best + std::log(acc);
  }
  const auto& ring = std::get<RingPrior>(prior.v());
  const double w2 = ring.width * ring.width + sigma_sq;
  const double r = x.norm();
  return -std::log(6.283185307179586476925286766559 * w2) - (r * r + 1.0) / (2.0 * w2) +
         log_bessel_i0(r / w2);
}

// Score of the smoothed prior, written into `out` (hot-path form).
inline void smoothed_score_into(const PriorSpec& prior, double sigma_sq, const Vec& x, Vec& out) {
  if (auto* g = std::get_if<IsotropicGaussian>(&prior.v())) {
    out = (g->mean - x) / (g->var + sigma_sq);
    return;
  }
  if (auto* g = std::get_if<GeneralGaussian>(&prior.v())) {
    Mat cov = g->cov;
    cov.diagonal().array() += sigma_sq;
    out = cov.llt().solve(g->mean - x);
    return;
  }
  if (auto* g = std::get_if<GaussianMixture>(&prior.v())) {
    // Responsibilities through log-sum-exp; well-separated components
    // underflow a naive ratio.
    const double v = g->comp_var + sigma_sq;
    const size_t k = g->weights.size();
    double best = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> ls;
    ls.assign(k, 0.0);
    for (size_t j = 0; j < k; ++j) {
      ls[j] = std::log(g->weights[j]) - (x - g->centers[j]).squaredNorm() / (2.0 * v);
      best = std::max(best, ls[j]);
    }
    double norm = 0;
    for (size_t j = 0; j < k; ++j) {
      ls[j] = std::exp(ls[j] - best);
      norm += ls[j];
    }
    out.setZero(x.size());
    for (size_t j = 0; j < k; ++j) out += (ls[j] / norm) * (g->centers[j] - x);
    out /= v;
    return;
  }
  const auto& ring = std::get<RingPrior>(prior.v());
  const double w2 = ring.width * ring.width + sigma_sq;
  const double r = x.norm();
  if (r == 0) {
    out.setZero(x.size());  // radial symmetry; documented limit
    return;
  }
  const double ratio = bessel_i1_over_i0(r / w2);
  out = -(1.0 - ratio / r) / w2 * x;
}

inline Vec smoothed_score(const PriorSpec& prior, double sigma_sq, const Vec& x) {
  require(sigma_sq >= 0, "smoothed_score: sigma_sq must be >= 0");
  require(x.size() == prior.dim(), "smoothed_score: x has wrong dimension");
  require(all_finite(x), "smoothed_score: x must be finite");
  Vec out(x.size());
  smoothed_score_into(prior, sigma_sq, x, out);
  return out;
}

inline Vec prior_score(const PriorSpec& prior, const Vec& x) {
  return smoothed_score(prior, 0.0, x);
}

// Exact draw from the prior.
inline Vec sample_prior(const PriorSpec& prior, Rng& rng) {
  if (auto* g = std::get_if<IsotropicGaussian>(&prior.v()))
    return g->mean + std::sqrt(g->var) * rng.gaussian_vector(g->mean.size());
  if (auto* g = std::get_if<GeneralGaussian>(&prior.v())) {
    Eigen::LLT<Mat> llt(g->cov);
    return g->mean + Mat(llt.matrixL()) * rng.gaussian_vector(g->mean.size());
  }
  if (auto* g = std::get_if<GaussianMixture>(&prior.v())) {
    double u = rng.uniform(), acc = 0;
    size_t j = 0;
    for (; j + 1 < g->weights.size(); ++j) {
      acc += g->weights[j];
      if (u <= acc) break;
    }
    return g->centers[j] + std::sqrt(g->comp_var) * rng.gaussian_vector(g->centers[j].size());
  }
  const auto& ring = std::get<RingPrior>(prior.v());
  const double theta = 6.283185307179586476925286766559 * rng.uniform();
  Vec x(2);
  x << std::cos(theta), std::sin(theta);
  return x + ring.width * rng.gaussian_vector(2);
}

// Score oracle: the evaluation contract handed to the samplers. Exact priors
// carry their PriorSpec so conditioning stays closed-form downstream.
class ScoreOracle {
 public:
  enum class Budget { exact, shell_perturbed };

  struct Impl {
    virtual ~Impl() = default;
    virtual void score_into(const Vec& x, double sigma_sq, Vec& out) const = 0;
    virtual bool has_log_density() const { return false; }
    virtual double log_density(const Vec&, double) const {
      throw invalid_input("ScoreOracle: log density unavailable for this oracle");
    }
  };

  ScoreOracle(std::shared_ptr<const Impl> impl, Budget budget,
              std::optional<PriorSpec> prior = std::nullopt)
      : impl_(std::move(impl)), budget_(budget), prior_(std::move(prior)) {}

  static ScoreOracle exact(const PriorSpec& prior);

  Vec score(const Vec& x, double sigma_sq = 0.0) const {
    Vec out(x.size());
    impl_->score_into(x, sigma_sq, out);
    return out;
  }
  void score_into(const Vec& x, double sigma_sq, Vec& out) const {
    impl_->score_into(x, sigma_sq, out);
  }
  bool has_log_density() const { return impl_->has_log_density(); }
  double log_density(const Vec& x, double sigma_sq = 0.0) const {
    return impl_->log_density(x, sigma_sq);
  }
  Budget budget() const { return budget_; }
  const std::optional<PriorSpec>& prior() const { return prior_; }

 private:
  std::shared_ptr<const Impl> impl_;
  Budget budget_;
  std::optional<PriorSpec> prior_;
};

namespace detail {

struct PriorOracleImpl final : ScoreOracle::Impl {
  explicit PriorOracleImpl(PriorSpec p) : prior(std::move(p)) {}
  void score_into(const Vec& x, double sigma_sq, Vec& out) const override {
    require(sigma_sq >= 0, "score: sigma_sq must be >= 0");
    smoothed_score_into(prior, sigma_sq, x, out);
  }
  bool has_log_density() const override { return true; }
  double log_density(const Vec& x, double sigma_sq) const override {
    return prior_log_density(prior, sigma_sq, x);
  }
  PriorSpec prior;
};

}  // namespace detail

inline ScoreOracle ScoreOracle::exact(const PriorSpec& prior) {
  return ScoreOracle(std::make_shared<detail::PriorOracleImpl>(prior), Budget::exact, prior);
}

// Posterior score by Bayes' rule: s(x) + A^T (y - Ax) / eta^2.
inline Vec posterior_score(const ScoreOracle& base, const MeasurementModel& model, const Vec& y,
                           const Vec& x) {
  require(x.size() == model.d() && y.size() == model.m(),
          "posterior_score: dimension mismatch");
  return base.score(x, 0.0) + model.A().transpose() * (y - model.A() * x) / model.eta_sq();
}

// Gradient in Y of log N(Z; c Y, c sigma1_sq I) with c = sigma2^2/(sigma1^2+sigma2^2):
// (1/sigma1^2) (Z - c Y). Direct differentiation of the stated conditional
// density; the flipped overall sign sometimes quoted for it does not match
// the density's own finite differences.
inline Vec conditional_gaussian_score(const Vec& y, const Vec& z, double sigma1_sq,
                                      double sigma2_sq) {
  require(sigma1_sq > 0 && sigma2_sq > 0, "conditional_gaussian_score: variances must be positive");
  require(y.size() == z.size(), "conditional_gaussian_score: dimension mismatch");
  const double c = sigma2_sq / (sigma1_sq + sigma2_sq);
  return (z - c * y) / sigma1_sq;
}

// Conditioning on a spherical Gaussian observation x0 = x + N(0, sigma^2 I)
// keeps Gaussians and isotropic mixtures in-family; the ring does not reduce.
inline std::optional<PriorSpec> condition_on_gaussian(const PriorSpec& prior, const Vec& x0,
                                                      double sigma_sq) {
  require(sigma_sq > 0, "condition_on_gaussian: sigma_sq must be positive");
  require(x0.size() == prior.dim(), "condition_on_gaussian: x0 has wrong dimension");
  if (auto* g = std::get_if<IsotropicGaussian>(&prior.v())) {
    const double vc = 1.0 / (1.0 / g->var + 1.0 / sigma_sq);
    return PriorSpec::isotropic_gaussian(vc * (g->mean / g->var + x0 / sigma_sq), vc);
  }
  if (auto* g = std::get_if<GeneralGaussian>(&prior.v())) {
    Mat prec = g->cov.llt().solve(Mat::Identity(g->cov.rows(), g->cov.cols()));
    Mat prec_c = prec;
    prec_c.diagonal().array() += 1.0 / sigma_sq;
    Mat cov_c = prec_c.llt().solve(Mat::Identity(prec.rows(), prec.cols()));
    cov_c = 0.5 * (cov_c + cov_c.transpose()).eval();
    Vec mean_c = cov_c * (prec * g->mean + x0 / sigma_sq);
    return PriorSpec::gaussian(std::move(mean_c), std::move(cov_c));
  }
  if (auto* g = std::get_if<GaussianMixture>(&prior.v())) {
    const double s2 = g->comp_var;
    const double vc = s2 * sigma_sq / (s2 + sigma_sq);
    std::vector<double> lw(g->weights.size());
    double best = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < g->weights.size(); ++j) {
      lw[j] = std::log(g->weights[j]) + detail::log_gauss_iso(x0, g->centers[j], s2 + sigma_sq);
      best = std::max(best, lw[j]);
    }
    double norm = 0;
    for (double& l : lw) {
      l = std::exp(l - best);
      norm += l;
    }
    std::vector<double> w(g->weights.size());
    std::vector<Vec> c(g->weights.size());
    for (size_t j = 0; j < g->weights.size(); ++j) {
      w[j] = lw[j] / norm;
      c[j] = (sigma_sq * g->centers[j] + s2 * x0) / (s2 + sigma_sq);
    }
    // Guard against exact zeros after underflow in extreme separations.
    double resum = 0;
    for (double& wj : w) {
      wj = std::max(wj, 1e-300);
      resum += wj;
    }
    for (double& wj : w) wj /= resum;
    return PriorSpec::mixture(std::move(w), std::move(c), vc);
  }
  return std::nullopt;
}

// Smoothed score of the conditioned prior p_{x0}(x) ~ p(x) N(x0; x, sigma^2 I).
// t^2 = 0 is exact for any base (the Gaussian factor contributes (x0-x)/sigma^2).
// Bases carrying an analytic prior use exact conjugate conditioning. Otherwise
// the correction term instantiates conditional_gaussian_score with
// sigma1^2 = t^2, sigma2^2 = sigma^2 (x0 and x^(t) share the latent x), which
// is the estimator the annealed sampler is analyzed with, not an identity.
inline Vec conditioned_smoothed_score(const ScoreOracle& base, const Vec& x0, double sigma_sq,
                                      double t_sq, const Vec& x) {
  require(sigma_sq > 0, "conditioned_smoothed_score: sigma_sq must be positive");
  require(t_sq >= 0, "conditioned_smoothed_score: t_sq must be >= 0");
  require(x0.size() == x.size(), "conditioned_smoothed_score: dimension mismatch");
  if (t_sq == 0) return base.score(x, 0.0) + (x0 - x) / sigma_sq;
  if (base.prior()) {
    if (auto cond = condition_on_gaussian(*base.prior(), x0, sigma_sq))
      return smoothed_score(*cond, t_sq, x);
  }
  return base.score(x, t_sq) + conditional_gaussian_score(x, x0, t_sq, sigma_sq);
}

// Exact draw from the conditioned prior p_{x0}. The ring case samples the
// circle angle from its von Mises posterior, then the conjugate Gaussian.
inline Vec sample_conditioned_prior(const PriorSpec& prior, const Vec& x0, double sigma_sq,
                                    Rng& rng);

namespace detail {

// Best-Fisher rejection sampler for the von Mises distribution.
inline double sample_von_mises(double mu, double kappa, Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  if (kappa < 1e-10) return kTwoPi * rng.uniform() - kTwoPi / 2 + mu;
  const double a = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double b = (a - std::sqrt(2.0 * a)) / (2.0 * kappa);
  const double r = (1.0 + b * b) / (2.0 * b);
  double f = 0;
  for (;;) {
    const double u1 = rng.uniform();
    const double z = std::cos(3.14159265358979323846 * u1);
    f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    const double u2 = rng.uniform();
    if (c * (2.0 - c) - u2 > 0) break;
    if (std::log(c / u2) + 1.0 - c >= 0) break;
  }
  const double u3 = rng.uniform();
  return mu + (u3 > 0.5 ? 1.0 : -1.0) * std::acos(f);
}

struct ConditionedOracleImpl final : ScoreOracle::Impl {
  ConditionedOracleImpl(ScoreOracle b, Vec anchor, double s2)
      : base(std::move(b)), x0(std::move(anchor)), sigma_sq(s2) {}
  void score_into(const Vec& x, double sigma_sq_query, Vec& out) const override {
    if (sigma_sq_query == 0) {
      base.score_into(x, 0.0, out);
      out += (x0 - x) / sigma_sq;
    } else {
      out = conditioned_smoothed_score(base, x0, sigma_sq, sigma_sq_query, x);
    }
  }
  ScoreOracle base;
  Vec x0;
  double sigma_sq;
};

}  // namespace detail

inline Vec sample_conditioned_prior(const PriorSpec& prior, const Vec& x0, double sigma_sq,
                                    Rng& rng) {
  if (auto cond = condition_on_gaussian(prior, x0, sigma_sq)) return sample_prior(*cond, rng);
  const auto& ring = std::get<RingPrior>(prior.v());
  const double w2 = ring.width * ring.width;
  const double mu = std::atan2(x0[1], x0[0]);
  const double kappa = x0.norm() / (w2 + sigma_sq);
  const double theta = detail::sample_von_mises(mu, kappa, rng);
  Vec u(2);
  u << std::cos(theta), std::sin(theta);
  const Vec mean = (sigma_sq * u + w2 * x0) / (w2 + sigma_sq);
  return mean + std::sqrt(w2 * sigma_sq / (w2 + sigma_sq)) * rng.gaussian_vector(2);
}

// Oracle for the conditioned prior: score(x, 0) = base(x, 0) + (x0 - x)/sigma^2,
// smoothed queries via conditioned_smoothed_score.
inline ScoreOracle conditioned_oracle(const ScoreOracle& base, const Vec& x0, double sigma_sq) {
  require(sigma_sq > 0, "conditioned_oracle: sigma_sq must be positive");
  std::optional<PriorSpec> cond;
  if (base.prior() && base.budget() == ScoreOracle::Budget::exact)
    cond = condition_on_gaussian(*base.prior(), x0, sigma_sq);
  return ScoreOracle(std::make_shared<detail::ConditionedOracleImpl>(base, x0, sigma_sq),
                     base.budget(), std::move(cond));
}

// Adversarial score error concentrated on a thin chi-square shell.
struct ShellPerturbation {
  double rho;       // shell half-width, in (0, min(1/2, 1/sigma_sq - 1))
  double k;         // L^k budget exponent, > 1
  double eps;       // L^k error budget, in (0, 1)
  Vec u;            // unit direction
  double sigma_sq;  // concentrated variance the shell is centered on

  double shell_mass_exact = 0;  // Pr_{x ~ N(0,I_d)}[x in shell], exact chi-square CDF
  double magnitude = 0;         // M = eps * mass^(-1/k)

  ShellPerturbation(double rho_, double k_, double eps_, Vec u_, double sigma_sq_)
      : rho(rho_), k(k_), eps(eps_), u(std::move(u_)), sigma_sq(sigma_sq_) {
    require(sigma_sq > 0 && sigma_sq < 1, "ShellPerturbation: sigma_sq must be in (0,1)");
    require(rho > 0 && rho < std::min(0.5, 1.0 / sigma_sq - 1.0),
            "ShellPerturbation: rho out of range");
    require(k > 1, "ShellPerturbation: k must exceed 1");
    require(eps > 0 && eps < 1, "ShellPerturbation: eps must be in (0,1)");
    require(std::abs(u.norm() - 1.0) <= 1e-12, "ShellPerturbation: u must be a unit vector");
    shell_mass_exact = shell_mass(int(u.size()), sigma_sq, rho);
    magnitude = eps * std::pow(shell_mass_exact, -1.0 / k);
  }

  bool contains(const Vec& x) const {
    const double n2 = x.squaredNorm();
    const double center = sigma_sq * double(u.size());
    return std::abs(n2 - center) <= rho * center;
  }
};

namespace detail {

struct ShellOracleImpl final : ScoreOracle::Impl {
  ShellOracleImpl(ScoreOracle b, ShellPerturbation s) : base(std::move(b)), shell(std::move(s)) {}
  void score_into(const Vec& x, double sigma_sq, Vec& out) const override {
    base.score_into(x, sigma_sq, out);
    // Smoothed queries pass through unperturbed.
    if (sigma_sq == 0 && shell.contains(x)) out += shell.magnitude * shell.u;
  }
  ScoreOracle base;
  ShellPerturbation shell;
};

}  // namespace detail

inline ScoreOracle shell_perturbed_oracle(const ScoreOracle& base, const ShellPerturbation& spec) {
  return ScoreOracle(std::make_shared<detail::ShellOracleImpl>(base, spec),
                     ScoreOracle::Budget::shell_perturbed);
}

// Hessian eigenvalues of the ring log density at radius r. With z = r/w^2 and
// f(r) = log p(r):
//   lambda_radial     = f''(r) = -1/w^2 + [d/dz (I1/I0)](z) / w^4
//   lambda_tangential = f'(r)/r = (-1 + (1/r) I1(z)/I0(z)) / w^2
// Both tend to -1/w^2 + 1/(2 w^4) as r -> 0 (the crater center). Evaluated
// through exponentially scaled Bessel ratios; naive I0 overflows at z ~ 1e4.
struct RingHessianEigs {
  double lambda_radial;
  double lambda_tangential;
};

inline RingHessianEigs ring_hessian_eigs(double w, double r) {
  require(w > 0, "ring_hessian_eigs: width must be positive");
  require(r >= 0, "ring_hessian_eigs: radius must be >= 0");
  const double w2 = w * w;
  const double limit = -1.0 / w2 + 0.5 / (w2 * w2);
  if (r == 0) return {limit, limit};
  const double z = r / w2;
  const double lr = -1.0 / w2 + bessel_ratio_derivative(z) / (w2 * w2);
  const double lt = (-1.0 + bessel_i1_over_i0(z) / r) / w2;
  return {lr, lt};
}

}  // namespace alps
