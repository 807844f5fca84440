#include "binfam/quad_exp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace binfam {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

}  // namespace

struct QuadExpFamily::Cache {
  std::once_flag once;
  double log_norm = 0.0;
  std::vector<double> probs;
  std::vector<double> cdf;
};

QuadExpFamily::QuadExpFamily(Matrix params, std::optional<double> log_norm)
    : params_(std::move(params)), attached_(log_norm), cache_(std::make_shared<Cache>()) {
  if (params_.rows() != params_.cols() || params_.rows() < 1)
    throw ArgumentError("quadexp family: parameter matrix must be square with d >= 1");
  for (Eigen::Index i = 0; i < params_.rows(); ++i)
    for (Eigen::Index j = 0; j < params_.cols(); ++j) {
      if (!std::isfinite(params_(i, j))) throw ArgumentError("quadexp family: parameters must be finite");
      if (j > i && params_(i, j) != 0.0)
        throw ArgumentError("quadexp family: parameter matrix must be lower triangular");
    }
  if (attached_ && !std::isfinite(*attached_)) throw ArgumentError("quadexp family: log normalizer must be finite");
}

double QuadExpFamily::energy(const BinaryVector& gamma) const {
  if (gamma.size() != dim()) throw ArgumentError("quadexp energy: dimension mismatch");
  double e = 0.0;
  for (int i = 0; i < dim(); ++i) {
    if (!gamma[i]) continue;
    e += params_(i, i);
    for (int j = 0; j < i; ++j)
      if (gamma[j]) e += params_(i, j);
  }
  return e;
}

const QuadExpFamily::Cache& QuadExpFamily::cache() const {
  std::call_once(cache_->once, [this] {
    const int d = dim();
    require_enumerable(d, "quadexp normalizer");
    const std::size_t n = std::size_t{1} << d;
    std::vector<double> e(n, 0.0);
    for (int k = 0; k < d; ++k) {
      const std::uint64_t half = 1ULL << k;
      for (std::uint64_t idx = 0; idx < half; ++idx) {
        double add = params_(k, k);
        for (int j = 0; j < k; ++j)
          if ((idx >> j) & 1ULL) add += params_(k, j);
        e[idx | half] = e[idx] + add;
      }
    }
    const double top = *std::max_element(e.begin(), e.end());
    double sum = 0.0;
    for (double v : e) sum += std::exp(v - top);
    cache_->log_norm = -(top + std::log(sum));
    cache_->probs.resize(n);
    cache_->cdf.resize(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cache_->probs[i] = std::exp(e[i] - top) / sum;
      acc += cache_->probs[i];
      cache_->cdf[i] = acc;
    }
  });
  return *cache_;
}

bool QuadExpFamily::has_log_norm() const { return attached_.has_value() || dim() <= kEnumerationCap; }

double QuadExpFamily::log_norm() const {
  if (attached_) return *attached_;
  return cache().log_norm;
}

double QuadExpFamily::pmf(const BinaryVector& gamma) const {
  if (!attached_) {
    if (gamma.size() != dim()) throw ArgumentError("quadexp pmf: dimension mismatch");
    return cache().probs[gamma.to_index()];
  }
  return std::exp(log_pmf(gamma));
}

double QuadExpFamily::conditional(const BinaryVector& gamma, int i) const {
  if (gamma.size() != dim()) throw ArgumentError("quadexp conditional: dimension mismatch");
  if (i < 0 || i >= dim()) throw ArgumentError("quadexp conditional: component out of range");
  double eta = params_(i, i);
  for (int j = 0; j < i; ++j)
    if (gamma[j]) eta += params_(i, j);
  for (int j = i + 1; j < dim(); ++j)
    if (gamma[j]) eta += params_(j, i);
  return LinkFunction(LinkKind::logistic).eval(eta);
}

DensePmf QuadExpFamily::dense() const { return DensePmf::normalized(dim(), cache().probs); }

BinaryVector QuadExpFamily::sample(Rng& rng) const {
  const auto& cdf = cache().cdf;
  const double u = rng.uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return BinaryVector::from_index(static_cast<std::uint64_t>(it - cdf.begin()), dim());
}

double qe_marginal_unnorm(const QuadExpFamily& family, const BinaryVector& head) {
  const int d = family.dim();
  if (d < 2) throw ArgumentError("qe_marginal_unnorm: needs d >= 2");
  if (head.size() != d - 1) throw ArgumentError("qe_marginal_unnorm: head must have d - 1 components");
  const Matrix& a = family.params();
  double quad = 0.0;
  double eta = a(d - 1, d - 1);
  for (int i = 0; i < d - 1; ++i) {
    if (!head[i]) continue;
    quad += a(i, i);
    for (int j = 0; j < i; ++j)
      if (head[j]) quad += a(i, j);
    eta += a(d - 1, i);
  }
  const double h = family.has_log_norm() ? family.log_norm() : 0.0;
  return h + quad + softplus(eta);
}

CoxCoefficients cox_coeffs(double a_dd) {
  const double x = 0.5 * a_dd;
  const double t = std::tanh(x);
  const double sech = 1.0 / std::cosh(x);
  return {log_cosh(x), 0.5 * t, 0.125 * sech * sech};
}

CoxStep cox_marginal_step(const QuadExpFamily& family) {
  const int d = family.dim();
  if (d < 2) throw ArgumentError("cox_marginal_step: needs d >= 2");
  const Matrix& a = family.params();
  const double a_dd = a(d - 1, d - 1);
  const CoxCoefficients c = cox_coeffs(a_dd);
  const Vector star = a.block(d - 1, 0, 1, d - 1).transpose();

  Matrix next = a.topLeftCorner(d - 1, d - 1);
  for (int i = 0; i < d - 1; ++i) {
    next(i, i) += (c.c2 + 0.5) * star[i] + c.c3 * star[i] * star[i];
    for (int j = 0; j < i; ++j) next(i, j) += 2.0 * c.c3 * star[i] * star[j];
  }
  return {QuadExpFamily(std::move(next)), std::numbers::ln2 + c.c1 + 0.5 * a_dd};
}

CoxCascade cox_cascade(const QuadExpFamily& family) {
  const int d = family.dim();
  std::vector<QuadExpFamily> levels;
  levels.reserve(static_cast<std::size_t>(d));
  levels.push_back(family);
  std::vector<int> order;
  for (int k = d - 1; k >= 1; --k) {
    levels.push_back(cox_marginal_step(levels.back()).family);
    order.push_back(k);
  }
  std::reverse(levels.begin(), levels.end());

  Matrix rows = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) rows.block(k, 0, 1, k + 1) = levels[static_cast<std::size_t>(k)].params().row(k);
  ConditionalsFamily logistic(std::move(rows), LinkFunction(LinkKind::logistic));
  return {std::move(levels), std::move(order), std::move(logistic)};
}

ConditionalsFamily derive_logistic_family(const QuadExpFamily& family) { return cox_cascade(family).logistic; }

}  // namespace binfam
