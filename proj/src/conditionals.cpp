#include "binfam/conditionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binfam/normal.hpp"

namespace binfam {

LinkFunction LinkFunction::parse(std::string_view name) {
  if (name == "logistic" || name == "logit") return LinkFunction(LinkKind::logistic);
  if (name == "truncated-linear" || name == "linear") return LinkFunction(LinkKind::truncated_linear);
  if (name == "probit") return LinkFunction(LinkKind::probit);
  if (name == "cloglog") return LinkFunction(LinkKind::cloglog);
  throw ArgumentError("unknown link function '" + std::string(name) + "'");
}

std::string_view LinkFunction::name() const {
  switch (kind_) {
    case LinkKind::logistic: return "logistic";
    case LinkKind::truncated_linear: return "truncated-linear";
    case LinkKind::probit: return "probit";
    case LinkKind::cloglog: return "cloglog";
  }
  return "?";
}

double LinkFunction::eval(double x) const {
  switch (kind_) {
    case LinkKind::logistic:
      if (x > kLogisticSaturation) return 1.0;
      if (x < -kLogisticSaturation) return 0.0;
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case LinkKind::truncated_linear: return std::clamp(x, 0.0, 1.0);
    case LinkKind::probit: return norm_cdf(x);
    case LinkKind::cloglog: return -std::expm1(-std::exp(x));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double LinkFunction::inverse(double p) const {
  switch (kind_) {
    case LinkKind::logistic: return std::log(p) - std::log1p(-p);
    case LinkKind::truncated_linear: return p;
    case LinkKind::probit: return norm_quantile(p);
    case LinkKind::cloglog: return std::log(-std::log1p(-p));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double LinkFunction::derivative(double x) const {
  switch (kind_) {
    case LinkKind::logistic: {
      if (std::abs(x) > kLogisticSaturation) return 0.0;
      const double e = std::exp(-std::abs(x));
      return e / ((1.0 + e) * (1.0 + e));
    }
    case LinkKind::truncated_linear: return (x > 0.0 && x < 1.0) ? 1.0 : 0.0;
    case LinkKind::probit: return norm_pdf(x);
    case LinkKind::cloglog: return std::exp(x - std::exp(x));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------

ConditionalsFamily::ConditionalsFamily(Matrix params, LinkFunction link) : params_(std::move(params)), link_(link) {
  if (params_.rows() != params_.cols() || params_.rows() < 1)
    throw ArgumentError("conditionals family: parameter matrix must be square with d >= 1");
  for (Eigen::Index i = 0; i < params_.rows(); ++i)
    for (Eigen::Index j = 0; j < params_.cols(); ++j) {
      if (!std::isfinite(params_(i, j))) throw ArgumentError("conditionals family: parameters must be finite");
      if (j > i && params_(i, j) != 0.0)
        throw ArgumentError("conditionals family: parameter matrix must be lower triangular");
    }
}

ConditionalsFamily ConditionalsFamily::product(const Vector& mean, LinkFunction link) {
  Matrix a = Matrix::Zero(mean.size(), mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) a(i, i) = link.inverse(mean[i]);
  return ConditionalsFamily(std::move(a), link);
}

double ConditionalsFamily::linear_predictor(int i, std::span<const std::uint8_t> x) const {
  double eta = params_(i, i);
  for (int j = 0; j < i; ++j)
    if (x[static_cast<std::size_t>(j)]) eta += params_(i, j);
  return eta;
}

ConditionalsFamily::Draw ConditionalsFamily::sample(Rng& rng) const {
  const int d = dim();
  std::vector<std::uint8_t> x(static_cast<std::size_t>(d), 0);
  double p = 1.0;
  for (int i = 0; i < d; ++i) {
    const double c = conditional(i, x);
    const double u = rng.uniform();
    const bool one = u < c;
    x[static_cast<std::size_t>(i)] = one ? 1 : 0;
    p *= one ? c : 1.0 - c;
  }
  return {BinaryVector(std::move(x)), p};
}

double ConditionalsFamily::pmf(const BinaryVector& gamma) const {
  if (gamma.size() != dim()) throw ArgumentError("conditionals pmf: dimension mismatch");
  const auto& x = gamma.bits();
  double p = 1.0;
  for (int i = 0; i < dim(); ++i) {
    const double c = conditional(i, x);
    p *= x[static_cast<std::size_t>(i)] ? c : 1.0 - c;
  }
  return p;
}

std::vector<double> ConditionalsFamily::prefix_table(int k) const {
  if (k < 0 || k > dim()) throw ArgumentError("prefix_table: bad prefix length");
  require_enumerable(k, "prefix_table");
  std::vector<double> table(std::size_t{1} << k, 0.0);
  table[0] = 1.0;
  std::vector<std::uint8_t> x(static_cast<std::size_t>(dim()), 0);
  for (int i = 0; i < k; ++i) {
    const std::uint64_t half = 1ULL << i;
    for (std::uint64_t idx = 0; idx < half; ++idx) {
      const double p = table[idx];
      if (p == 0.0) {
        table[idx | half] = 0.0;
        continue;
      }
      for (int j = 0; j < i; ++j) x[static_cast<std::size_t>(j)] = (idx >> j) & 1ULL;
      const double c = conditional(i, x);
      table[idx] = p * (1.0 - c);
      table[idx | half] = p * c;
    }
  }
  return table;
}

DensePmf ConditionalsFamily::dense() const {
  require_enumerable(dim(), "ConditionalsFamily::dense");
  return DensePmf::normalized(dim(), prefix_table(dim()));
}

Matrix family_moments(const ConditionalsFamily& family) {
  require_enumerable(family.dim(), "family_moments (exact)");
  return DensePmf(family.dim(), family.prefix_table(family.dim())).cross_moments();
}

Matrix family_moments(const ConditionalsFamily& family, MomentEstimator estimator, Rng& rng) {
  if (estimator.kind == MomentEstimator::Kind::exact) return family_moments(family);
  if (estimator.samples < 1) throw ArgumentError("family_moments: Monte Carlo needs n >= 1");

  const int d = family.dim();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(d, d);
  std::vector<std::uint8_t> x(static_cast<std::size_t>(d));
  std::vector<int> ones;
  ones.reserve(static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < estimator.samples; ++k) {
    ones.clear();
    for (int i = 0; i < d; ++i) {
      double eta = family.params()(i, i);
      for (int j : ones) eta += family.params()(i, j);
      const bool one = rng.uniform() < family.link().eval(eta);
      x[static_cast<std::size_t>(i)] = one;
      if (one) ones.push_back(i);
    }
    for (std::size_t a = 0; a < ones.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b) ++counts(ones[a], ones[b]);
  }
  Matrix m = counts.cast<double>() / static_cast<double>(estimator.samples);
  return m.selfadjointView<Eigen::Lower>();
}

}  // namespace binfam
