#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "binfam/core.hpp"
#include "binfam/rng.hpp"

namespace binfam {

enum class LinkKind { logistic, truncated_linear, probit, cloglog };

/// Monotone map from the linear predictor to a conditional probability.
class LinkFunction {
 public:
  constexpr explicit LinkFunction(LinkKind kind = LinkKind::logistic) : kind_(kind) {}

  /// Accepts "logistic", "truncated-linear" (or "linear"), "probit", "cloglog".
  static LinkFunction parse(std::string_view name);

  constexpr LinkKind kind() const { return kind_; }
  std::string_view name() const;

  /// False for the truncated-linear link, whose clamp is flat outside [0, 1].
  constexpr bool bijective() const { return kind_ != LinkKind::truncated_linear; }

  double eval(double x) const;
  double inverse(double p) const;
  double derivative(double x) const;

  friend constexpr bool operator==(LinkFunction, LinkFunction) = default;

 private:
  LinkKind kind_;
};

/// Beyond this magnitude the logistic conditional is exactly 0 or 1.
inline constexpr double kLogisticSaturation = 35.0;

/// The mu-conditionals family: component i is Bernoulli with probability
/// mu(a_ii + sum_{j<i} a_ij x_j) given the preceding components.
class ConditionalsFamily {
 public:
  /// `params` must be square, lower triangular and finite.
  ConditionalsFamily(Matrix params, LinkFunction link);

  /// Independent components with the given mean, A = diag(mu^{-1}(m)).
  static ConditionalsFamily product(const Vector& mean, LinkFunction link);

  int dim() const { return static_cast<int>(params_.rows()); }
  const Matrix& params() const { return params_; }
  LinkFunction link() const { return link_; }

  /// a_ii + sum_{j<i} a_ij x_j; only x[0..i) is read.
  double linear_predictor(int i, std::span<const std::uint8_t> x) const;

  /// P(x_i = 1 | x_{<i}).
  double conditional(int i, std::span<const std::uint8_t> x) const { return link_.eval(linear_predictor(i, x)); }

  struct Draw {
    BinaryVector x;
    double p;  ///< pmf(x), accumulated along the draw
  };

  /// Sequential draw; consumes one uniform per component, in index order.
  Draw sample(Rng& rng) const;

  double pmf(const BinaryVector& gamma) const;

  /// Full 2^d table (d <= enumeration cap).
  DensePmf dense() const;

  /// Probabilities of all 2^k prefixes x_{0..k-1}, indexed like DensePmf.
  std::vector<double> prefix_table(int k) const;

 private:
  Matrix params_;
  LinkFunction link_;
};

struct MomentEstimator {
  enum class Kind { exact, monte_carlo };
  Kind kind = Kind::exact;
  std::size_t samples = 0;

  static MomentEstimator exact() { return {Kind::exact, 0}; }
  static MomentEstimator monte_carlo(std::size_t n) { return {Kind::monte_carlo, n}; }
};

/// E[Gamma Gamma^T] under the family: enumeration, or the average of
/// x x^T over `samples` draws. The result is symmetric with diagonal in [0,1].
Matrix family_moments(const ConditionalsFamily& family, MomentEstimator estimator, Rng& rng);
Matrix family_moments(const ConditionalsFamily& family);

}  // namespace binfam
