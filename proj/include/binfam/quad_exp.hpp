#pragma once

// Exponential quadratic family q(gamma) = exp(h + gamma^T A gamma) with A
// lower triangular, and the quadratic approximation of log cosh that turns
// it into a logistic conditionals family one marginal at a time.

#include <memory>
#include <optional>
#include <vector>

#include "binfam/conditionals.hpp"
#include "binfam/core.hpp"
#include "binfam/rng.hpp"

namespace binfam {

class QuadExpFamily {
 public:
  /// `params` must be square, lower triangular and finite. A known
  /// normalizer may be attached, otherwise it is enumerated on first use.
  explicit QuadExpFamily(Matrix params, std::optional<double> log_norm = std::nullopt);

  int dim() const { return static_cast<int>(params_.rows()); }
  const Matrix& params() const { return params_; }

  double energy(const BinaryVector& gamma) const;
  /// h = -log sum_x exp(x^T A x); CapError above the enumeration cap unless attached.
  double log_norm() const;
  bool has_log_norm() const;

  double log_pmf(const BinaryVector& gamma) const { return log_norm() + energy(gamma); }
  double pmf(const BinaryVector& gamma) const;
  /// P(gamma_i = 1 | gamma_{-i}); gamma_i itself is ignored.
  double conditional(const BinaryVector& gamma, int i) const;
  DensePmf dense() const;
  /// Inverse-CDF draw from the enumerated table.
  BinaryVector sample(Rng& rng) const;

 private:
  struct Cache;
  const Cache& cache() const;

  Matrix params_;
  std::optional<double> attached_;
  std::shared_ptr<Cache> cache_;
};

/// Log of the exact marginal mass of the first d-1 components, unnormalized
/// unless h is known: h + head^T A_{-d} head + log(1 + exp(a_dd + sum_j a_dj head_j)).
double qe_marginal_unnorm(const QuadExpFamily& family, const BinaryVector& head);

/// log cosh(a/2 + x/2) ~ c1 + c2 x + c3 x^2 around x = 0.
struct CoxCoefficients {
  double c1;
  double c2;
  double c3;
};

CoxCoefficients cox_coeffs(double a_dd);

struct CoxStep {
  /// A* over the first d-1 components; its own normalizer is left to enumeration.
  QuadExpFamily family;
  /// h* - h = log 2 + c1 + a_dd / 2.
  double log_norm_shift;
};

/// Approximate marginal over the first d-1 components (d >= 2).
CoxStep cox_marginal_step(const QuadExpFamily& family);

struct CoxCascade {
  /// levels[k] has dimension k + 1; levels.back() is the input family.
  std::vector<QuadExpFamily> levels;
  /// Components in the order they were marginalized out.
  std::vector<int> order;
  ConditionalsFamily logistic;
};

/// Marginalizes last-component-first down to dimension 1; row k of the
/// logistic family is the full conditional of component k at level k.
CoxCascade cox_cascade(const QuadExpFamily& family);
ConditionalsFamily derive_logistic_family(const QuadExpFamily& family);

}  // namespace binfam
