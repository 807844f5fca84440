#pragma once

// Row-wise method-of-moments fitting of a mu-conditionals family.
//
// Row i solves f(a) = E_q[mu((x^T, 1) a) (x^T, 1)^T] = (m_{i,0..i-1}, m_ii)
// by safeguarded Newton-Raphson, where q is the already fitted prefix over
// components 0..i-1. Expectations are exact (enumeration of the prefix) or
// Monte Carlo over a fixed sample set drawn from the prefix. When the full
// target is out of reach, the off-diagonal targets are pulled towards
// independence, m_ij(lambda) = lambda m_ij + (1 - lambda) m_ii m_jj, and the
// largest lambda on the grid that still converges is kept.

#include <cstdint>
#include <vector>

#include "binfam/conditionals.hpp"
#include "binfam/core.hpp"
#include "binfam/rng.hpp"

namespace binfam {

enum class Estimator { automatic, exact, monte_carlo };

struct FitConfig {
  Estimator estimator = Estimator::automatic;
  std::size_t mc_samples = 10000;
  /// Under `automatic`, rows of dimension <= this use exact expectations.
  int exact_max_dim = 10;
  int max_iterations = 50;
  double tolerance_exact = 1e-8;
  double tolerance_mc = 1e-3;
  /// Number of equally spaced lambda values in [0, 1], both ends included.
  int homotopy_steps = 10;
  double magnitude_cap = 30.0;
  int max_halvings = 20;
  std::uint64_t seed = 0;

  void validate() const;
  bool use_exact(int row_dim) const;
  double tolerance(bool exact) const { return exact ? tolerance_exact : tolerance_mc; }
};

enum class RowStatus { converged, not_converged, singular_jacobian, boundary };

std::string_view to_string(RowStatus status);

struct RowFit {
  /// Interaction coefficients a_{i,0..i-1} followed by the intercept a_ii.
  Vector a;
  RowStatus status = RowStatus::not_converged;
  int iterations = 0;
  double residual = 0.0;
  /// Every accepted iterate had a positive definite Jacobian.
  bool jacobian_positive = true;
  bool exact = true;
};

/// Weighted set of prefix states against which a row is fitted.
/// Exact mode holds every prefix with its probability, Monte Carlo mode a
/// fixed sample with weights 1/n (common random numbers for one solve).
struct PrefixStates {
  Matrix design;  ///< rows (x^T, 1)
  Vector weights;
  bool exact = true;

  static PrefixStates enumerate(const ConditionalsFamily& prefix);
  static PrefixStates sample(const ConditionalsFamily& prefix, std::size_t n, Rng& rng);
};

/// f(a) and f'(a) over the prefix states.
Vector row_moments(const PrefixStates& states, LinkFunction link, const Vector& a);
Matrix row_jacobian(const PrefixStates& states, LinkFunction link, const Vector& a);

/// Newton-Raphson with step halving on a fixed set of prefix states.
RowFit newton_row(const PrefixStates& states, LinkFunction link, const Vector& target, const Vector& start,
                  const FitConfig& cfg);

/// Fits one new row against `target` = (m_{d+1,1..d}, m_{d+1,d+1}) given the
/// fitted prefix. Starts from the independence solution (0, ..., 0, mu^{-1}(m)).
RowFit fit_row(const ConditionalsFamily& prefix, const Vector& target, const FitConfig& cfg, Rng& rng);

/// [[M, m], [m^T, 1]] for a moment matrix M with mean m = diag(M).
Matrix bordered_moments(const Matrix& m);

/// Solves [[M, m], [m^T, 1]] a = target directly (the linear-link row).
/// Throws PreconditionError when the bordered matrix is not positive definite.
Vector solve_linear_row(const Matrix& prefix_moments, const Vector& target);

struct RowReport {
  RowStatus status = RowStatus::converged;
  int iterations = 0;
  double residual = 0.0;
  double lambda = 1.0;
};

struct FitReport {
  std::vector<RowReport> rows;
  double wall_seconds = 0.0;

  Vector lambdas() const;
  double min_lambda() const;
};

struct FitResult {
  ConditionalsFamily family;
  FitReport report;
};

/// Fits all rows in order. Requires a valid cross-moment matrix; the mean of
/// the fitted family equals diag(M) whatever lambda each row reaches.
FitResult fit(const CrossMomentMatrix& m, LinkFunction link, const FitConfig& cfg, Rng& rng);
FitResult fit(const CrossMomentMatrix& m, LinkFunction link, const FitConfig& cfg = {});

}  // namespace binfam
