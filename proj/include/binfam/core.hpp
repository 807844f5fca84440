#pragma once

// Domain types for multivariate binary distributions: binary vectors,
// cross-moment matrices, dense mass functions on {0,1}^d, plus the exact
// enumeration machinery every fitted family is checked against.

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "binfam/errors.hpp"

namespace binfam {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest dimension for which a 2^d table is built.
inline constexpr int kEnumerationCap = 20;

/// Smallest eigenvalue a covariance must exceed to count as positive definite.
inline constexpr double kPositiveDefiniteTol = 1e-10;

/// Throws CapError when `dim` exceeds the enumeration cap.
void require_enumerable(int dim, const char* what);

/// Subset of {0, ..., 63} stored as a bit mask (bit i set means index i is in the set).
class IndexSet {
 public:
  constexpr IndexSet() = default;
  constexpr explicit IndexSet(std::uint64_t mask) : mask_(mask) {}
  IndexSet(std::initializer_list<int> indices);

  static IndexSet full(int dim) { return IndexSet(dim >= 64 ? ~0ULL : (1ULL << dim) - 1); }

  constexpr std::uint64_t mask() const { return mask_; }
  constexpr bool empty() const { return mask_ == 0; }
  int size() const { return std::popcount(mask_); }
  constexpr bool contains(int i) const { return (mask_ >> i) & 1ULL; }
  std::vector<int> indices() const;

  friend constexpr bool operator==(IndexSet, IndexSet) = default;

 private:
  std::uint64_t mask_ = 0;
};

/// A point gamma in {0,1}^d.
class BinaryVector {
 public:
  explicit BinaryVector(std::vector<std::uint8_t> bits);

  /// Component i is bit i of `index` (component 0 least significant).
  static BinaryVector from_index(std::uint64_t index, int dim);

  std::uint64_t to_index() const;
  int size() const { return static_cast<int>(bits_.size()); }
  std::uint8_t operator[](int i) const { return bits_[static_cast<std::size_t>(i)]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const BinaryVector&, const BinaryVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct FrechetInterval {
  double lo;
  double hi;
};

/// Bounds on P(Gamma_I = 1) implied by the first-order marginals in `mean`.
/// lo = max(sum_{i in I} m_i - |I| + 1, 0); hi = min_{i in I} m_i.
FrechetInterval frechet_bounds(IndexSet set, std::span<const double> mean);

struct Violation {
  enum class Kind { diagonal_range, pairwise_lower, pairwise_upper, not_positive_definite };
  Kind kind;
  int i;
  int j;
  double value;
  double bound;
  std::string message;
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  double min_eigenvalue = 0.0;

  bool valid() const { return violations.empty(); }
  std::string summary() const;
};

/// Checks that M is the cross-moment matrix of some binary distribution:
/// diagonal in (0,1), pairwise Frechet bounds, and M - m m^T positive definite.
/// Throws ArgumentError for non-square input or asymmetry above 1e-12.
FeasibilityReport validate_cross_moments(const Matrix& m);

/// Symmetric d x d matrix of pairwise cross-moments with the mean on the diagonal.
/// Always valid: construction throws InfeasibleError otherwise.
class CrossMomentMatrix {
 public:
  explicit CrossMomentMatrix(const Matrix& m);

  /// Same-mean matrix of independent components, m_ij = m_i m_j.
  static CrossMomentMatrix independent(const Vector& mean);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  Vector mean() const { return m_.diagonal(); }
  double operator()(int i, int j) const { return m_(i, j); }
  Matrix covariance() const;

 private:
  Matrix m_;
};

/// Mean vector plus correlation matrix; converted through M = C .* s s^T + m m^T.
struct CorrelationSpec {
  Vector mean;
  Matrix corr;

  Matrix cross_moments() const;
  FeasibilityReport feasibility() const { return validate_cross_moments(cross_moments()); }

  static CorrelationSpec from_cross_moments(const Matrix& m);
};

/// Mass function on {0,1}^d stored as a full table in index order.
class DensePmf {
 public:
  DensePmf(int dim, std::vector<double> probs);

  /// Rescales nonnegative weights to sum to one.
  static DensePmf normalized(int dim, std::vector<double> weights);
  static DensePmf product(const Vector& mean);

  int dim() const { return dim_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::uint64_t index) const { return probs_[index]; }
  double operator()(const BinaryVector& gamma) const { return probs_[gamma.to_index()]; }
  const std::vector<double>& probs() const { return probs_; }

  Vector mean() const;
  Matrix cross_moments() const;

 private:
  int dim_;
  std::vector<double> probs_;
};

/// P(Gamma_I = 1) by summing the table; 1 for the empty set.
double oracle_moments(const DensePmf& pmf, IndexSet set);

/// Generalized correlation coefficients c_I keyed by index-set mask.
/// Missing keys are zero.
using BahadurCoefficients = std::map<std::uint64_t, double>;

/// c_I = E[prod_{i in I} (Gamma_i - m_i) / sqrt(m_i (1 - m_i))] for every |I| >= 2.
BahadurCoefficients bahadur_coefficients(const DensePmf& pmf);

/// Same, but standardized with a caller-supplied mean.
BahadurCoefficients bahadur_coefficients(const DensePmf& pmf, const Vector& mean);

/// Rebuilds pi(gamma) = q_m(gamma) sum_I c_I u_I(gamma). Entries for |I| <= 1 are ignored.
/// Throws InfeasibleError if an entry falls below -1e-12.
DensePmf bahadur_pmf(const Vector& mean, const BahadurCoefficients& coeffs);

struct LpCheck {
  double lhs;
  double bound;
  bool holds(double slack = 1e-10) const { return lhs <= bound + slack; }
};

/// lhs = sum |pi - omega|^p and the coefficient bound
/// sum_I 2^{(1 - min(p,2))|I|} |c_I^pi - c_I^omega|^p. Means must agree within 1e-10.
LpCheck lp_distance_check(const DensePmf& pi, const DensePmf& omega, double p);

/// Matrix text format: first line d, then d rows of d numbers.
/// Rejects asymmetry above 1e-9.
Matrix read_matrix(std::istream& in);
Matrix read_matrix_file(const std::string& path);
void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix_file(const std::string& path, const Matrix& m);

}  // namespace binfam
