#pragma once

#include <vector>

#include "binfam/core.hpp"
#include "binfam/normal.hpp"
#include "binfam/rng.hpp"

namespace binfam {

/// Binary vector obtained by thresholding a latent N(0, Sigma):
/// gamma_i = 1{x_i <= a_i}, so P(gamma_i = 1) = Phi(a_i).
class GaussianCopulaFamily {
 public:
  /// Sigma must be a symmetric positive definite matrix with unit diagonal.
  GaussianCopulaFamily(Vector thresholds, Matrix latent_corr);

  int dim() const { return static_cast<int>(thresholds_.size()); }
  const Vector& thresholds() const { return thresholds_; }
  const Matrix& latent_corr() const { return sigma_; }
  /// Lower-triangular L with L L^T = Sigma.
  const Matrix& factor() const { return factor_; }

 private:
  Vector thresholds_;
  Matrix sigma_;
  Matrix factor_;
};

/// Bounds used when a pairwise target is out of the copula's reach.
inline constexpr double kLatentCorrLimit = 1.0 - 1e-9;

struct PairFit {
  double sigma = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool boundary = false;
};

/// Solves bvn_cdf(a_i, a_j, sigma) = target for sigma by Newton iterations
/// with derivative bvn_pdf, guarded by bisection on the monotone map.
PairFit fit_latent_correlation(double a_i, double a_j, double target, double start);

struct EigenRepair {
  Matrix sigma;
  bool repaired = false;
  /// Eigenvalue shift lambda; Sigma* = (Sigma + |lambda| I) / (1 + |lambda|).
  double lambda = 0.0;
};

/// Shifts the spectrum when the smallest eigenvalue is below 1e-10,
/// with lambda = (smallest eigenvalue - 1e-8).
EigenRepair repair_correlation(const Matrix& sigma);

struct CopulaFit {
  GaussianCopulaFamily family;
  bool repaired = false;
  double lambda = 0.0;
  /// Pairwise solution before the eigenvalue repair.
  Matrix pairwise_sigma;
  /// Pairs (i > j) whose target lay outside the attainable range.
  std::vector<std::pair<int, int>> boundary_pairs;
};

/// a_i = Phi^{-1}(m_ii); each sigma_ij from its pairwise equation
/// (Pearson start clamped to +-0.99); then the repair if Sigma is not positive definite.
CopulaFit fit_gc(const CrossMomentMatrix& m);

BinaryVector sample_gc(const GaussianCopulaFamily& family, Rng& rng);

/// Phi(a_i) on the diagonal and bvn_cdf(a_i, a_j, sigma_ij) off it.
Matrix gc_moments(const GaussianCopulaFamily& family);

}  // namespace binfam
