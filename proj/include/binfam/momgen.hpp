#pragma once

// Random feasible cross-moment matrices by a Markov chain over the feasible
// set: uniform index permutations alternate with sweeps that redraw the last
// column entry by entry inside the interval keeping every constraint.
//
// The determinant constraint is carried on the covariance S = M - m m^T.
// With B the leading (d-1) block of S, N = B^{-1} and s the last column,
//   det S = det B * (s_dd - s^T N s),
// and replacing s_i by x changes det S by det B * [q(s_i) - q(x)],
// q(y) = y (y n_ii + 2 r_i), r_i = sum_{j != i} n_ij s_j.

#include <cstdint>
#include <optional>

#include "binfam/core.hpp"
#include "binfam/rng.hpp"

namespace binfam {

struct GenConfig {
  int dim = 2;
  double rho = 1.0;
  /// 0 selects 10 * dim.
  int permutation_steps = 0;
  int sweeps = 500;
  /// Sweeps between full determinant recomputations.
  int refresh_every = 50;
  std::uint64_t seed = 0;

  void validate() const;
  int effective_permutation_steps() const { return permutation_steps > 0 ? permutation_steps : 10 * dim; }
};

struct Interval {
  double lo;
  double hi;
};

/// Interval for m_{i,d-1} (i < d-1) keeping the Frechet bounds and det S > 0,
/// computed from scratch. Empty optional when the interval is degenerate.
std::optional<Interval> replacement_bounds(const Matrix& m, int i);

/// Determinant after replacing s_i = old_value by new_value.
double det_update(double det, double det_block, double n_ii, double r_i, double old_value, double new_value);
long double det_update(long double det, long double det_block, long double n_ii, long double r_i, long double old_value,
                       long double new_value);

/// Shrinks [a, b] towards its midpoint: rho = 1 keeps it, rho = 0 collapses it.
Interval shrink(Interval iv, double rho);

struct GenStats {
  /// Largest relative gap between the tracked and the recomputed det S.
  double max_det_drift = 0.0;
  int refreshes = 0;
  /// Refreshes whose drift exceeded 1e-8.
  int drift_signals = 0;
  std::size_t replacements = 0;
  std::size_t skipped = 0;
};

CrossMomentMatrix random_cross_moment_matrix(const GenConfig& cfg, Rng& rng, GenStats* stats = nullptr);
/// Uses an Rng seeded from cfg.seed.
CrossMomentMatrix random_cross_moment_matrix(const GenConfig& cfg, GenStats* stats = nullptr);

}  // namespace binfam
