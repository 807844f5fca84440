#pragma once

// Independent Metropolis-Hastings with a fitted family as proposal, and exact
// enumeration of its transition kernel for small dimensions.

#include <functional>
#include <variant>
#include <vector>

#include "binfam/conditionals.hpp"
#include "binfam/core.hpp"
#include "binfam/quad_exp.hpp"
#include "binfam/rng.hpp"

namespace binfam {

/// Unnormalized target on {0,1}^d, given by its log mass (finite everywhere).
struct TargetDensity {
  int dim = 0;
  std::function<double(const BinaryVector&)> log_mass;

  static TargetDensity from_quadexp(const QuadExpFamily& family);
  /// Every entry of `pmf` must be positive.
  static TargetDensity from_pmf(const DensePmf& pmf);
};

/// min{1, pi(gamma) q(x) / (pi(x) q(gamma))} evaluated in log space.
/// ContractError unless both proposal masses and both target masses are positive.
double acceptance(const TargetDensity& target, double q_gamma, double q_x, const BinaryVector& x,
                  const BinaryVector& gamma);

using Proposal = std::variant<ConditionalsFamily, QuadExpFamily>;

struct ChainConfig {
  std::size_t steps = 10000;
  /// Leading fraction of steps discarded before statistics are collected.
  double burn_in_fraction = 0.1;
  bool keep_samples = true;
};

struct ChainStats {
  /// Accepted proposals over post-burn-in steps.
  double acceptance_rate = 0.0;
  Vector mean;
  /// (1/(n-1)) sum_t (x_t - mean)(x_{t+1} - mean)^T.
  Matrix lag1_autocov;
  std::size_t count = 0;
};

struct ChainResult {
  std::vector<BinaryVector> samples;
  ChainStats stats;
};

/// The chain starts from a proposal draw; each step draws gamma ~ q and
/// accepts it with the MH probability.
ChainResult run_chain(const TargetDensity& target, const Proposal& proposal, const ChainConfig& cfg, Rng& rng);

/// Kernel kappa(gamma | x) on all states; row index x, column index gamma.
/// Rejected mass sits on the diagonal. Both pmfs strictly positive, d <= 10.
Matrix mh_kernel(const DensePmf& target, const DensePmf& proposal);

struct AutocovCheck {
  /// E[Gamma X^T] - m m^T with X ~ pi and Gamma ~ kappa(. | X).
  Matrix lhs;
  /// (M^pi - M^q) / 2.
  Matrix structural;
  /// lhs - structural.
  Matrix residual;
  /// r_ij = -1/2 sum_{x,gamma} (gamma_i x_j - x_i x_j) |q(gamma) pi(x) - q(x) pi(gamma)|.
  Matrix residual_formula;
  /// sum_gamma |pi(gamma) - q(gamma)|.
  double bound = 0.0;

  double identity_error() const { return (residual - residual_formula).cwiseAbs().maxCoeff(); }
  bool bound_holds(double slack = 1e-10) const { return residual.cwiseAbs().maxCoeff() <= bound + slack; }
};

/// Means must agree within 1e-10 and d <= 6; PreconditionError otherwise.
AutocovCheck autocov_decomposition_check(const DensePmf& target, const DensePmf& proposal);

}  // namespace binfam
