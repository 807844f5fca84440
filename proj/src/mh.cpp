#include "binfam/mh.hpp"

#include <cmath>
#include <memory>

namespace binfam {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

double accept_from_logs(double log_t_gamma, double log_q_x, double log_t_x, double log_q_gamma) {
  const double log_ratio = (log_t_gamma + log_q_x) - (log_t_x + log_q_gamma);
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

double checked_log(double mass, const char* what) {
  if (!(mass > 0.0)) throw ContractError(std::string("MH acceptance: ") + what + " must be positive");
  return std::log(mass);
}

double checked_log_target(const TargetDensity& target, const BinaryVector& g) {
  const double v = target.log_mass(g);
  if (!std::isfinite(v)) throw ContractError("MH acceptance: target mass must be positive and finite");
  return v;
}

struct ProposalDraw {
  BinaryVector x;
  double log_q;
};

ProposalDraw draw(const Proposal& proposal, Rng& rng) {
  return std::visit(overloaded{[&](const ConditionalsFamily& f) {
                                 auto d = f.sample(rng);
                                 return ProposalDraw{std::move(d.x), checked_log(d.p, "proposal mass")};
                               },
                               [&](const QuadExpFamily& f) {
                                 BinaryVector x = f.sample(rng);
                                 const double lq = checked_log(f.pmf(x), "proposal mass");
                                 return ProposalDraw{std::move(x), lq};
                               }},
                    proposal);
}

int proposal_dim(const Proposal& proposal) {
  return std::visit([](const auto& f) { return f.dim(); }, proposal);
}

void require_positive(const DensePmf& pmf, const char* what) {
  for (double p : pmf.probs())
    if (!(p > 0.0)) throw PreconditionError(std::string(what) + ": pmf must be strictly positive");
}

}  // namespace

TargetDensity TargetDensity::from_quadexp(const QuadExpFamily& family) {
  return {family.dim(), [family](const BinaryVector& g) { return family.energy(g); }};
}

TargetDensity TargetDensity::from_pmf(const DensePmf& pmf) {
  require_positive(pmf, "TargetDensity::from_pmf");
  auto shared = std::make_shared<DensePmf>(pmf);
  return {pmf.dim(), [shared](const BinaryVector& g) { return std::log((*shared)(g)); }};
}

double acceptance(const TargetDensity& target, double q_gamma, double q_x, const BinaryVector& x,
                  const BinaryVector& gamma) {
  const double lqg = checked_log(q_gamma, "proposal mass at the candidate");
  const double lqx = checked_log(q_x, "proposal mass at the current state");
  return accept_from_logs(checked_log_target(target, gamma), lqx, checked_log_target(target, x), lqg);
}

ChainResult run_chain(const TargetDensity& target, const Proposal& proposal, const ChainConfig& cfg, Rng& rng) {
  const int d = target.dim;
  if (proposal_dim(proposal) != d) throw ArgumentError("run_chain: proposal and target dimensions differ");
  if (cfg.steps < 2) throw ArgumentError("run_chain: needs at least two steps");
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0))
    throw ArgumentError("run_chain: burn-in fraction must lie in [0, 1)");
  const auto burn = static_cast<std::size_t>(cfg.burn_in_fraction * static_cast<double>(cfg.steps));
  const std::size_t kept = cfg.steps - burn;
  if (kept < 2) throw ArgumentError("run_chain: fewer than two post-burn-in steps");

  ChainResult out;
  if (cfg.keep_samples) out.samples.reserve(kept);

  ProposalDraw cur = draw(proposal, rng);
  double log_t_cur = checked_log_target(target, cur.x);

  Vector sum = Vector::Zero(d), first = Vector::Zero(d), last = Vector::Zero(d);
  Matrix cross = Matrix::Zero(d, d);
  Vector prev(d), now(d);
  std::size_t accepted = 0;

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    ProposalDraw cand = draw(proposal, rng);
    const double log_t_cand = checked_log_target(target, cand.x);
    const double a = accept_from_logs(log_t_cand, cur.log_q, log_t_cur, cand.log_q);
    const bool take = rng.uniform() < a;
    if (take) {
      cur = std::move(cand);
      log_t_cur = log_t_cand;
    }
    if (t < burn) continue;

    accepted += take;
    for (int i = 0; i < d; ++i) now[i] = cur.x[i];
    const std::size_t k = t - burn;
    sum += now;
    if (k > 0) cross += prev * now.transpose();
    if (k == 0) first = now;
    if (k + 1 == kept) last = now;
    prev = now;
    if (cfg.keep_samples) out.samples.push_back(cur.x);
  }

  const auto n = static_cast<double>(kept);
  ChainStats& s = out.stats;
  s.count = kept;
  s.acceptance_rate = static_cast<double>(accepted) / n;
  s.mean = sum / n;
  const Vector head = sum - last;   // x_0 .. x_{n-2}
  const Vector tail = sum - first;  // x_1 .. x_{n-1}
  s.lag1_autocov = (cross - head * s.mean.transpose() - s.mean * tail.transpose() +
                    (n - 1.0) * s.mean * s.mean.transpose()) /
                   (n - 1.0);
  return out;
}

Matrix mh_kernel(const DensePmf& target, const DensePmf& proposal) {
  if (target.dim() != proposal.dim()) throw ArgumentError("mh_kernel: dimension mismatch");
  if (target.dim() > 10) throw CapError("mh_kernel: dimension above 10");
  require_positive(target, "mh_kernel target");
  require_positive(proposal, "mh_kernel proposal");
  const auto n = static_cast<Eigen::Index>(target.size());
  Matrix k = Matrix::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const double lpx = std::log(target[x]), lqx = std::log(proposal[x]);
    double moved = 0.0;
    for (Eigen::Index g = 0; g < n; ++g) {
      if (g == x) continue;
      const double a = accept_from_logs(std::log(target[g]), lqx, lpx, std::log(proposal[g]));
      k(x, g) = proposal[g] * a;
      moved += k(x, g);
    }
    k(x, x) = 1.0 - moved;
  }
  return k;
}

AutocovCheck autocov_decomposition_check(const DensePmf& target, const DensePmf& proposal) {
  const int d = target.dim();
  if (proposal.dim() != d) throw ArgumentError("autocov_decomposition_check: dimension mismatch");
  if (d > 6) throw PreconditionError("autocov_decomposition_check: needs d <= 6");
  const Vector m = target.mean();
  if ((m - proposal.mean()).cwiseAbs().maxCoeff() > 1e-10)
    throw PreconditionError("autocov_decomposition_check: target and proposal means differ");

  const Matrix kernel = mh_kernel(target, proposal);
  const auto n = static_cast<std::uint64_t>(target.size());
  AutocovCheck out;
  Matrix e = Matrix::Zero(d, d);
  out.residual_formula = Matrix::Zero(d, d);
  for (std::uint64_t x = 0; x < n; ++x)
    for (std::uint64_t g = 0; g < n; ++g) {
      const double w = target[x] * kernel(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(g));
      const double gap = std::abs(proposal[g] * target[x] - proposal[x] * target[g]);
      for (int i = 0; i < d; ++i) {
        const double gi = static_cast<double>((g >> i) & 1ULL), xi = static_cast<double>((x >> i) & 1ULL);
        for (int j = 0; j < d; ++j) {
          const double xj = static_cast<double>((x >> j) & 1ULL);
          e(i, j) += w * gi * xj;
          out.residual_formula(i, j) -= 0.5 * (gi * xj - xi * xj) * gap;
        }
      }
    }
  out.lhs = e - m * m.transpose();
  out.structural = 0.5 * (target.cross_moments() - proposal.cross_moments());
  out.residual = out.lhs - out.structural;
  for (std::uint64_t g = 0; g < n; ++g) out.bound += std::abs(target[g] - proposal[g]);
  return out;
}

}  // namespace binfam
