#include <gtest/gtest.h>

#include <cmath>

#include "binfam/mh.hpp"
#include "binfam/moment_fit.hpp"
#include "oracles.hpp"

using namespace binfam;

namespace {

// Pmf with mean m from random coefficients, halved until every mass exceeds 1e-6.
DensePmf random_with_mean(const Vector& m, double spread, Rng& rng) {
  const int d = static_cast<int>(m.size());
  BahadurCoefficients c;
  for (std::uint64_t s = 1; s < (1ULL << d); ++s)
    if (std::popcount(s) >= 2) c[s] = spread * (2 * rng.uniform() - 1);
  for (double shrink = 1.0;; shrink *= 0.5) {
    BahadurCoefficients scaled = c;
    for (auto& [k, v] : scaled) v *= shrink;
    try {
      DensePmf p = bahadur_pmf(m, scaled);
      bool positive = true;
      for (double v : p.probs()) positive &= v > 1e-6;
      if (positive) return p;
    } catch (const InfeasibleError&) {
    }
  }
}

TargetDensity uniform_target(int d) { return {d, [](const BinaryVector&) { return 0.0; }}; }

}  // namespace

TEST(Acceptance, UniformAlwaysAccepts) {
  const auto t = uniform_target(3);
  for (std::uint64_t a = 0; a < 8; ++a)
    for (std::uint64_t b = 0; b < 8; ++b)
      EXPECT_EQ(acceptance(t, 0.125, 0.125, BinaryVector::from_index(a, 3), BinaryVector::from_index(b, 3)), 1.0);
}

TEST(Acceptance, RatioIsCapped) {
  const TargetDensity t{1, [](const BinaryVector& g) { return g[0] ? std::log(2.0) : 0.0; }};
  EXPECT_EQ(acceptance(t, 0.5, 0.5, BinaryVector({0}), BinaryVector({1})), 1.0);
  EXPECT_NEAR(acceptance(t, 0.5, 0.5, BinaryVector({1}), BinaryVector({0})), 0.5, 1e-15);
  EXPECT_NEAR(acceptance(t, 0.8, 0.2, BinaryVector({0}), BinaryVector({1})), 0.5, 1e-15);
}

TEST(Acceptance, ExtremeMassesStayFinite) {
  const TargetDensity t{1, [](const BinaryVector& g) { return g[0] ? 800.0 : -800.0; }};
  EXPECT_EQ(acceptance(t, 0.5, 0.5, BinaryVector({0}), BinaryVector({1})), 1.0);
  EXPECT_EQ(acceptance(t, 0.5, 0.5, BinaryVector({1}), BinaryVector({0})), 0.0);
}

TEST(Acceptance, ZeroMassIsAContractViolation) {
  const auto t = uniform_target(1);
  EXPECT_THROW(acceptance(t, 0.5, 0.0, BinaryVector({0}), BinaryVector({1})), ContractError);
  EXPECT_THROW(acceptance(t, 0.0, 0.5, BinaryVector({0}), BinaryVector({1})), ContractError);
  const TargetDensity z{1, [](const BinaryVector& g) { return g[0] ? 0.0 : -INFINITY; }};
  EXPECT_THROW(acceptance(z, 0.5, 0.5, BinaryVector({0}), BinaryVector({1})), ContractError);
  EXPECT_THROW(TargetDensity::from_pmf(DensePmf(1, {1.0, 0.0})), PreconditionError);
}

TEST(Acceptance, DetailedBalanceByEnumeration) {
  Rng rng(51);
  const int d = 3;
  const DensePmf pi(d, oracle::random_positive_table(d, rng));
  const DensePmf q(d, oracle::random_positive_table(d, rng));
  const auto t = TargetDensity::from_pmf(pi);
  for (std::uint64_t x = 0; x < 8; ++x)
    for (std::uint64_t g = 0; g < 8; ++g) {
      const auto bx = BinaryVector::from_index(x, d), bg = BinaryVector::from_index(g, d);
      const double fwd = pi[x] * q[g] * acceptance(t, q[g], q[x], bx, bg);
      const double bwd = pi[g] * q[x] * acceptance(t, q[x], q[g], bg, bx);
      EXPECT_NEAR(fwd, bwd, 1e-15);
    }
}

TEST(Kernel, DetailedBalanceAndRowSums) {
  Rng rng(52);
  for (int d = 1; d <= 4; ++d)
    for (int t = 0; t < 5; ++t) {
      const DensePmf pi(d, oracle::random_positive_table(d, rng));
      const DensePmf q(d, oracle::random_positive_table(d, rng));
      const Matrix k = mh_kernel(pi, q);
      for (int x = 0; x < k.rows(); ++x) {
        EXPECT_NEAR(k.row(x).sum(), 1.0, 1e-12);
        for (int g = 0; g < k.cols(); ++g) {
          EXPECT_GE(k(x, g), 0.0);
          EXPECT_NEAR(pi[x] * k(x, g), pi[g] * k(g, x), 1e-12);
        }
      }
      // pi is stationary.
      Vector p(k.rows());
      for (int s = 0; s < p.size(); ++s) p[s] = pi[s];
      EXPECT_LT((k.transpose() * p - p).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Kernel, PreconditionsAreChecked) {
  EXPECT_THROW(mh_kernel(DensePmf::product(Vector::Constant(2, 0.5)), DensePmf::product(Vector::Constant(3, 0.5))),
               ArgumentError);
  EXPECT_THROW(mh_kernel(DensePmf(1, {1.0, 0.0}), DensePmf(1, {0.5, 0.5})), PreconditionError);
}

TEST(Autocov, IdenticalPmfsHaveNoResidual) {
  Rng rng(53);
  const DensePmf p(3, oracle::random_positive_table(3, rng));
  const AutocovCheck c = autocov_decomposition_check(p, p);
  EXPECT_LT(c.lhs.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(c.residual.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(c.bound, 0.0);
}

TEST(Autocov, CorrelatedPairAgainstProduct) {
  Vector m = Vector::Constant(2, 0.5);
  const BahadurCoefficients c{{0b11, 0.3}};
  const DensePmf pi = bahadur_pmf(m, c);
  const DensePmf q = DensePmf::product(m);
  const AutocovCheck r = autocov_decomposition_check(pi, q);
  EXPECT_LT(r.identity_error(), 1e-12);
  EXPECT_TRUE(r.bound_holds());
  EXPECT_NEAR(r.structural(0, 1), 0.5 * 0.3 * 0.25, 1e-15);
  EXPECT_NEAR(r.bound, 4 * 0.075, 1e-15);
}

TEST(Autocov, LhsMatchesDirectEnumeration) {
  Rng rng(54);
  const Vector m = (Vector(3) << 0.3, 0.55, 0.7).finished();
  const DensePmf pi = random_with_mean(m, 0.4, rng), q = random_with_mean(m, 0.4, rng);
  const Matrix k = mh_kernel(pi, q);
  Matrix lhs = -m * m.transpose();
  for (std::uint64_t x = 0; x < 8; ++x)
    for (std::uint64_t g = 0; g < 8; ++g)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          lhs(i, j) += pi[x] * k(static_cast<int>(x), static_cast<int>(g)) * oracle::bit(g, i) * oracle::bit(x, j);
  const AutocovCheck c = autocov_decomposition_check(pi, q);
  EXPECT_LT((c.lhs - lhs).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(c.identity_error(), 1e-12);
}

TEST(Autocov, RandomSameMeanPairs) {
  Rng rng(55);
  for (int t = 0; t < 50; ++t) {
    Vector m(4);
    for (int i = 0; i < 4; ++i) m[i] = 0.2 + 0.6 * rng.uniform();
    const DensePmf pi = random_with_mean(m, 0.5, rng), q = random_with_mean(m, 0.5, rng);
    const AutocovCheck c = autocov_decomposition_check(pi, q);
    EXPECT_LT(c.identity_error(), 1e-12);
    EXPECT_TRUE(c.bound_holds()) << c.residual.cwiseAbs().maxCoeff() << " > " << c.bound;
  }
}

TEST(Autocov, MeanMismatchIsRefused) {
  EXPECT_THROW(autocov_decomposition_check(DensePmf::product(Vector::Constant(2, 0.5)),
                                           DensePmf::product(Vector::Constant(2, 0.4))),
               PreconditionError);
  EXPECT_THROW(autocov_decomposition_check(DensePmf::product(Vector::Constant(7, 0.5)),
                                           DensePmf::product(Vector::Constant(7, 0.5))),
               PreconditionError);
}

TEST(Chain, ProposalEqualToTargetAlwaysAccepts) {
  Rng rng(56);
  const QuadExpFamily f(oracle::random_lower(4, 1.0, rng));
  ChainConfig cfg;
  cfg.steps = 5000;
  const ChainResult r = run_chain(TargetDensity::from_quadexp(f), Proposal(f), cfg, rng);
  EXPECT_EQ(r.stats.acceptance_rate, 1.0);
  EXPECT_EQ(r.stats.count, 4500u);
  EXPECT_EQ(r.samples.size(), 4500u);
}

TEST(Chain, MarginalsMatchTheTarget) {
  Rng rng(57);
  const Matrix a = oracle::random_lower(4, 1.0, rng);
  const QuadExpFamily target(a);
  const DensePmf dense = target.dense();
  FitConfig cfg;
  cfg.estimator = Estimator::exact;
  const ConditionalsFamily proposal = fit(CrossMomentMatrix(dense.cross_moments()), LinkFunction(), cfg).family;
  ChainConfig cc;
  cc.steps = 100000;
  cc.keep_samples = false;
  const ChainResult r = run_chain(TargetDensity::from_quadexp(target), Proposal(proposal), cc, rng);
  const Vector m = dense.mean();
  for (int i = 0; i < 4; ++i) {
    // Independent-MH draws are correlated; inflate the i.i.d. error by the
    // integrated autocorrelation, bounded through the rejection rate.
    const double rate = r.stats.acceptance_rate;
    const double sd = std::sqrt(m[i] * (1 - m[i]) / static_cast<double>(r.stats.count) * (2.0 / rate - 1.0));
    EXPECT_NEAR(r.stats.mean[i], m[i], 4 * sd) << i;
  }
  EXPECT_GT(r.stats.acceptance_rate, 0.8);
}

TEST(Chain, FarProposalAcceptsLess) {
  Rng rng(58);
  const Matrix a = oracle::random_lower(4, 1.0, rng);
  const QuadExpFamily target(a);
  Vector off(4);
  off << -3, 3, -3, 3;
  const ConditionalsFamily far(Matrix(off.asDiagonal()), LinkFunction());
  ChainConfig cc;
  cc.steps = 20000;
  Rng r1(1), r2(1);
  const double matched = run_chain(TargetDensity::from_quadexp(target), Proposal(target), cc, r1).stats.acceptance_rate;
  const double poor = run_chain(TargetDensity::from_quadexp(target), Proposal(far), cc, r2).stats.acceptance_rate;
  EXPECT_LT(poor, matched);
  EXPECT_GE(poor, 0.0);
}

TEST(Chain, SeededRunsRepeat) {
  const QuadExpFamily target(Matrix::Identity(3, 3) * 0.3);
  const ConditionalsFamily q(Matrix::Zero(3, 3), LinkFunction());
  ChainConfig cc;
  cc.steps = 3000;
  Rng a(9), b(9);
  const auto ra = run_chain(TargetDensity::from_quadexp(target), Proposal(q), cc, a);
  const auto rb = run_chain(TargetDensity::from_quadexp(target), Proposal(q), cc, b);
  EXPECT_EQ(ra.samples, rb.samples);
  EXPECT_EQ(ra.stats.lag1_autocov, rb.stats.lag1_autocov);
}
