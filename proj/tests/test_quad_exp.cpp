#include <gtest/gtest.h>

#include <cmath>

#include "binfam/quad_exp.hpp"
#include "oracles.hpp"

using namespace binfam;

namespace {

// Marginal of the first k components of a full table.
std::vector<double> marginalize(const std::vector<double>& p, int k) {
  std::vector<double> out(std::size_t{1} << k, 0.0);
  for (std::uint64_t s = 0; s < p.size(); ++s) out[s & ((1ULL << k) - 1)] += p[s];
  return out;
}

Matrix scaled_offdiagonal(const Matrix& base, double scale) {
  Matrix a = base;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < i; ++j) a(i, j) *= scale;
  return a;
}

// Random lower-triangular A with off-diagonal in [-1, 1] and diagonal in [-0.5, 0.5].
Matrix base_couplings(int d, Rng& rng) { return oracle::random_lower(d, 1.0, rng, 0.5); }

}  // namespace

TEST(QuadExp, RejectsBadParameters) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(QuadExpFamily{a}, ArgumentError);
  EXPECT_THROW(QuadExpFamily(Matrix::Zero(2, 1)), ArgumentError);
}

TEST(QuadExp, DiagonalIsAProductFamily) {
  Vector diag(3);
  diag << -1.0, 0.3, 2.0;
  const QuadExpFamily f(Matrix(diag.asDiagonal()));
  for (std::uint64_t s = 0; s < 8; ++s) {
    double expect = 1.0;
    for (int i = 0; i < 3; ++i) expect *= oracle::bit(s, i) ? oracle::logistic(diag[i]) : 1 - oracle::logistic(diag[i]);
    EXPECT_NEAR(f.pmf(BinaryVector::from_index(s, 3)), expect, 1e-15);
  }
}

TEST(QuadExp, MatchesEnumerationAndNormalizes) {
  Rng rng(41);
  for (int d = 1; d <= 8; ++d) {
    const Matrix a = oracle::random_lower(d, 1.5, rng);
    const QuadExpFamily f(a);
    const auto table = oracle::quadexp_table(a);
    double total = 0.0;
    for (std::uint64_t s = 0; s < table.size(); ++s) {
      const double p = f.pmf(BinaryVector::from_index(s, d));
      EXPECT_NEAR(p, table[s], 1e-14);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(f.dense()[table.size() - 1], table.back(), 1e-14);
  }
}

TEST(QuadExp, AttachedNormalizerIsUsedVerbatim) {
  const QuadExpFamily big(Matrix::Zero(kEnumerationCap + 2, kEnumerationCap + 2));
  EXPECT_FALSE(big.has_log_norm());
  EXPECT_THROW(big.log_norm(), CapError);
  const QuadExpFamily attached(Matrix::Zero(kEnumerationCap + 2, kEnumerationCap + 2), -(kEnumerationCap + 2) * std::log(2.0));
  EXPECT_TRUE(attached.has_log_norm());
  EXPECT_NEAR(attached.pmf(BinaryVector::from_index(5, kEnumerationCap + 2)), std::pow(0.5, kEnumerationCap + 2), 1e-22);
}

TEST(QuadExp, ConditionalsAreLogisticRegressions) {
  Rng rng(42);
  const int d = 4;
  const Matrix a = oracle::random_lower(d, 1.5, rng);
  const QuadExpFamily f(a);
  const auto table = oracle::quadexp_table(a);
  for (std::uint64_t s = 0; s < table.size(); ++s)
    for (int i = 0; i < d; ++i) {
      const std::uint64_t on = s | (1ULL << i), off = s & ~(1ULL << i);
      const double expect = table[on] / (table[on] + table[off]);
      EXPECT_NEAR(f.conditional(BinaryVector::from_index(s, d), i), expect, 1e-12);
    }
}

TEST(QuadExp, UncoupledComponentHasConstantConditional) {
  Matrix a(2, 2);
  a << 0.4, 0, 0, -0.7;
  const QuadExpFamily f(a);
  EXPECT_DOUBLE_EQ(f.conditional(BinaryVector({0, 0}), 1), f.conditional(BinaryVector({1, 0}), 1));
  EXPECT_NEAR(f.conditional(BinaryVector({1, 0}), 1), oracle::logistic(-0.7), 1e-15);
}

TEST(QuadExp, ConditionalNeedsNoNormalizer) {
  const QuadExpFamily big(Matrix::Zero(kEnumerationCap + 1, kEnumerationCap + 1));
  EXPECT_DOUBLE_EQ(big.conditional(BinaryVector::from_index(0, kEnumerationCap + 1), 3), 0.5);
}

TEST(QuadExp, SamplerFollowsThePmf) {
  Rng rng(43);
  const Matrix a = oracle::random_lower(3, 1.0, rng);
  const QuadExpFamily f(a);
  const auto table = oracle::quadexp_table(a);
  std::vector<double> counts(8, 0.0);
  const int n = 400000;
  for (int k = 0; k < n; ++k) counts[f.sample(rng).to_index()] += 1.0;
  for (std::size_t s = 0; s < 8; ++s) {
    const double sd = std::sqrt(table[s] * (1 - table[s]) / n);
    EXPECT_NEAR(counts[s] / n, table[s], 4 * sd);
  }
}

TEST(QuadExpMarginal, UniformForZeroParameters) {
  const QuadExpFamily f(Matrix::Zero(2, 2));
  EXPECT_NEAR(std::exp(qe_marginal_unnorm(f, BinaryVector({0}))), 0.5, 1e-15);
  EXPECT_NEAR(std::exp(qe_marginal_unnorm(f, BinaryVector({1}))), 0.5, 1e-15);
}

TEST(QuadExpMarginal, MatchesOracleMarginalization) {
  Rng rng(44);
  const int d = 4;
  const Matrix a = oracle::random_lower(d, 1.5, rng);
  const QuadExpFamily f(a);
  const auto marg = marginalize(oracle::quadexp_table(a), d - 1);
  for (std::uint64_t s = 0; s < marg.size(); ++s)
    EXPECT_NEAR(std::exp(qe_marginal_unnorm(f, BinaryVector::from_index(s, d - 1))), marg[s], 1e-12);
}

TEST(QuadExpMarginal, VanishingLastComponent) {
  Matrix a(2, 2);
  a << 0.8, 0, 1.3, -60.0;
  const QuadExpFamily f(a, 0.0);
  EXPECT_NEAR(qe_marginal_unnorm(f, BinaryVector({1})), 0.8, 1e-15);
  EXPECT_NEAR(qe_marginal_unnorm(f, BinaryVector({0})), 0.0, 1e-15);
}

TEST(Cox, CoefficientValues) {
  const CoxCoefficients z = cox_coeffs(0.0);
  EXPECT_EQ(z.c1, 0.0);
  EXPECT_EQ(z.c2, 0.0);
  EXPECT_EQ(z.c3, 0.125);
  const CoxCoefficients two = cox_coeffs(2.0);
  EXPECT_NEAR(two.c1, std::log(std::cosh(1.0)), 1e-15);
  EXPECT_NEAR(two.c2, std::tanh(1.0) / 2, 1e-15);
  EXPECT_NEAR(two.c3, 1.0 / (8 * std::cosh(1.0) * std::cosh(1.0)), 1e-15);
  // Large arguments stay finite.
  const CoxCoefficients big = cox_coeffs(2000.0);
  EXPECT_NEAR(big.c1, 1000.0 - std::log(2.0), 1e-9);
  EXPECT_GE(big.c3, 0.0);
  for (double a = -50; a <= 50; a += 0.5) EXPECT_GE(cox_coeffs(a).c3, 0.0);
}

TEST(Cox, TaylorRemainderIsCubic) {
  for (double a : {-3.0, -0.4, 0.0, 1.1, 2.0}) {
    const CoxCoefficients c = cox_coeffs(a);
    auto remainder = [&](double x) {
      return std::abs(std::log(std::cosh(a / 2 + x / 2)) - (c.c1 + c.c2 * x + c.c3 * x * x));
    };
    for (double x = 0.1; x > 1e-3; x /= 2) {
      EXPECT_LT(remainder(x), 0.05 * x * x) << a;
      if (x > 2e-3) {
        EXPECT_LT(remainder(x / 2), remainder(x) / 4.0 + 1e-15) << a << ' ' << x;
      }
    }
  }
}

TEST(Cox, ConstantsAgreeWithEnumerationInTwoDimensions) {
  // With gamma_1 in {0, 1} the quadratic in x = a21 gamma_1 is exact at
  // x = 0, and at x = a21 the error is the Taylor remainder.
  Matrix a(2, 2);
  a << 0.3, 0, 0.02, -0.4;
  const QuadExpFamily f(a);
  const CoxStep step = cox_marginal_step(f);
  ASSERT_EQ(step.family.dim(), 1);
  const auto marg = marginalize(oracle::quadexp_table(a), 1);
  const double h = f.log_norm();
  for (std::uint64_t s = 0; s < 2; ++s) {
    const double approx = std::exp(h + step.log_norm_shift + step.family.energy(BinaryVector::from_index(s, 1)));
    EXPECT_NEAR(approx, marg[s], 1e-6) << s;
  }
  EXPECT_NEAR(std::exp(h + step.log_norm_shift + step.family.energy(BinaryVector({0}))), marg[0], 1e-15);
  const CoxCoefficients c = cox_coeffs(-0.4);
  EXPECT_NEAR(step.log_norm_shift, std::log(2.0) + c.c1 - 0.2, 1e-15);
}

TEST(Cox, DiagonalStepOnlyShiftsTheNormalizer) {
  Vector diag(3);
  diag << 0.5, -1.0, 0.7;
  const QuadExpFamily f(Matrix(diag.asDiagonal()));
  const CoxStep step = cox_marginal_step(f);
  EXPECT_EQ(step.family.params(), Matrix(diag.head(2).asDiagonal()));
  EXPECT_NEAR(step.log_norm_shift, std::log1p(std::exp(0.7)), 1e-14);
  EXPECT_THROW(cox_marginal_step(QuadExpFamily(Matrix::Zero(1, 1))), ArgumentError);
}

TEST(Cox, StepIsAccurateForSmallCouplings) {
  Rng rng(45);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = scaled_offdiagonal(base_couplings(3, rng), 0.1);
    const QuadExpFamily f(a);
    const auto marg = marginalize(oracle::quadexp_table(a), 2);
    const auto approx = cox_marginal_step(f).family.dense().probs();
    EXPECT_LT(0.5 * oracle::l1(marg, approx), 1e-3);
  }
}

TEST(Cox, StepDegradesForLargeCouplings) {
  Matrix a = Matrix::Constant(3, 3, 3.0).triangularView<Eigen::Lower>();
  const auto marg = marginalize(oracle::quadexp_table(a), 2);
  const double tv_large = 0.5 * oracle::l1(marg, cox_marginal_step(QuadExpFamily(a)).family.dense().probs());
  const Matrix small = scaled_offdiagonal(a, 0.03);
  const auto marg_small = marginalize(oracle::quadexp_table(small), 2);
  const double tv_small =
      0.5 * oracle::l1(marg_small, cox_marginal_step(QuadExpFamily(small)).family.dense().probs());
  EXPECT_GT(tv_large, tv_small);
}

TEST(CoxCascade, LevelsAndOrder) {
  Rng rng(46);
  const QuadExpFamily f(oracle::random_lower(5, 0.2, rng));
  const CoxCascade c = cox_cascade(f);
  ASSERT_EQ(c.levels.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(c.levels[k].dim(), static_cast<int>(k) + 1);
  EXPECT_EQ(c.levels.back().params(), f.params());
  EXPECT_EQ(c.order, (std::vector<int>{4, 3, 2, 1}));
  EXPECT_EQ(c.logistic.link().kind(), LinkKind::logistic);
  // Row k is the full conditional of the last component at level k.
  for (int k = 0; k < 5; ++k) EXPECT_EQ(c.logistic.params().row(k).head(k + 1), c.levels[static_cast<std::size_t>(k)].params().row(k));
}

TEST(CoxCascade, DiagonalGivesTheProductFamily) {
  Vector diag(4);
  diag << 0.5, -1.0, 0.7, 0.0;
  const ConditionalsFamily g = derive_logistic_family(QuadExpFamily(Matrix(diag.asDiagonal())));
  EXPECT_LT((g.params() - Matrix(diag.asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CoxCascade, LastRowIsExact) {
  Rng rng(47);
  const Matrix a = oracle::random_lower(4, 1.0, rng);
  const ConditionalsFamily g = derive_logistic_family(QuadExpFamily(a));
  EXPECT_EQ(g.params().row(3), a.row(3));
}

TEST(CoxCascade, FidelityAtSmallCouplings) {
  Rng rng(48);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = scaled_offdiagonal(base_couplings(6, rng), 0.05);
    const auto target = oracle::quadexp_table(a);
    const ConditionalsFamily g = derive_logistic_family(QuadExpFamily(a));
    const auto approx = oracle::conditionals_table(g.params(), oracle::logistic);
    EXPECT_LE(oracle::l1(target, approx), 1e-2);
    EXPECT_LE((oracle::moments(target, 6) - oracle::moments(approx, 6)).cwiseAbs().maxCoeff(), 1e-2);
  }
}

TEST(CoxCascade, DistanceShrinksAlongTheCouplingLadder) {
  Rng rng(49);
  for (int t = 0; t < 10; ++t) {
    const Matrix base = base_couplings(6, rng);
    double prev = INFINITY;
    for (double scale : {0.4, 0.2, 0.1, 0.05}) {
      const Matrix a = scaled_offdiagonal(base, scale);
      const auto approx = oracle::conditionals_table(derive_logistic_family(QuadExpFamily(a)).params(), oracle::logistic);
      const double dist = oracle::l1(oracle::quadexp_table(a), approx);
      EXPECT_LT(dist, prev) << "scale " << scale;
      prev = dist;
    }
  }
}
