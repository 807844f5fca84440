#include <gtest/gtest.h>

#include <cmath>

#include "binfam/conditionals.hpp"
#include "oracles.hpp"

using namespace binfam;

namespace {

const LinkFunction kLinks[] = {LinkFunction(LinkKind::logistic), LinkFunction(LinkKind::truncated_linear),
                               LinkFunction(LinkKind::probit), LinkFunction(LinkKind::cloglog)};

Matrix two_by_two(double a11, double a21, double a22) {
  Matrix a(2, 2);
  a << a11, 0, a21, a22;
  return a;
}

}  // namespace

TEST(Link, ParseAndName) {
  EXPECT_EQ(LinkFunction::parse("logistic").kind(), LinkKind::logistic);
  EXPECT_EQ(LinkFunction::parse("truncated-linear").kind(), LinkKind::truncated_linear);
  EXPECT_EQ(LinkFunction::parse("linear").kind(), LinkKind::truncated_linear);
  EXPECT_EQ(LinkFunction::parse("probit").kind(), LinkKind::probit);
  EXPECT_EQ(LinkFunction::parse("cloglog").kind(), LinkKind::cloglog);
  EXPECT_THROW(LinkFunction::parse("tanh"), ArgumentError);
  for (auto l : kLinks) EXPECT_EQ(LinkFunction::parse(l.name()), l);
  EXPECT_FALSE(LinkFunction(LinkKind::truncated_linear).bijective());
}

TEST(Link, RoundTripOnBijectiveLinks) {
  for (auto l : kLinks) {
    if (!l.bijective()) continue;
    for (double p = 1e-6; p < 1.0; p += 0.0137) EXPECT_NEAR(l.eval(l.inverse(p)), p, 1e-10) << l.name() << ' ' << p;
    EXPECT_NEAR(l.eval(l.inverse(1e-6)), 1e-6, 1e-10);
    EXPECT_NEAR(l.eval(l.inverse(1 - 1e-6)), 1 - 1e-6, 1e-10);
  }
}

TEST(Link, MonotoneAndInUnitInterval) {
  for (auto l : kLinks) {
    double prev = l.eval(-60.0);
    for (double x = -60.0; x <= 60.0; x += 0.05) {
      const double v = l.eval(x);
      EXPECT_GE(v, prev) << l.name() << ' ' << x;
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      prev = v;
    }
  }
}

TEST(Link, DerivativesMatchFiniteDifferences) {
  for (auto l : kLinks)
    for (double x : {-3.0, -0.7, 0.2, 0.55, 1.9}) {
      if (l.kind() == LinkKind::truncated_linear && (x < 0 || x > 1)) {
        EXPECT_EQ(l.derivative(x), 0.0);
        continue;
      }
      const double e = 1e-6;
      EXPECT_NEAR(l.derivative(x), (l.eval(x + e) - l.eval(x - e)) / (2 * e), 1e-7) << l.name() << ' ' << x;
    }
  const LinkFunction lin(LinkKind::truncated_linear);
  EXPECT_EQ(lin.derivative(0.0), 0.0);
  EXPECT_EQ(lin.derivative(1.0), 0.0);
  EXPECT_EQ(lin.eval(-0.3), 0.0);
  EXPECT_EQ(lin.eval(1.3), 1.0);
  EXPECT_EQ(lin.eval(0.3), 0.3);
}

TEST(Link, LogisticSaturatesExactly) {
  const LinkFunction l(LinkKind::logistic);
  EXPECT_EQ(l.eval(kLogisticSaturation + 1.0), 1.0);
  EXPECT_EQ(l.eval(-kLogisticSaturation - 1.0), 0.0);
  EXPECT_EQ(l.eval(1000.0), 1.0);
  EXPECT_NEAR(l.eval(2.0), 0.8807970779778823, 1e-16);
}

TEST(Conditionals, RejectsBadParameters) {
  Matrix upper = Matrix::Zero(2, 2);
  upper(0, 1) = 0.5;
  EXPECT_THROW(ConditionalsFamily(upper, LinkFunction()), ArgumentError);
  EXPECT_THROW(ConditionalsFamily(Matrix::Zero(2, 3), LinkFunction()), ArgumentError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 0) = NAN;
  EXPECT_THROW(ConditionalsFamily(bad, LinkFunction()), ArgumentError);
}

TEST(Conditionals, FairCoinsGiveUniformMass) {
  const ConditionalsFamily f(Matrix::Zero(2, 2), LinkFunction());
  Rng rng(1);
  for (int t = 0; t < 20; ++t) EXPECT_DOUBLE_EQ(f.sample(rng).p, 0.25);
  for (std::uint64_t s = 0; s < 4; ++s) EXPECT_DOUBLE_EQ(f.pmf(BinaryVector::from_index(s, 2)), 0.25);
}

TEST(Conditionals, CoupledPairMass) {
  const ConditionalsFamily f(two_by_two(0, 2, 0), LinkFunction());
  EXPECT_NEAR(f.pmf(BinaryVector({1, 1})), 0.5 / (1 + std::exp(-2.0)), 1e-16);
  EXPECT_NEAR(f.pmf(BinaryVector({1, 1})), 0.440398, 1e-6);
  EXPECT_THROW(f.pmf(BinaryVector({1, 1, 0})), ArgumentError);
}

TEST(Conditionals, ProductFamily) {
  Vector m(3);
  m << 0.2, 0.65, 0.9;
  for (auto l : kLinks) {
    const auto f = ConditionalsFamily::product(m, l);
    for (std::uint64_t s = 0; s < 8; ++s) {
      double expect = 1.0;
      for (int i = 0; i < 3; ++i) expect *= oracle::bit(s, i) ? m[i] : 1 - m[i];
      EXPECT_NEAR(f.pmf(BinaryVector::from_index(s, 3)), expect, 1e-10) << l.name();
    }
  }
  Vector m2(2);
  m2 << 0.3, 0.7;
  const Matrix mm = family_moments(ConditionalsFamily::product(m2, LinkFunction()));
  EXPECT_NEAR(mm(0, 0), 0.3, 1e-12);
  EXPECT_NEAR(mm(1, 1), 0.7, 1e-12);
  EXPECT_NEAR(mm(0, 1), 0.21, 1e-12);
  EXPECT_NEAR(mm(1, 0), 0.21, 1e-12);
}

TEST(Conditionals, SingleBernoulli) {
  const LinkFunction l;
  Matrix a(1, 1);
  a(0, 0) = l.inverse(0.9);
  EXPECT_NEAR(family_moments(ConditionalsFamily(a, l))(0, 0), 0.9, 1e-14);
}

TEST(Conditionals, MatchesEnumerationOracle) {
  Rng rng(5);
  for (auto l : kLinks)
    for (int d = 1; d <= 8; ++d) {
      Matrix a = oracle::random_lower(d, 1.5, rng);
      if (l.kind() == LinkKind::truncated_linear) a = oracle::random_lower(d, 0.3, rng, 0.5) + Matrix::Identity(d, d) * 0.5;
      const ConditionalsFamily f(a, l);
      const auto table = oracle::conditionals_table(a, [&](double x) { return l.eval(x); });
      const DensePmf dense = f.dense();
      double total = 0.0;
      for (std::uint64_t s = 0; s < table.size(); ++s) {
        EXPECT_NEAR(dense[s], table[s], 1e-14);
        total += dense[s];
      }
      EXPECT_NEAR(total, 1.0, 1e-12) << l.name() << " d=" << d;
      EXPECT_LT((family_moments(f) - oracle::moments(table, d)).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(Conditionals, LogisticQuadraticForm) {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    const int d = 1 + static_cast<int>(rng.below(7));
    const Matrix a = oracle::random_lower(d, 2.0, rng, 2.0);
    const ConditionalsFamily f(a, LinkFunction());
    for (std::uint64_t s = 0; s < (1ULL << d); ++s) {
      double quad = 0.0, norm = 0.0;
      for (int i = 0; i < d; ++i) {
        double eta = a(i, i);
        for (int j = 0; j < i; ++j) eta += a(i, j) * oracle::bit(s, j);
        for (int j = 0; j <= i; ++j) quad += a(i, j) * oracle::bit(s, i) * oracle::bit(s, j);
        norm += std::log1p(std::exp(eta));
      }
      EXPECT_NEAR(std::log(f.pmf(BinaryVector::from_index(s, d))), quad - norm, 1e-12);
    }
  }
}

TEST(Conditionals, SampledMassIsPmfBitForBit) {
  Rng rng(7);
  for (auto l : kLinks) {
    const ConditionalsFamily f(oracle::random_lower(5, 1.0, rng, 0.8) + (l.kind() == LinkKind::truncated_linear
                                                                              ? Matrix(Matrix::Identity(5, 5) * 0.5)
                                                                              : Matrix(Matrix::Zero(5, 5))),
                               l);
    for (int t = 0; t < 200; ++t) {
      const auto draw = f.sample(rng);
      EXPECT_EQ(draw.p, f.pmf(draw.x)) << l.name();
    }
  }
}

TEST(Conditionals, SamplingConsumesOneUniformPerComponent) {
  const ConditionalsFamily f(Matrix::Zero(4, 4), LinkFunction());
  Rng a(99), b(99);
  f.sample(a);
  for (int i = 0; i < 4; ++i) b.uniform();
  EXPECT_EQ(a(), b());
}

TEST(Conditionals, PrefixTableMarginalizes) {
  Rng rng(8);
  const Matrix a = oracle::random_lower(5, 1.0, rng);
  const ConditionalsFamily f(a, LinkFunction());
  const auto full = f.dense().probs();
  for (int k = 0; k <= 5; ++k) {
    const auto pre = f.prefix_table(k);
    ASSERT_EQ(pre.size(), std::size_t{1} << k);
    std::vector<double> expect(pre.size(), 0.0);
    for (std::uint64_t s = 0; s < full.size(); ++s) expect[s & ((1ULL << k) - 1)] += full[s];
    for (std::size_t s = 0; s < pre.size(); ++s) EXPECT_NEAR(pre[s], expect[s], 1e-14);
  }
}

TEST(Conditionals, MonteCarloMomentsNearExact) {
  Rng rng(9);
  const ConditionalsFamily f(oracle::random_lower(5, 1.0, rng), LinkFunction());
  Rng mc(10);
  const Matrix est = family_moments(f, MomentEstimator::monte_carlo(1000000), mc);
  EXPECT_LT((est - family_moments(f)).cwiseAbs().maxCoeff(), 5e-3);
  EXPECT_LT((est - est.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  for (int i = 0; i < 5; ++i) {
    EXPECT_GE(est(i, i), 0.0);
    EXPECT_LE(est(i, i), 1.0);
  }
}

TEST(Conditionals, EnumerationCap) {
  const ConditionalsFamily f(Matrix::Zero(kEnumerationCap + 1, kEnumerationCap + 1), LinkFunction());
  EXPECT_THROW(f.dense(), CapError);
  EXPECT_THROW(family_moments(f), CapError);
  Rng rng(1);
  EXPECT_NO_THROW(family_moments(f, MomentEstimator::monte_carlo(10), rng));
}
