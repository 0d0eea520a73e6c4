#include "clbf/polynomial.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "clbf/errors.hpp"

namespace clbf {
namespace {

// Term-by-term evaluation with std::pow, independent of int_pow.
double NaiveEval(const Polynomial& p, const Eigen::VectorXd& x) {
  double sum = 0.0;
  for (const Monomial& t : p.terms()) {
    double v = t.coeff;
    for (size_t i = 0; i < t.exponents.size(); ++i) v *= std::pow(x[i], t.exponents[i]);
    sum += v;
  }
  return sum;
}

GTEST_TEST(PolynomialTest, ParsesTermsInOrder) {
  const Polynomial p = Polynomial::parse("-1 * x1 + 0.5*x2^2 - 3 * x1 * x2", 2);
  ASSERT_EQ(p.terms().size(), 3);
  EXPECT_EQ(p.terms()[0], (Monomial{-1.0, {1, 0}}));
  EXPECT_EQ(p.terms()[1], (Monomial{0.5, {0, 2}}));
  EXPECT_EQ(p.terms()[2].coeff, -3.0);
  EXPECT_EQ(p.terms()[2].exponents, (std::vector<int>{1, 1}));
}

GTEST_TEST(PolynomialTest, RepeatedVariablesAddExponents) {
  const Polynomial p = Polynomial::parse("2 * x1 * x1^2 * 3", 1);
  ASSERT_EQ(p.terms().size(), 1);
  EXPECT_EQ(p.terms()[0], (Monomial{6.0, {3}}));
}

GTEST_TEST(PolynomialTest, ZeroIsEmpty) {
  EXPECT_TRUE(Polynomial::parse("0", 3).is_zero());
  EXPECT_TRUE(Polynomial::parse("0 * x1 + 0", 1).is_zero());
  EXPECT_EQ(Polynomial::parse("0", 2)(Eigen::Vector2d(1.0, 2.0)), 0.0);
}

GTEST_TEST(PolynomialTest, Evaluates) {
  const Polynomial p = Polynomial::parse("x1^2 - 2*x1*x2 + 1e-3", 2);
  EXPECT_DOUBLE_EQ(p(Eigen::Vector2d(3.0, 0.5)), 9.0 - 3.0 + 1e-3);
  EXPECT_EQ(Polynomial::constant(2, 4.5)(Eigen::Vector2d(7.0, -1.0)), 4.5);
}

GTEST_TEST(PolynomialTest, Partial) {
  const Polynomial p = Polynomial::parse("x1^3 * x2 + 5 * x2 + 7", 2);
  const Eigen::Vector2d x(1.5, -2.0);
  EXPECT_DOUBLE_EQ(p.partial(0)(x), 3.0 * 1.5 * 1.5 * -2.0);
  EXPECT_DOUBLE_EQ(p.partial(1)(x), 1.5 * 1.5 * 1.5 + 5.0);
  EXPECT_TRUE(Polynomial::parse("7", 2).partial(1).is_zero());
}

GTEST_TEST(PolynomialTest, RejectsMalformedText) {
  for (const char* bad : {"", "x", "x0", "x3", "x1^", "x1^-2", "2 +", "* x1", "x1 x2 +", "1..2", "nan", "x1^2.5"}) {
    EXPECT_THROW(Polynomial::parse(bad, 2), InputError) << bad;
  }
}

GTEST_TEST(PolynomialTest, RejectsBadTerms) {
  EXPECT_THROW(Polynomial(2, {Monomial{1.0, {1}}}), InputError);
  EXPECT_THROW(Polynomial(1, {Monomial{1.0, {-1}}}), InputError);
  EXPECT_THROW(Polynomial(1, {Monomial{INFINITY, {1}}}), InputError);
}

GTEST_TEST(PolynomialTest, IntPow) {
  EXPECT_EQ(int_pow(2.0, 0), 1.0);
  EXPECT_EQ(int_pow(2.0, 10), 1024.0);
  EXPECT_EQ(int_pow(-3.0, 3), -27.0);
}

GTEST_TEST(PolynomialTest, MatchesNaiveOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coeff(-3.0, 3.0);
  std::uniform_int_distribution<int> power(0, 4);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::vector<Monomial> terms;
  for (int t = 0; t < 12; ++t) terms.push_back({coeff(rng), {power(rng), power(rng), power(rng)}});
  const Polynomial p(3, terms);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d x(coord(rng), coord(rng), coord(rng));
    const double expected = NaiveEval(p, x);
    double scale = 0.0;
    for (const Monomial& t : p.terms()) {
      double v = std::abs(t.coeff);
      for (int a = 0; a < 3; ++a) v *= std::pow(std::abs(x[a]), t.exponents[a]);
      scale += v;
    }
    EXPECT_LE(std::abs(p(x) - expected), 1e-12 * scale);
  }
}

GTEST_TEST(PolynomialTest, TextRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coeff(-10.0, 10.0);
  std::uniform_int_distribution<int> power(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Monomial> terms;
    for (int t = 0; t < 5; ++t) terms.push_back({coeff(rng), {power(rng), power(rng)}});
    const Polynomial p(2, terms);
    EXPECT_EQ(Polynomial::parse(p.to_string(), 2), p) << p.to_string();
  }
}

GTEST_TEST(PolynomialTest, FormatRealRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.16666666666666666}) {
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
  EXPECT_EQ(format_real(2.0), "2");
}

}  // namespace
}  // namespace clbf
