#include "fixtures.hpp"
#include "ifsda/errors.hpp"
#include "ifsda/ifs_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ifsda;

TEST(SimilarityDimension, ClosedForms) {
  EXPECT_NEAR(similarity_dimension(fixtures::cantor()), 0.6309297535714574, 1e-13);
  // 2^-s solves y + y^2 = 1
  double s = similarity_dimension(fixtures::golden());
  EXPECT_NEAR(s, 0.6942419136306173, 1e-12);
  EXPECT_NEAR(s, -std::log2((std::sqrt(5.0) - 1) / 2), 1e-12);
  EXPECT_DOUBLE_EQ(similarity_dimension(fixtures::dyadic()), 1.0);
  EXPECT_NEAR(similarity_dimension(fixtures::figure2()), 1.2348443547266158, 1e-10);
}

TEST(NaturalWeights, Values) {
  auto p = natural_weights(fixtures::golden());
  EXPECT_NEAR(p[0], 0.6180339887498949, 1e-12);
  EXPECT_NEAR(p[1], 0.3819660112501052, 1e-12);
  auto c = natural_weights(fixtures::cantor());
  EXPECT_NEAR(c[0], 0.5, 1e-15);
  auto f = natural_weights(fixtures::figure2());
  double sum = 0;
  for (double w : f.weights()) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-10);
}

TEST(Entropy, Values) {
  EXPECT_NEAR(entropy(ProbabilityVector::uniform(2)), std::log(2.0), 1e-15);
  EXPECT_NEAR(entropy(ProbabilityVector(std::vector<double>{0.9, 0.1})), 0.3250829733914482, 1e-12);
  EXPECT_NEAR(entropy(natural_weights(fixtures::golden())), 0.6650183864440036, 1e-12);
  EXPECT_THROW(ProbabilityVector(std::vector<double>{1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(ProbabilityVector(std::vector<double>{0.5, 0.6}), std::invalid_argument);
}

TEST(Lyapunov, Values) {
  EXPECT_NEAR(lyapunov(fixtures::cantor(), ProbabilityVector::uniform(2)), std::log(3.0), 1e-15);
  auto g = fixtures::golden();
  EXPECT_NEAR(lyapunov(g, natural_weights(g)), 0.9579058443276840, 1e-12);
}

TEST(MeasureInequality, Values) {
  auto u = check_measure_inequality(ProbabilityVector::uniform(2));
  EXPECT_TRUE(u.holds);
  EXPECT_NEAR(u.margin, std::log(2.0), 1e-14);
  ProbabilityVector skew(std::vector<double>{0.97, 0.03});
  auto s = check_measure_inequality(skew);
  EXPECT_FALSE(s.holds);
  EXPECT_NEAR(entropy(skew), 0.1347421681797667, 1e-12);
  EXPECT_NEAR(-2 * std::log(skew.sum_squares()), 0.1199246823453657, 1e-12);
}

TEST(BoundaryWeights, Digits) {
  auto b = boundary_weight_two_maps(1e-6);
  EXPECT_GT(b.high, 0.951);
  EXPECT_LT(b.high, 0.952);
  EXPECT_GT(b.low, 0.048);
  EXPECT_LT(b.low, 0.049);
  EXPECT_NEAR(b.low + b.high, 1.0, 2e-6);
  EXPECT_NEAR(b.high, 0.9511008793957186, 1e-6);
}

TEST(EpsilonStar, Values) {
  auto c = fixtures::cantor();
  EXPECT_NEAR(epsilon_star(c, natural_weights(c)), 0.3465735902799727, 1e-12);
  auto g = fixtures::golden();
  EXPECT_NEAR(epsilon_star(g, natural_weights(g)), 0.3064073257397584, 1e-12);
  EXPECT_THROW(epsilon_star(c, ProbabilityVector(std::vector<double>{0.97, 0.03})), std::domain_error);
}

TEST(ExactOverlap, Detection) {
  auto w = detect_exact_overlap(fixtures::overlapping(), 2);
  ASSERT_TRUE(w.witness.has_value());
  auto a = compose_exact(fixtures::overlapping(), w.witness->first);
  auto b = compose_exact(fixtures::overlapping(), w.witness->second);
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.p, b.p);
  EXPECT_NE(w.witness->first, w.witness->second);
  EXPECT_FALSE(detect_exact_overlap(fixtures::cantor(), 6).witness.has_value());
  EXPECT_FALSE(detect_exact_overlap(fixtures::dyadic(), 4).witness.has_value());
}

TEST(AttractorBounds, Boxes) {
  auto cantor = fixtures::cantor();
  const auto& b = attractor_bounds(cantor);
  EXPECT_EQ(b.mode, HullMode::Box);
  EXPECT_EQ(b.exact_lo[0], Rational(0));
  EXPECT_EQ(b.exact_hi[0], Rational(1));
  EXPECT_DOUBLE_EQ(b.diam_upper, 1.0);
  EXPECT_LE(b.diam_refined, 1.0);
  EXPECT_GT(b.diam_refined, 1.0 - 1e-6);
  EXPECT_NEAR(fixtures::figure1().diam(), std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(fixtures::dyadic().diam(), 1.0);
}

TEST(AttractorBounds, RotatedMapsUseBall) {
  std::vector<double> rot = {0, -1, 1, 0};
  IFSystem ifs({"a", "b"}, {SimilarityMap::from_float(0.4, {0, 0}, rot), SimilarityMap::from_float(0.4, {1, 0})});
  const auto& b = ifs.bounds();
  EXPECT_EQ(b.mode, HullMode::Ball);
  EXPECT_LE(b.diam_refined, b.diam_upper);
  EXPECT_GE(b.diam_refined, 1.0 - 1e-9);  // both fixed points lie in X
}

TEST(Validation, RejectsBadSystems) {
  EXPECT_THROW(IFSystem({"a"}, {SimilarityMap::from_exact({0}, 2)}), ValidationError);
  EXPECT_THROW(IFSystem({"a", "a"}, {SimilarityMap::from_exact({0}, 2), SimilarityMap::from_exact({1}, 2)}),
               ValidationError);
  auto pair_with = [](SimilarityMap m) {
    std::size_t d = m.dimension();
    return IFSystem({"a", "b"}, {m, SimilarityMap::from_float(0.5, std::vector<double>(d, 0.0))});
  };
  EXPECT_THROW(pair_with(SimilarityMap::from_exact({0}, 1)), ValidationError);
  EXPECT_THROW(pair_with(SimilarityMap::from_float(1.0, {0})), ValidationError);
  EXPECT_THROW(pair_with(SimilarityMap::from_float(0.5, {0, 0}, {1, 0.1, 0, 1})), ValidationError);
  EXPECT_THROW(IFSystem({"a", "b"}, {SimilarityMap::from_exact({0}, 2), SimilarityMap::from_exact({0, 1}, 2)}),
               ValidationError);
}

TEST(Identities, RandomSystems) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> ratio(0.05, 0.6), shift(-1, 1);
  std::uniform_int_distribution<int> count(2, 6);
  for (int trial = 0; trial < 100; ++trial) {
    int k = count(rng);
    std::vector<std::string> labels;
    std::vector<SimilarityMap> maps;
    for (int a = 0; a < k; ++a) {
      labels.push_back(std::to_string(a));
      maps.push_back(SimilarityMap::from_float(ratio(rng), {shift(rng)}));
    }
    IFSystem ifs(labels, maps);
    double s = similarity_dimension(ifs, 1e-14);
    double sum = 0;
    for (double r : ifs.ratios()) sum += std::pow(r, s);
    EXPECT_NEAR(sum, 1.0, 1e-9);
    auto p = natural_weights(ifs);
    EXPECT_NEAR(entropy(p), s * lyapunov(ifs, p), 1e-9);
  }
}

TEST(Composition, ExactAndFloatAgree) {
  auto ifs = fixtures::figure2();
  Word w = {3, 1, 0, 2};
  auto e = compose_exact(ifs, w);
  auto f = compose_float(ifs, w);
  auto r = compose_rational(ifs, w);
  RationalVector x = {Rational(1, 3), Rational(1, 7)};
  auto ex = e.apply(x);
  auto rx = r.apply(x);
  auto fx = f.apply(std::vector<double>{1.0 / 3, 1.0 / 7});
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(ex[i], rx[i]);
    EXPECT_NEAR(to_double(ex[i]), fx[i], 1e-15);
  }
  EXPECT_EQ(e.q, Integer(3 * 4 * 2 * 5));
}
