#include "fixtures.hpp"
#include "ifsda/limsup_lab.hpp"
#include "ifsda/rational_points.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ifsda;

namespace {

bool is_prefix(const Word& a, const Word& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

// m(E cap F) from the explicit cylinder words.
Rational brute_intersection(const LevelSet& E, const LevelSet& F, const ProbabilityVector& p) {
  Rational total = 0;
  for (const auto& x : E.cylinders) {
    Word wx = E.word(x);
    for (const auto& y : F.cylinders) {
      Word wy = F.word(y);
      if (is_prefix(wx, wy)) total += cylinder_measure_exact(p, wy);
      else if (is_prefix(wy, wx)) total += cylinder_measure_exact(p, wx);
    }
  }
  return total;
}

LevelSet cantor_level(int n, const LevelSetOptions& opt = {}) {
  auto c = fixtures::cantor();
  auto p = natural_weights(c);
  double s = similarity_dimension(c);
  auto g2 = g2_transform(g1_transform(RateFunction::constant(1), s, false), s);
  return build_level_set(c, p, Word{1}, n, epsilon_star(c, p), g2, opt);
}

}  // namespace

TEST(Extension, Parameters) {
  auto c = fixtures::cantor();
  Word a = {0, 1, 0, 1};
  auto e = extension_params(c, a, 0, 0.1);
  EXPECT_EQ(e.appended, 3);  // 3^-3 < 0.1 <= 3^-2
  EXPECT_EQ(e.h, 1);
  EXPECT_EQ(e.j, 3);
  EXPECT_EQ(extension_params(c, a, 0, 1.0).appended, 1);
  // exact tie: 3^-2 is not below 1/9
  EXPECT_EQ(extension_params(c, a, 0, 1.0 / 9).appended, 3);
  auto wrap = extension_params(c, a, 2, 1e-3);  // period 2, needs 7 symbols
  EXPECT_EQ(wrap.appended, 7);
  EXPECT_EQ(wrap.h, 4);
  EXPECT_EQ(wrap.j, 3);
  EXPECT_THROW(extension_params(c, a, 0, 1.5), std::invalid_argument);
  EXPECT_THROW(extension_params(c, a, 0, 0.0), std::invalid_argument);
  EXPECT_THROW(extension_params(c, a, 4, 0.5), std::invalid_argument);
}

TEST(Extension, LengthBound) {
  auto g = fixtures::golden();
  double s = similarity_dimension(g);
  Word a = {0, 1, 1, 0, 1, 0, 0, 1};
  for (int l = 0; l < 8; ++l) {
    double g2v = std::pow(9.0, -4 / s);
    EXPECT_LE(extension_params(g, a, l, g2v).appended, extension_length_bound(g, 1, 8, s) + 1e-9);
  }
}

TEST(DepthThreshold, Cantor) {
  auto c = fixtures::cantor();
  auto p = natural_weights(c);
  auto t = choose_depth_threshold(c, p, epsilon_star(c, p), 18);
  EXPECT_TRUE(t.ok);
  EXPECT_EQ(t.N, 9);  // gamma_8 = 2 exactly
  EXPECT_LT(t.gamma, 2.0);
  EXPECT_GT(t.gamma, 1.0);
}

TEST(LevelSet, ExactConstruction) {
  auto E = cantor_level(12);
  ASSERT_TRUE(E.exact);
  EXPECT_EQ(E.k, 4);
  EXPECT_FALSE(E.cylinders.empty());
  std::vector<Word> words;
  for (const auto& cyl : E.cylinders) {
    Word w = E.word(cyl);
    EXPECT_EQ(w.size(), E.word_length(cyl));
    EXPECT_EQ(w.front(), 1);
    auto e = E.params(cyl);
    if (e.h == 1) EXPECT_GT(e.j, cyl.l + E.k);
    words.push_back(std::move(w));
  }
  std::sort(words.begin(), words.end());
  for (std::size_t i = 0; i + 1 < words.size(); ++i) EXPECT_FALSE(is_prefix(words[i], words[i + 1]));
}

TEST(LevelSet, CylindersLieInsideTargetBalls) {
  auto c = fixtures::cantor();
  auto E = cantor_level(12);
  for (std::size_t i = 0; i < E.cylinders.size(); i += 37) {
    const auto& cyl = E.cylinders[i];
    Word a(E.c);
    a.insert(a.end(), E.bases[cyl.base].begin(), E.bases[cyl.base].end());
    Word u(a.begin(), a.begin() + 1 + cyl.l);
    Word v(a.begin() + 1 + cyl.l, a.end());
    double target = to_double(project_exact(c, {u, v})[0]);
    Word w = E.word(cyl);
    double lo = to_double(project_exact(c, {w, {0}})[0]);
    double hi = to_double(project_exact(c, {w, {1}})[0]);
    double radius = cylinder_diam(c, a) * E.g2_value;
    EXPECT_LT(std::max(std::abs(lo - target), std::abs(hi - target)), radius);
  }
}

TEST(LevelSet, MeasuresAgreeWithBruteForce) {
  auto c = fixtures::cantor();
  auto p = natural_weights(c);
  auto E = cantor_level(10), F = cantor_level(12);
  Rational mE = level_set_measure(E, p);
  Rational direct = 0;
  for (const auto& cyl : E.cylinders) direct += cylinder_measure_exact(p, E.word(cyl));
  EXPECT_EQ(mE, direct);
  EXPECT_EQ(pairwise_intersection_measure(E, E, p), mE);
  EXPECT_EQ(pairwise_intersection_measure(E, F, p, 4), brute_intersection(E, F, p));
  EXPECT_EQ(pairwise_intersection_measure(F, E, p), brute_intersection(E, F, p));
}

TEST(LevelSet, SampledModeIsDeterministic) {
  LevelSetOptions a;
  a.exact_limit = 256;
  a.sample_budget = 3000;
  a.seed = 77;
  a.threads = 1;
  auto b = a;
  b.threads = 6;
  auto E1 = cantor_level(13, a), E2 = cantor_level(13, b);
  EXPECT_FALSE(E1.exact);
  EXPECT_EQ(E1.bases, E2.bases);
  EXPECT_EQ(E1.base_weights, E2.base_weights);
  auto p = natural_weights(fixtures::cantor());
  EXPECT_EQ(level_set_measure(E1, p, 1), level_set_measure(E2, p, 5));
}

TEST(KochenStone, SmallRange) {
  auto p = natural_weights(fixtures::cantor());
  std::vector<LevelSet> levels;
  for (int n = 10; n <= 13; ++n) levels.push_back(cantor_level(n));
  auto ks = kochen_stone_bound(levels, p, 3);
  EXPECT_TRUE(ks.cauchy_schwarz_ok);
  EXPECT_TRUE(ks.increments_ok);
  EXPECT_GT(ks.normalized, 0.01);
  EXPECT_LE(ks.normalized, 1.0);
  Rational S = 0;
  for (const auto& m : ks.level_measures) S += m;
  EXPECT_EQ(ks.numerator, S * S);
  EXPECT_THROW(kochen_stone_bound({levels.front()}, p), std::invalid_argument);
}

TEST(NearbySearch, MatchesBruteForce) {
  for (const auto& ifs : {fixtures::cantor(), fixtures::golden(), fixtures::figure2()}) {
    auto p = natural_weights(ifs);
    for (std::uint64_t trial = 0; trial < 6; ++trial) {
      Word code = sample_code(p, 60, 1000 + trial);
      auto x = project_float(ifs, code).point;
      for (int n = 1; n <= 8; ++n) {
        double radius = 3 * std::pow(ifs.max_ratio(), n);
        auto fast = nearby_periodic_points(ifs, x, n, radius);
        auto slow = nearby_periodic_points_brute(ifs, x, n, radius);
        ASSERT_TRUE(fast.complete);
        ASSERT_EQ(fast.targets.size(), slow.targets.size()) << n;
        for (std::size_t i = 0; i < fast.targets.size(); ++i) EXPECT_EQ(fast.targets[i].rep, slow.targets[i].rep);
      }
    }
  }
}

TEST(HitRate, DivergentConfigHitsQuickly) {
  auto c = fixtures::cantor();
  auto p = natural_weights(c);
  TargetFunction t;
  t.rate = RateFunction::constant(1);
  auto curve = hit_rate(c, p, t, 1, 5, 200, 4, 2);
  EXPECT_GE(curve.cumulative.back(), 0.99);
  EXPECT_FALSE(curve.partial);
  auto again = hit_rate(c, p, t, 1, 5, 200, 4, 1);
  EXPECT_EQ(curve.first_hit, again.first_hit);
  EXPECT_THROW(hit_rate(c, p, t, 1, 5, 50, 4), std::invalid_argument);
}

TEST(FirstMoment, CantorGeometric) {
  auto c = fixtures::cantor();
  auto p = natural_weights(c);
  TargetFunction t;
  t.rate = RateFunction::geometric(1.0 / 3);
  auto fm = first_moment_bound(c, p, t, 10, 25);
  ASSERT_TRUE(fm.has_value());
  double s = std::log(2.0) / std::log(3.0);
  double gap = separation_check(c, 6).gap_lower;
  double tail = 0;
  for (int n = 10; n <= 25; ++n) tail += n * std::pow(0.5, n);
  EXPECT_NEAR(fm->exponent, s, 1e-12);
  EXPECT_NEAR(fm->bound, std::pow(2 / gap, s) * tail, 1e-9);
  EXPECT_FALSE(first_moment_bound(fixtures::dyadic(), natural_weights(fixtures::dyadic()), t, 10, 25).has_value());
}
