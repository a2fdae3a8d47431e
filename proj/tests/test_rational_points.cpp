#include "fixtures.hpp"
#include "ifsda/rational_points.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace ifsda;

namespace {

// Independent brute force: every (word, l) with n <= n_max, value by direct
// iteration of x -> (x + p) / q on the exact period fixed point.
std::map<Rational, Integer> brute_min_denominators(const std::vector<long>& p, const std::vector<long>& q, int n_max) {
  std::map<Rational, Integer> best;
  std::size_t k = p.size();
  for (int n = 1; n <= n_max; ++n) {
    std::vector<std::size_t> w(n, 0);
    for (;;) {
      for (int l = 0; l < n; ++l) {
        // fixed point of phi_{w_l} o ... o phi_{w_{n-1}}: x = (x + P) / Q
        Rational P = 0;
        Integer Q = 1;
        for (int j = n - 1; j >= l; --j) {
          P = P + Rational(p[w[j]]) * Q;
          Q *= q[w[j]];
        }
        Rational x = P / Rational(Q - 1);
        Integer pre = 1;
        for (int j = l - 1; j >= 0; --j) {
          x = (x + p[w[j]]) / Rational(q[w[j]]);
          pre *= q[w[j]];
        }
        Integer den = pre * (Q - 1);
        auto [it, fresh] = best.emplace(x, den);
        if (!fresh && den < it->second) it->second = den;
      }
      std::size_t i = 0;
      while (i < w.size() && ++w[i] == k) w[i++] = 0;
      if (i == w.size()) break;
    }
  }
  return best;
}

}  // namespace

TEST(RepresentationDenominator, Formula) {
  auto c = fixtures::cantor();
  EXPECT_EQ(representation_denominator(c, {0, 2, {0, 1}}), Integer(8));
  EXPECT_EQ(representation_denominator(c, {1, 2, {1, 0}}), Integer(6));
  EXPECT_EQ(representation_denominator(c, {0, 1, {0}}), Integer(2));
}

TEST(IntrinsicDenominator, CantorValues) {
  auto c = fixtures::cantor();
  auto quarter = intrinsic_denominator_auto(c, {{}, {0, 1}});
  EXPECT_EQ(quarter.q_int, Integer(8));
  EXPECT_TRUE(quarter.certified);
  EXPECT_EQ(intrinsic_denominator_auto(c, {{1}, {0}}).q_int, Integer(6));
  EXPECT_EQ(intrinsic_denominator_auto(c, {{}, {0}}).q_int, Integer(2));
  EXPECT_EQ(reduced_denominator({Rational(2, 3)}), Integer(3));
}

TEST(FindRepresentations, AllProjectToThePoint) {
  auto c = fixtures::cantor();
  auto res = find_representations(c, {{}, {0, 1}}, 6);
  EXPECT_TRUE(res.complete);
  ASSERT_FALSE(res.reps.empty());
  EXPECT_EQ(res.reps.front(), (Representation{0, 2, {0, 1}}));
  bool saw_shifted = false;
  for (const auto& r : res.reps) {
    EXPECT_EQ(project_exact(c, code_of(r))[0], Rational(1, 4));
    saw_shifted = saw_shifted || (r.l == 1 && r.n == 3);
  }
  EXPECT_TRUE(saw_shifted);
  EXPECT_THROW(find_representations(c, {{0}, {0, 1}}, 2), std::invalid_argument);
}

TEST(FindRepresentations, OverlappingCodings) {
  auto d = fixtures::dyadic();
  auto res = find_representations_at(d, {Rational(1, 2)}, 3);
  bool via_one = false, via_zero = false;
  for (const auto& r : res.reps) {
    via_one = via_one || code_of(r) == EpCode{{1}, {0}};
    via_zero = via_zero || code_of(r) == EpCode{{0}, {1}};
  }
  EXPECT_TRUE(via_one && via_zero);
  EXPECT_TRUE(find_representations_at(fixtures::cantor(), {Rational(1, 2)}, 6).reps.empty());
}

TEST(CodeOfPoint, Lookup) {
  auto c = fixtures::cantor();
  auto code = code_of_point(c, {Rational(1, 4)});
  ASSERT_TRUE(code.has_value());
  EXPECT_EQ(*code, (EpCode{{}, {0, 1}}));
  EXPECT_FALSE(code_of_point(c, {Rational(1, 2)}, 8).has_value());
}

TEST(Enumeration, MatchesBruteForceOracle) {
  auto c = fixtures::cantor();
  auto e = enumerate_rationals(c, 8);
  ASSERT_FALSE(e.partial);
  auto oracle = brute_min_denominators({0, 2}, {3, 3}, 10);
  auto shallow = brute_min_denominators({0, 2}, {3, 3}, 8);
  EXPECT_EQ(e.points.size(), shallow.size());
  for (const auto& pt : e.points) {
    ASSERT_TRUE(oracle.count(pt.value[0]));
    EXPECT_EQ(pt.q_int, oracle.at(pt.value[0])) << to_string(pt.value);
    EXPECT_TRUE(pt.certified);
    EXPECT_LE(pt.reduced_q, pt.q_int);
    for (const auto& code : pt.codes) {
      Representation rep;
      rep.l = static_cast<int>(code.u.size());
      rep.n = static_cast<int>(code.u.size() + code.v.size());
      rep.word = unroll(code, rep.n);
      Integer den = representation_denominator(c, rep);
      EXPECT_LE(pow(Integer(3), rep.n - 1), den);
      EXPECT_LE(den, pow(Integer(3), rep.n));
      // Diam(X_word) * denominator stays in [2/3, 1)
      Rational scaled = Rational(den) / Rational(pow(Integer(3), rep.n));
      EXPECT_GE(scaled, Rational(2, 3));
      EXPECT_LT(scaled, Rational(1));
    }
  }
}

TEST(Enumeration, ThreadCountDoesNotMatter) {
  auto g = fixtures::golden();
  auto a = enumerate_rationals(g, 7, 10'000'000, 1);
  auto b = enumerate_rationals(g, 7, 10'000'000, 6);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].value, b.points[i].value);
    EXPECT_EQ(a.points[i].q_int, b.points[i].q_int);
    EXPECT_EQ(a.points[i].codes, b.points[i].codes);
  }
}

TEST(Enumeration, CodeCapMarksPartial) {
  auto e = enumerate_rationals(fixtures::cantor(), 8, 50);
  EXPECT_TRUE(e.partial);
  EXPECT_LE(e.codes_visited, 50u);
}

TEST(Enumeration, GoldenAgainstOracle) {
  auto g = fixtures::golden();
  auto e = enumerate_rationals(g, 6);
  auto oracle = brute_min_denominators({0, 3}, {2, 4}, 12);
  for (const auto& pt : e.points) {
    if (!pt.certified) continue;
    EXPECT_EQ(pt.q_int, oracle.at(pt.value[0])) << to_string(pt.value);
  }
}

TEST(Separation, Verdicts) {
  auto c = separation_check(fixtures::cantor(), 4);
  EXPECT_EQ(c.verdict, Separation::SSCWitnessed);
  EXPECT_GT(c.gap_lower, 0.0);
  EXPECT_LE(c.gap_lower, 1.0 / 3 + 1e-12);
  EXPECT_EQ(separation_check(fixtures::figure2(), 4).verdict, Separation::SSCWitnessed);
  auto o = separation_check(fixtures::overlapping(), 3);
  EXPECT_EQ(o.verdict, Separation::OverlapWitnessed);
  EXPECT_TRUE(o.overlap.has_value());
  EXPECT_NE(separation_check(fixtures::dyadic(), 4).verdict, Separation::SSCWitnessed);
}
