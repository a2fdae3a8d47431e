#pragma once

// Level sets E_n built from Good words, their exact measures and pairwise
// intersections, the Kochen-Stone ratio, and hit-rate experiments for the
// limsup sets W(Psi).

#include "ifsda/rate.hpp"
#include "ifsda/word_stats.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ifsda {

/// The extension c a_1..a_l (a_{l+1}..a_n)^h a_{l+1}..a_j of c a appends
/// `appended` = (n-l)(h-1) + (j-l) symbols after c a, cycling the period.
struct ExtensionParams {
  int h = 1;
  int j = 1;
  int appended = 1;
};

/// Shortest extension whose cylinder diameter is < Diam(X_{ca}) * g2_value,
/// i.e. the least number of cycled period symbols with ratio product below
/// g2_value. Ties are settled exactly. Throws std::invalid_argument unless
/// 0 < g2_value <= 1 and 0 <= l < |a|.
ExtensionParams extension_params(const IFSystem& ifs, std::span<const Symbol> a, int l, double g2_value);

/// [ (4/dim_s) ln(c_len + n) - ln r_min ] / (-ln r_max), an upper bound for
/// `appended` whenever g2 >= (c_len + n)^{-4/dim_s}.
double extension_length_bound(const IFSystem& ifs, int c_len, int n, double dim_s);

struct DepthThreshold {
  int N = 0;          // least N with n^{-2/dim} < e^{k_n(-chi-eps)} and gamma_n < 2 on [N, n_max]
  double gamma = 0;   // max over [N, n_max] of (h + eps) k_n / ln n
  bool ok = false;    // gamma < 2 and N <= n_max
};
DepthThreshold choose_depth_threshold(const IFSystem& ifs, const ProbabilityVector& p, double eps, int n_max);

struct LevelCylinder {
  std::uint32_t base = 0;  // index into LevelSet::bases
  std::int32_t l = 0;
  std::int32_t appended = 0;
};

/// E_n for a fixed prefix c. Cylinder words are c followed by the extension
/// of bases[base] at window l.
struct LevelSet {
  Word c;
  int n = 0;
  int k = 0;
  double g2_value = 0;
  bool exact = true;
  std::vector<Word> bases;             // Good words of length n, sorted
  std::vector<Rational> base_weights;  // sampled mode only
  std::vector<LevelCylinder> cylinders;  // grouped by base, sorted by word inside a base
  std::size_t words_examined = 0;

  std::size_t word_length(const LevelCylinder& cyl) const { return c.size() + n + cyl.appended; }
  /// i-th symbol of the cylinder word after c.
  Symbol symbol(const LevelCylinder& cyl, std::size_t i) const;
  Word word(const LevelCylinder& cyl) const;
  ExtensionParams params(const LevelCylinder& cyl) const;
};

struct LevelSetOptions {
  std::size_t sample_budget = 100'000;  // sampled mode only
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t exact_limit = std::size_t{1} << 20;  // exact mode when #A^n <= exact_limit
};

/// Throws std::logic_error if two cylinders of the result are comparable.
LevelSet build_level_set(const IFSystem& ifs, const ProbabilityVector& p, const Word& c, int n, double eps,
                         const RateFunction& g2, const LevelSetOptions& opt = {});

Rational level_set_measure(const LevelSet& E, const ProbabilityVector& p, int threads = 1);
Rational pairwise_intersection_measure(const LevelSet& E, const LevelSet& F, const ProbabilityVector& p,
                                       int threads = 1);

/// m(E_n) / (m([c]) n g2^dim_s)
double level_set_density(const LevelSet& E, const ProbabilityVector& p, double dim_s);

struct KochenStone {
  Rational numerator;    // (sum m(E_n))^2
  Rational denominator;  // sum over ordered pairs of m(E_n cap E_m)
  double bound = 0;
  double normalized = 0;  // bound / m([c])
  bool cauchy_schwarz_ok = false;  // bound <= sum m(E_n)
  bool increments_ok = false;      // each added level raises the bound by <= 2e + e^2/S
  std::vector<double> prefix_bounds;
  std::vector<Rational> level_measures;
};
/// Throws std::invalid_argument with fewer than two levels, mixed prefixes,
/// or a zero denominator.
KochenStone kochen_stone_bound(const std::vector<LevelSet>& levels, const ProbabilityVector& p, int threads = 1);

// ---- hit search ----

struct NearbyTarget {
  Representation rep;
  std::vector<double> point;
  double distance = 0;
};

struct NearbySearch {
  std::vector<NearbyTarget> targets;  // sorted by (word, l)
  std::size_t nodes = 0;
  bool complete = true;
};

/// Every level-n target pi(a_1..a_l (a_{l+1}..a_n)^inf) strictly within
/// `radius` of x, found by branch and bound over the cylinder tree.
NearbySearch nearby_periodic_points(const IFSystem& ifs, std::span<const double> x, int n, double radius,
                                    std::size_t node_budget = 10'000'000);
/// Reference answer by scanning all #A^n * n targets.
NearbySearch nearby_periodic_points_brute(const IFSystem& ifs, std::span<const double> x, int n, double radius);

struct HitCurve {
  int N0 = 0, N1 = 0;
  std::vector<int> first_hit;         // per sample; 0 when no hit in [N0, N1], -1 when a search was cut
  std::vector<double> cumulative;     // fraction hit by level N0 + i
  double stderr_final = 0;
  bool partial = false;
  std::size_t nodes = 0;
};

/// Samples x = pi(omega) with omega ~ p (sample i uses derive_seed(seed, i))
/// and records the first level in [N0, N1] with a target within the radius
/// of `target`. Intrinsic modes need an exact-form system; their radii use the
/// denominator of the canonical representation, and targets are counted at
/// their canonical length.
HitCurve hit_rate(const IFSystem& ifs, const ProbabilityVector& p, const TargetFunction& target, int N0, int N1,
                  long samples, std::uint64_t seed, int threads = 1, std::size_t node_budget = 1'000'000);

struct FirstMomentBound {
  double constant = 0;  // K with mu(B(x, r)) <= K r^exponent
  double exponent = 0;
  double bound = 0;     // K * sum_{n=N0}^{N1} sum_{targets} radius^exponent
};
/// Needs a positive separation gap (SSC). Cylinder mode only.
std::optional<FirstMomentBound> first_moment_bound(const IFSystem& ifs, const ProbabilityVector& p,
                                                   const TargetFunction& target, int N0, int N1);

}  // namespace ifsda
