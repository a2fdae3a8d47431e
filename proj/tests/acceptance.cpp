// One line per acceptance criterion; exit status is the number of failures.

#include "fixtures.hpp"
#include "ifsda/dimension_mtp.hpp"
#include "ifsda/limsup_lab.hpp"
#include "ifsda/parallel.hpp"
#include "ifsda/rational_points.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <thread>

using namespace ifsda;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_threads = std::max(1u, std::thread::hardware_concurrency());
int g_failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = o.pass && secs < limit_s;
  if (!ok) ++g_failures;
  std::printf("[%s] %2d %-28s %s (%.2fs, limit %.0fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs,
              limit_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- Monte Carlo pieces, parameterised by thread count for the replay check ----

std::string run_frequent(int threads, bool& ok, std::string& detail) {
  std::ostringstream out;
  auto cantor = fixtures::cantor();
  auto golden = fixtures::golden();
  auto a = estimate_frequent_measure(natural_weights(cantor), 200, 10'000, 31, threads);
  auto b = estimate_frequent_measure(natural_weights(golden), 400, 10'000, 32, threads);
  ok = a.estimate >= 7.0 / 32 - 3 * a.stderr_ && b.estimate >= 7.0 / 32 - 3 * b.stderr_;
  detail = "cantor " + fmt("%.4f", a.estimate) + ", golden " + fmt("%.4f", b.estimate);
  out << a.hits << " " << a.estimate << " " << b.hits << " " << b.estimate;
  return out.str();
}

std::string run_good(int threads, bool& ok, std::string& detail) {
  std::ostringstream out;
  ok = true;
  detail.clear();
  struct Case {
    IFSystem ifs;
    long n;
    const char* name;
  };
  for (auto& [ifs, n, name] : {Case{fixtures::cantor(), 200, "cantor"}, Case{fixtures::golden(), 400, "golden"}}) {
    auto p = natural_weights(ifs);
    auto r = estimate_good_measure(ifs, p, epsilon_star(ifs, p), n, 10'000, 41, threads);
    ok = ok && r.invalid_witnesses == 0 && r.est.estimate >= 7.0 / 64 - 3 * r.est.stderr_;
    detail += std::string(detail.empty() ? "" : ", ") + name + " " + fmt("%.4f", r.est.estimate) + " invalid " +
              std::to_string(r.invalid_witnesses);
    out << r.est.hits << " " << r.invalid_witnesses << " " << r.mean_witness_size << ";";
  }
  return out.str();
}

std::string run_hits(int threads, bool& ok, std::string& detail) {
  std::ostringstream out;
  auto c = fixtures::cantor();
  auto p = natural_weights(c);
  TargetFunction div;
  div.rate = RateFunction::constant(1);
  auto d = hit_rate(c, p, div, 1, 5, 1000, 51, threads);
  TargetFunction conv;
  conv.rate = RateFunction::geometric(1.0 / 3);
  auto v = hit_rate(c, p, conv, 10, 25, 1000, 52, threads);
  auto fm = first_moment_bound(c, p, conv, 10, 25);
  double bound = fm ? fm->bound : -1;
  ok = !d.partial && !v.partial && d.cumulative.back() >= 0.99 && fm && v.cumulative.back() <= bound + 3 * v.stderr_final;
  detail = "divergent " + fmt("%.3f", d.cumulative.back()) + ", convergent " + fmt("%.4f", v.cumulative.back()) +
           " <= " + fmt("%.4f", bound) + "+3se";
  for (int h : d.first_hit) out << h << ",";
  out << ";";
  for (int h : v.first_hit) out << h << ",";
  return out.str();
}

std::map<Rational, std::vector<std::pair<int, int>>> brute_reps(int n_max) {
  // all (l, n) pairs hitting each value, by direct iteration of (x + p) / 3
  std::map<Rational, std::vector<std::pair<int, int>>> reps;
  const long p[2] = {0, 2};
  for (int n = 1; n <= n_max; ++n) {
    for (long bits = 0; bits < (1L << n); ++bits) {
      for (int l = 0; l < n; ++l) {
        Rational P = 0;
        Integer Q = 1;
        for (int j = n - 1; j >= l; --j) {
          P += Rational(p[(bits >> j) & 1]) * Q;
          Q *= 3;
        }
        Rational x = P / Rational(Q - 1);
        for (int j = l - 1; j >= 0; --j) x = (x + p[(bits >> j) & 1]) / 3;
        reps[x].emplace_back(l, n);
      }
    }
  }
  return reps;
}

std::vector<LevelSet> cantor_levels() {
  auto c = fixtures::cantor();
  auto p = natural_weights(c);
  double s = similarity_dimension(c);
  auto g2 = g2_transform(g1_transform(RateFunction::constant(1), s, false), s);
  LevelSetOptions opt;
  opt.threads = g_threads;
  std::vector<LevelSet> levels;
  for (int n = 12; n <= 18; ++n) levels.push_back(build_level_set(c, p, Word{1}, n, epsilon_star(c, p), g2, opt));
  return levels;
}

}  // namespace

int main() {
  std::printf("acceptance run with %d threads\n", g_threads);

  report(1, "boundary weights", 1, [] {
    auto b = boundary_weight_two_maps(1e-6);
    bool ok = b.high > 0.951 && b.high < 0.952 && b.low > 0.048 && b.low < 0.049;
    return Outcome{ok, "high " + fmt("%.6f", b.high) + ", low " + fmt("%.6f", b.low)};
  });

  std::string mc_frequent, mc_good, mc_hits;
  report(2, "frequent set measure", 60, [&] {
    Outcome o;
    mc_frequent = run_frequent(g_threads, o.pass, o.detail);
    return o;
  });

  report(3, "good witnesses", 120, [&] {
    Outcome o;
    mc_good = run_good(g_threads, o.pass, o.detail);
    return o;
  });

  report(4, "intrinsic denominators", 30, [] {
    auto c = fixtures::cantor();
    auto e = enumerate_rationals(c, 8, 10'000'000, g_threads);
    if (e.partial) return Outcome{false, "enumeration partial"};
    auto oracle = brute_reps(10);
    std::map<Rational, Integer> best;
    long reps_checked = 0, bad_eq4 = 0;
    for (const auto& [x, list] : oracle) {
      for (auto [l, n] : list) {
        Integer den = pow(Integer(3), l) * (pow(Integer(3), n - l) - 1);
        ++reps_checked;
        if (den < pow(Integer(3), n - 1) || den > pow(Integer(3), n)) ++bad_eq4;
        auto it = best.find(x);
        if (it == best.end() || den < it->second) best[x] = den;
      }
    }
    long mismatches = 0, reduced_bad = 0;
    Integer q_quarter, q_two_thirds, q_zero;
    for (const auto& pt : e.points) {
      if (!pt.certified || best.at(pt.value[0]) != pt.q_int) ++mismatches;
      if (pt.reduced_q > pt.q_int) ++reduced_bad;
      if (pt.value[0] == Rational(1, 4)) q_quarter = pt.q_int;
      if (pt.value[0] == Rational(2, 3)) q_two_thirds = pt.q_int;
      if (pt.value[0] == 0) q_zero = pt.q_int;
    }
    bool ok = mismatches == 0 && reduced_bad == 0 && bad_eq4 == 0 && q_quarter == 8 && q_two_thirds == 6 && q_zero == 2;
    std::ostringstream d;
    d << e.points.size() << " points, q(1/4)=" << q_quarter << " q(2/3)=" << q_two_thirds << " q(0)=" << q_zero << ", "
      << reps_checked << " reps, oracle mismatches " << mismatches;
    return Outcome{ok, d.str()};
  });

  report(5, "series dichotomy", 1, [] {
    auto c = fixtures::cantor();
    double s = similarity_dimension(c);
    auto at_one = series_classify(tww_rate(3, 1.0, c.diam()), c, s).verdict;
    auto above = series_classify(tww_rate(3, 1.01, c.diam()), c, s).verdict;
    double t_star = critical_power_exponent(s);
    bool thr = std::abs(t_star - 2 * std::log(3.0) / std::log(2.0)) <= 1e-9 &&
               series_classify(RateFunction::power(t_star), c, s).verdict == Verdict::Diverges &&
               series_classify(RateFunction::power(t_star + 1e-6), c, s).verdict == Verdict::Converges;
    bool ok = at_one == Verdict::Diverges && above == Verdict::Converges && thr;
    return Outcome{ok, std::string("tau=1 ") + to_string(at_one) + ", tau=1.01 " + to_string(above) + ", t*=" +
                           fmt("%.10f", t_star)};
  });

  std::vector<LevelSet> levels;
  report(6, "level set construction", 120, [&] {
    levels = cantor_levels();
    auto p = natural_weights(fixtures::cantor());
    double s = similarity_dimension(fixtures::cantor());
    long violations = 0, comparable = 0, total = 0;
    double lo = INFINITY, hi = 0;
    bool all_exact = true;
    for (const auto& E : levels) {
      all_exact = all_exact && E.exact;
      std::vector<Word> words;
      words.reserve(E.cylinders.size());
      for (const auto& cyl : E.cylinders) {
        auto e = E.params(cyl);
        if (e.h == 1 && !(e.j > cyl.l + E.k)) ++violations;
        words.push_back(E.word(cyl));
      }
      std::sort(words.begin(), words.end());
      for (std::size_t i = 0; i + 1 < words.size(); ++i)
        if (words[i].size() <= words[i + 1].size() &&
            std::equal(words[i].begin(), words[i].end(), words[i + 1].begin()))
          ++comparable;
      total += static_cast<long>(words.size());
      double rho = level_set_density(E, p, s);
      lo = std::min(lo, rho);
      hi = std::max(hi, rho);
    }
    bool ok = all_exact && violations == 0 && comparable == 0 && lo > 0 && hi / lo <= 100;
    std::ostringstream d;
    d << total << " cylinders, comparable " << comparable << ", short extensions " << violations << ", density spread "
      << fmt("%.3f", hi / lo);
    return Outcome{ok, d.str()};
  });

  report(7, "Kochen-Stone bound", 60, [&] {
    if (levels.size() != 7) return Outcome{false, "levels from criterion 6 unavailable"};
    auto ks = kochen_stone_bound(levels, natural_weights(fixtures::cantor()), g_threads);
    bool ok = ks.cauchy_schwarz_ok && ks.normalized >= 0.01 && ks.normalized <= 1;
    return Outcome{ok, "normalized " + fmt("%.5f", ks.normalized) + (ks.cauchy_schwarz_ok ? ", CS ok" : ", CS fails") +
                           (ks.increments_ok ? ", increments ok" : ", increments fail")};
  });
  levels.clear();

  report(8, "hit-rate dichotomy", 300, [&] {
    Outcome o;
    mc_hits = run_hits(g_threads, o.pass, o.detail);
    long disagreements = 0, queries = 0;
    for (const auto& ifs : {fixtures::cantor(), fixtures::golden(), fixtures::figure2()}) {
      auto p = natural_weights(ifs);
      for (std::uint64_t trial = 0; trial < 4; ++trial) {
        auto x = project_float(ifs, sample_code(p, 80, derive_seed(61, trial))).point;
        // the four-map system has 4^12 * 12 brute-force targets at n = 12
        int n_max = ifs.size() > 2 ? 8 : 12;
        for (int n = 1; n <= n_max; ++n) {
          double radius = 2 * std::pow(ifs.max_ratio(), n);
          auto fast = nearby_periodic_points(ifs, x, n, radius);
          auto slow = nearby_periodic_points_brute(ifs, x, n, radius);
          ++queries;
          bool same = fast.complete && fast.targets.size() == slow.targets.size();
          for (std::size_t i = 0; same && i < fast.targets.size(); ++i) same = fast.targets[i].rep == slow.targets[i].rep;
          if (!same) ++disagreements;
        }
      }
    }
    o.pass = o.pass && disagreements == 0;
    o.detail += ", search vs brute " + std::to_string(queries - disagreements) + "/" + std::to_string(queries);
    return o;
  });

  report(9, "identity suite", 5, [] {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ratio(0.05, 0.6), shift(-2, 2);
    std::uniform_int_distribution<int> count(2, 5);
    double worst_root = 0, worst_entropy = 0, worst_measure = 0;
    for (int trial = 0; trial < 100; ++trial) {
      int k = count(rng);
      std::vector<std::string> labels;
      std::vector<SimilarityMap> maps;
      for (int a = 0; a < k; ++a) {
        labels.push_back(std::to_string(a));
        maps.push_back(SimilarityMap::from_float(ratio(rng), {shift(rng), shift(rng)}));
      }
      IFSystem ifs(labels, maps);
      double s = similarity_dimension(ifs, 1e-14);
      double sum = 0;
      for (double r : ifs.ratios()) sum += std::pow(r, s);
      worst_root = std::max(worst_root, std::abs(sum - 1));
      auto p = natural_weights(ifs);
      worst_entropy = std::max(worst_entropy, std::abs(entropy(p) - s * lyapunov(ifs, p)));
      Word w = sample_code(p, 1 + trial % 12, derive_seed(71, static_cast<std::uint64_t>(trial)));
      double m = cylinder_measure(p, w);
      double pred = std::pow(cylinder_diam(ifs, w) / ifs.diam(), s);
      worst_measure = std::max(worst_measure, std::abs(m - pred));
    }
    bool ok = worst_root <= 1e-9 && worst_entropy <= 1e-9 && worst_measure <= 1e-9;
    return Outcome{ok, "max errors " + fmt("%.1e", worst_root) + ", " + fmt("%.1e", worst_entropy) + ", " +
                           fmt("%.1e", worst_measure)};
  });

  report(10, "determinism (1 vs 8 threads)", 600, [&] {
    bool ok = true;
    std::string detail;
    std::vector<std::string> mismatched;
    for (int threads : {1, 8}) {
      bool pass;
      std::string d;
      if (run_frequent(threads, pass, d) != mc_frequent) mismatched.push_back("frequent@" + std::to_string(threads));
      if (run_good(threads, pass, d) != mc_good) mismatched.push_back("good@" + std::to_string(threads));
      if (run_hits(threads, pass, d) != mc_hits) mismatched.push_back("hits@" + std::to_string(threads));
    }
    ok = mismatched.empty();
    for (const auto& m : mismatched) detail += m + " ";
    return Outcome{ok, ok ? "criteria 2, 3, 8 byte-identical" : "differs: " + detail};
  });

  std::printf("%d criteria failed\n", g_failures);
  return g_failures;
}
