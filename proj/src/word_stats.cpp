#include "ifsda/word_stats.hpp"

#include "ifsda/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ifsda {

namespace {

// One key per window; equal keys iff equal factors. Factors that fit in 64
// bits are packed directly, longer ones are ranked by sorting.
std::vector<std::uint64_t> factor_keys(std::span<const Symbol> a, int t) {
  std::size_t n = a.size();
  if (t <= 0 || static_cast<std::size_t>(t) > n) return {};
  std::size_t windows = n - static_cast<std::size_t>(t) + 1;
  Symbol top = *std::max_element(a.begin(), a.end());
  int bits = std::max(1, static_cast<int>(std::bit_width(static_cast<unsigned>(top))));
  std::vector<std::uint64_t> keys(windows);
  if (t * bits <= 64) {
    std::uint64_t mask = t * bits == 64 ? ~0ULL : ((1ULL << (t * bits)) - 1);
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < n; ++i) {
      key = ((key << bits) | a[i]) & mask;
      if (i + 1 >= static_cast<std::size_t>(t)) keys[i + 1 - t] = key;
    }
    return keys;
  }
  std::vector<std::size_t> order(windows);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t x, std::size_t y) {
    return std::lexicographical_compare(a.begin() + x, a.begin() + x + t, a.begin() + y, a.begin() + y + t);
  };
  std::sort(order.begin(), order.end(), less);
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < windows; ++i) {
    if (i && less(order[i - 1], order[i])) ++rank;
    keys[order[i]] = rank;
  }
  return keys;
}

std::vector<long> run_lengths(std::vector<std::uint64_t> keys) {
  std::sort(keys.begin(), keys.end());
  std::vector<long> runs;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    runs.push_back(static_cast<long>(j - i));
    i = j;
  }
  return runs;
}

struct Bands {
  int k;
  double chi, h, eps;
  std::vector<double> log_r, log_p;
};

Bands make_bands(const IFSystem& ifs, const ProbabilityVector& p, long n, double eps) {
  Bands b{k_n(p, n), lyapunov(ifs, p), entropy(p), eps, {}, {}};
  for (std::size_t a = 0; a < ifs.size(); ++a) {
    b.log_r.push_back(std::log(ifs.ratios()[a]));
    b.log_p.push_back(std::log(p[a]));
  }
  return b;
}

bool window_in_bands(const Bands& b, std::span<const Symbol> a, std::size_t l) {
  double sr = 0, sp = 0;
  for (int i = 0; i < b.k; ++i) {
    sr += b.log_r[a[l + i]];
    sp += b.log_p[a[l + i]];
  }
  double k = b.k;
  return sr >= k * (-b.chi - b.eps) && sr <= k * (-b.chi + b.eps) && sp >= k * (-b.h - b.eps) &&
         sp <= k * (-b.h + b.eps);
}

Estimate binomial(long hits, long samples) {
  Estimate e;
  e.hits = hits;
  e.samples = samples;
  e.estimate = samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0;
  e.stderr_ = samples ? std::sqrt(e.estimate * (1 - e.estimate) / static_cast<double>(samples)) : 0.0;
  return e;
}

}  // namespace

long distinct_subwords(std::span<const Symbol> a, int t) {
  if (t < 1) throw std::invalid_argument("distinct_subwords: t must be >= 1");
  return static_cast<long>(run_lengths(factor_keys(a, t)).size());
}

long collision_statistic(std::span<const Symbol> a, int t) {
  if (t < 1 || static_cast<std::size_t>(t) > a.size())
    throw std::invalid_argument("collision_statistic: need 1 <= t <= |a|");
  long s = 0;
  for (long c : run_lengths(factor_keys(a, t))) s += c * c;
  return s;
}

int k_n(const ProbabilityVector& p, long n) {
  if (n < 1) throw std::invalid_argument("k_n: n must be >= 1");
  double S = p.sum_squares();
  double x = std::log(static_cast<double>(n)) / -std::log(S);
  if (std::abs(x - std::round(x)) > 1e-9) return static_cast<int>(std::floor(x)) + 1;
  // Near an integer: decide n S^k < 1 exactly.
  Rational s = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    Rational w = p.exact() ? (*p.exact())[a] : to_rational(p[a]);
    s += w * w;
  }
  Rational acc(n);
  int k = 0;
  while (acc >= 1) {
    acc *= s;
    ++k;
  }
  return std::max(k, 1);
}

bool in_frequent_set(std::span<const Symbol> a, const ProbabilityVector& p) {
  long n = static_cast<long>(a.size());
  if (n < 1) throw std::invalid_argument("in_frequent_set: empty word");
  int k = k_n(p, n);
  if (k > n) return false;
  return distinct_subwords(a, k) >= n / 10;
}

std::vector<int> bad_windows(const IFSystem& ifs, const ProbabilityVector& p, std::span<const Symbol> a, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("bad_windows: eps must be positive");
  long n = static_cast<long>(a.size());
  auto b = make_bands(ifs, p, n, eps);
  if (b.k > n) throw std::invalid_argument("bad_windows: |a| < k_n");
  std::vector<int> out;
  for (long l = 0; l + b.k <= n; ++l)
    if (!window_in_bands(b, a, static_cast<std::size_t>(l))) out.push_back(static_cast<int>(l));
  return out;
}

bool in_bad_set(const IFSystem& ifs, const ProbabilityVector& p, std::span<const Symbol> a, double eps) {
  long n = static_cast<long>(a.size());
  // floor(n/20) is 0 below n = 20, which would make every short word bad
  return static_cast<long>(bad_windows(ifs, p, a, eps).size()) >= std::max(1L, n / 20);
}

std::optional<GoodWitness> extract_good_witness(const IFSystem& ifs, const ProbabilityVector& p,
                                                std::span<const Symbol> a, double eps) {
  long n = static_cast<long>(a.size());
  if (n < 1 || k_n(p, n) > n) return std::nullopt;
  if (!in_frequent_set(a, p) || in_bad_set(ifs, p, a, eps)) return std::nullopt;
  auto b = make_bands(ifs, p, n, eps);
  auto keys = factor_keys(a, b.k);
  std::vector<std::pair<std::uint64_t, int>> first;  // (key, first window)
  for (std::size_t l = 0; l < keys.size(); ++l) first.emplace_back(keys[l], static_cast<int>(l));
  std::stable_sort(first.begin(), first.end(), [](auto& x, auto& y) { return x.first < y.first; });
  GoodWitness w;
  w.word.assign(a.begin(), a.end());
  w.k = b.k;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (i && first[i].first == first[i - 1].first) continue;
    if (window_in_bands(b, a, static_cast<std::size_t>(first[i].second))) w.windows.push_back(first[i].second);
  }
  std::sort(w.windows.begin(), w.windows.end());
  if (static_cast<long>(w.windows.size()) < n / 20) return std::nullopt;
  return w;
}

bool validate_witness(const IFSystem& ifs, const ProbabilityVector& p, const GoodWitness& w, double eps) {
  long n = static_cast<long>(w.word.size());
  if (w.k != k_n(p, n)) return false;
  if (static_cast<long>(w.windows.size()) < n / 20) return false;
  double chi = lyapunov(ifs, p), h = entropy(p);
  std::vector<Word> factors;
  for (int l : w.windows) {
    if (l < 0 || l + w.k > n) return false;
    double pr = 1, pp = 1;
    for (int i = 0; i < w.k; ++i) {
      pr *= ifs.ratios()[w.word[l + i]];
      pp *= p[w.word[l + i]];
    }
    // product form, compared with a relative slack for rounding
    const double slack = 1e-12;
    double k = w.k;
    if (pr < std::exp(k * (-chi - eps)) * (1 - slack) || pr > std::exp(k * (-chi + eps)) * (1 + slack)) return false;
    if (pp < std::exp(k * (-h - eps)) * (1 - slack) || pp > std::exp(k * (-h + eps)) * (1 + slack)) return false;
    factors.emplace_back(w.word.begin() + l, w.word.begin() + l + w.k);
  }
  std::sort(factors.begin(), factors.end());
  return std::adjacent_find(factors.begin(), factors.end()) == factors.end();
}

Estimate estimate_frequent_measure(const ProbabilityVector& p, long n, long samples, std::uint64_t seed,
                                   int threads) {
  if (samples < 1 || n < 1) throw std::invalid_argument("estimate_frequent_measure: need n, samples >= 1");
  std::vector<char> hit(static_cast<std::size_t>(samples));
  parallel_for(hit.size(), threads, [&](std::size_t i) {
    hit[i] = in_frequent_set(sample_code(p, static_cast<std::size_t>(n), derive_seed(seed, i)), p);
  });
  return binomial(std::count(hit.begin(), hit.end(), 1), samples);
}

BadMeasureReport estimate_bad_measure(const IFSystem& ifs, const ProbabilityVector& p, double eps,
                                      const std::vector<long>& n_list, long samples, std::uint64_t seed,
                                      int threads) {
  BadMeasureReport rep;
  for (std::size_t j = 0; j < n_list.size(); ++j) {
    long n = n_list[j];
    std::vector<char> bad(static_cast<std::size_t>(samples));
    std::uint64_t level_seed = derive_seed(seed, 0x100000000ULL + static_cast<std::uint64_t>(n));
    parallel_for(bad.size(), threads, [&](std::size_t i) {
      bad[i] = in_bad_set(ifs, p, sample_code(p, static_cast<std::size_t>(n), derive_seed(level_seed, i)), eps);
    });
    rep.rows.push_back({n, k_n(p, n), binomial(std::count(bad.begin(), bad.end(), 1), samples)});
  }
  std::vector<double> xs, ys;
  for (const auto& r : rep.rows)
    if (r.est.estimate > 0) {
      xs.push_back(r.k);
      ys.push_back(std::log(r.est.estimate));
    }
  if (xs.size() >= 2) {
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx > 0) rep.fitted_gamma = std::exp(sxy / sxx);
  }
  return rep;
}

GoodReport estimate_good_measure(const IFSystem& ifs, const ProbabilityVector& p, double eps, long n, long samples,
                                 std::uint64_t seed, int threads) {
  std::vector<int> status(static_cast<std::size_t>(samples));  // 0 none, 1 valid, 2 invalid
  std::vector<long> sizes(static_cast<std::size_t>(samples), 0);
  parallel_for(status.size(), threads, [&](std::size_t i) {
    auto a = sample_code(p, static_cast<std::size_t>(n), derive_seed(seed, i));
    auto w = extract_good_witness(ifs, p, a, eps);
    if (!w) return;
    status[i] = validate_witness(ifs, p, *w, eps) ? 1 : 2;
    sizes[i] = static_cast<long>(w->windows.size());
  });
  GoodReport rep;
  long found = 0, total = 0;
  for (std::size_t i = 0; i < status.size(); ++i) {
    if (status[i]) {
      ++found;
      total += sizes[i];
    }
    if (status[i] == 2) ++rep.invalid_witnesses;
  }
  rep.est = binomial(found, samples);
  rep.mean_witness_size = found ? static_cast<double>(total) / static_cast<double>(found) : 0.0;
  return rep;
}

Rational exact_frequent_measure(const ProbabilityVector& p, int n) {
  if (n < 1) throw std::invalid_argument("exact_frequent_measure: n must be >= 1");
  double words = std::pow(static_cast<double>(p.size()), n);
  if (words > static_cast<double>(1 << 24)) throw std::invalid_argument("exact_frequent_measure: A^n too large");
  std::map<std::vector<int>, long> by_counts;
  Word a(static_cast<std::size_t>(n), 0);
  for (;;) {
    if (in_frequent_set(a, p)) {
      std::vector<int> c(p.size(), 0);
      for (Symbol s : a) ++c[s];
      ++by_counts[c];
    }
    std::size_t i = a.size();
    while (i > 0 && ++a[i - 1] == p.size()) a[--i] = 0;
    if (i == 0) break;
  }
  Rational total = 0;
  for (const auto& [c, mult] : by_counts) {
    Word rep;
    for (std::size_t s = 0; s < c.size(); ++s) rep.insert(rep.end(), static_cast<std::size_t>(c[s]), static_cast<Symbol>(s));
    total += Rational(mult) * cylinder_measure_exact(p, rep);
  }
  return total;
}

}  // namespace ifsda
