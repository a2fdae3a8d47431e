#include "ifsda/limsup_lab.hpp"

#include "ifsda/parallel.hpp"
#include "ifsda/rational_points.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace ifsda {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Rational exact_ratio(const SimilarityMap& f) {
  if (f.exact) return Rational(1, f.exact->q);
  return to_rational(f.ratio);
}

std::vector<Rational> exact_weights(const ProbabilityVector& p) {
  if (p.exact()) return *p.exact();
  std::vector<Rational> w;
  for (double x : p.weights()) w.push_back(to_rational(x));
  return w;
}

Rational rational_pow(const Rational& x, unsigned long e) {
  Rational r;
  mpz_pow_ui(r.get_num_mpz_t(), x.get_num_mpz_t(), e);
  mpz_pow_ui(r.get_den_mpz_t(), x.get_den_mpz_t(), e);
  return r;
}

double log_integer(const Integer& z) {
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, z.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

// Sum of products prod_a p_a^{count_a}, aggregated by count vector so that
// rational arithmetic happens once per distinct vector.
class MeasureSum {
 public:
  explicit MeasureSum(std::size_t k) : k_(k) {}

  void add(const std::vector<std::uint32_t>& counts, const Rational* weight) {
    std::string key(reinterpret_cast<const char*>(counts.data()), counts.size() * sizeof(std::uint32_t));
    if (!weight) {
      ++counts_[key];
    } else {
      weighted_[key] += *weight;
    }
  }

  void merge(const MeasureSum& o) {
    for (const auto& [key, c] : o.counts_) counts_[key] += c;
    for (const auto& [key, w] : o.weighted_) weighted_[key] += w;
  }

  Rational total(const std::vector<Rational>& pw) const {
    // sorted keys keep the summation order fixed
    std::map<std::string, Rational> all;
    for (const auto& [key, c] : counts_) {
      Integer m;
      mpz_set_ui(m.get_mpz_t(), c);
      all[key] += Rational(m);
    }
    for (const auto& [key, w] : weighted_) all[key] += w;
    Rational sum = 0;
    for (const auto& [key, mult] : all) {
      Rational m = mult;
      const auto* c = reinterpret_cast<const std::uint32_t*>(key.data());
      for (std::size_t a = 0; a < k_; ++a)
        if (c[a]) m *= rational_pow(pw[a], c[a]);
      sum += m;
    }
    return sum;
  }

 private:
  std::size_t k_;
  std::unordered_map<std::string, unsigned long> counts_;
  std::unordered_map<std::string, Rational> weighted_;
};

void add_counts(std::vector<std::uint32_t>& counts, std::span<const Symbol> w, std::uint32_t times = 1) {
  for (Symbol s : w) counts[s] += times;
}

// Symbol counts of the full cylinder word c + extension.
std::vector<std::uint32_t> cylinder_counts(const LevelSet& E, const LevelCylinder& cyl, std::size_t k) {
  std::vector<std::uint32_t> counts(k, 0);
  add_counts(counts, E.c);
  const Word& a = E.bases[cyl.base];
  add_counts(counts, a);
  std::span<const Symbol> period(a.data() + cyl.l, a.size() - static_cast<std::size_t>(cyl.l));
  std::uint32_t P = static_cast<std::uint32_t>(period.size());
  std::uint32_t m = static_cast<std::uint32_t>(cyl.appended);
  add_counts(counts, period, m / P);
  add_counts(counts, period.subspan(0, m % P));
  return counts;
}

std::vector<std::size_t> base_offsets(const LevelSet& E) {
  std::vector<std::size_t> off(E.bases.size() + 1, 0);
  for (const auto& cyl : E.cylinders) ++off[cyl.base + 1];
  for (std::size_t i = 1; i < off.size(); ++i) off[i] += off[i - 1];
  return off;
}

std::size_t chunk_count(std::size_t items) { return std::min<std::size_t>(items, 256); }

std::pair<std::size_t, std::size_t> chunk_range(std::size_t items, std::size_t chunks, std::size_t i) {
  return {items * i / chunks, items * (i + 1) / chunks};
}

}  // namespace

ExtensionParams extension_params(const IFSystem& ifs, std::span<const Symbol> a, int l, double g2_value) {
  int n = static_cast<int>(a.size());
  if (l < 0 || l >= n) throw std::invalid_argument("extension_params: l must lie in [0, n-1]");
  if (!(g2_value > 0) || g2_value > 1) throw std::invalid_argument("extension_params: g2 value must lie in (0, 1]");
  const int P = n - l;
  const double target = std::log(g2_value);
  double lp = 0;
  int m = 0;
  for (;;) {
    ++m;
    if (m > 10'000'000) throw std::runtime_error("extension_params: no extension found");
    lp += std::log(ifs.ratios()[a[static_cast<std::size_t>(l + (m - 1) % P)]]);
    if (lp < target - 1e-9) break;
    if (lp <= target + 1e-9) {
      Rational prod = 1;
      for (int i = 0; i < m; ++i) prod *= exact_ratio(ifs.map(a[static_cast<std::size_t>(l + i % P)]));
      if (prod < to_rational(g2_value)) break;
    }
  }
  ExtensionParams e;
  e.appended = m;
  e.h = (m - 1) / P + 1;
  e.j = l + (m - 1) % P + 1;
  return e;
}

double extension_length_bound(const IFSystem& ifs, int c_len, int n, double dim_s) {
  return ((4.0 / dim_s) * std::log(static_cast<double>(c_len + n)) - std::log(ifs.min_ratio())) /
         (-std::log(ifs.max_ratio()));
}

DepthThreshold choose_depth_threshold(const IFSystem& ifs, const ProbabilityVector& p, double eps, int n_max) {
  if (n_max < 2) throw std::invalid_argument("choose_depth_threshold: n_max must be >= 2");
  double s = similarity_dimension(ifs);
  double chi = lyapunov(ifs, p), h = entropy(p);
  DepthThreshold out;
  int N = n_max + 1;
  // scan down while both the diameter condition and gamma < 2 hold
  for (int n = n_max; n >= 2; --n) {
    double lhs = -(2.0 / s) * std::log(static_cast<double>(n));
    double rhs = k_n(p, n) * (-chi - eps);
    double gamma = (h + eps) * k_n(p, n) / std::log(static_cast<double>(n));
    if (!(lhs < rhs) || !(gamma < 2)) break;
    N = n;
  }
  out.N = N;
  for (int n = N; n <= n_max; ++n)
    out.gamma = std::max(out.gamma, (h + eps) * k_n(p, n) / std::log(static_cast<double>(n)));
  out.ok = N <= n_max && out.gamma < 2;
  return out;
}

Symbol LevelSet::symbol(const LevelCylinder& cyl, std::size_t i) const {
  const Word& a = bases[cyl.base];
  if (i < a.size()) return a[i];
  std::size_t P = a.size() - static_cast<std::size_t>(cyl.l);
  return a[static_cast<std::size_t>(cyl.l) + (i - a.size()) % P];
}

Word LevelSet::word(const LevelCylinder& cyl) const {
  Word w = c;
  std::size_t len = static_cast<std::size_t>(n + cyl.appended);
  for (std::size_t i = 0; i < len; ++i) w.push_back(symbol(cyl, i));
  return w;
}

ExtensionParams LevelSet::params(const LevelCylinder& cyl) const {
  int P = n - cyl.l;
  ExtensionParams e;
  e.appended = cyl.appended;
  e.h = (cyl.appended - 1) / P + 1;
  e.j = cyl.l + (cyl.appended - 1) % P + 1;
  return e;
}

namespace {

struct BaseEntry {
  Word word;
  std::vector<std::pair<int, int>> windows;  // (l, appended)
};

std::optional<BaseEntry> make_entry(const IFSystem& ifs, const ProbabilityVector& p, Word a, double eps,
                                    double g2v) {
  auto w = extract_good_witness(ifs, p, a, eps);
  if (!w) return std::nullopt;
  BaseEntry e;
  for (int l : w->windows) e.windows.emplace_back(l, extension_params(ifs, a, l, g2v).appended);
  e.word = std::move(a);
  return e;
}

// Lexicographic order of the cylinder words after c; 0 when one is a prefix of the other.
int compare_cylinders(const LevelSet& E, const LevelCylinder& x, const LevelSet& F, const LevelCylinder& y,
                      std::size_t from = 0) {
  std::size_t lx = static_cast<std::size_t>(E.n + x.appended), ly = static_cast<std::size_t>(F.n + y.appended);
  std::size_t L = std::min(lx, ly);
  for (std::size_t i = from; i < L; ++i) {
    Symbol a = E.symbol(x, i), b = F.symbol(y, i);
    if (a != b) return a < b ? -1 : 1;
  }
  return 0;
}

}  // namespace

LevelSet build_level_set(const IFSystem& ifs, const ProbabilityVector& p, const Word& c, int n, double eps,
                         const RateFunction& g2, const LevelSetOptions& opt) {
  if (n < 1) throw std::invalid_argument("build_level_set: n must be >= 1");
  if (p.size() != ifs.size()) throw std::invalid_argument("build_level_set: weight vector size mismatch");
  LevelSet E;
  E.c = c;
  E.n = n;
  E.k = k_n(p, n);
  E.g2_value = g2(static_cast<double>(c.size() + static_cast<std::size_t>(n)));
  const std::size_t k = ifs.size();
  double total = std::pow(static_cast<double>(k), n);
  E.exact = total <= static_cast<double>(opt.exact_limit);
  if (E.g2_value == 0) return E;

  std::vector<BaseEntry> entries;
  if (E.exact) {
    std::size_t words = static_cast<std::size_t>(total);
    std::size_t chunks = chunk_count(words);
    std::vector<std::vector<BaseEntry>> parts(chunks);
    parallel_for(chunks, opt.threads, [&](std::size_t ci) {
      auto [lo, hi] = chunk_range(words, chunks, ci);
      for (std::size_t idx = lo; idx < hi; ++idx) {
        Word a(static_cast<std::size_t>(n));
        std::size_t v = idx;
        for (int i = n - 1; i >= 0; --i) {
          a[static_cast<std::size_t>(i)] = static_cast<Symbol>(v % k);
          v /= k;
        }
        if (auto e = make_entry(ifs, p, std::move(a), eps, E.g2_value)) parts[ci].push_back(std::move(*e));
      }
    });
    for (auto& part : parts)
      for (auto& e : part) entries.push_back(std::move(e));
    E.words_examined = words;
  } else {
    std::size_t S = opt.sample_budget;
    if (S == 0) throw std::invalid_argument("build_level_set: sample budget must be positive");
    std::vector<Word> draws(S);
    parallel_for(S, opt.threads, [&](std::size_t i) {
      draws[i] = sample_code(p, static_cast<std::size_t>(n), derive_seed(opt.seed, i));
    });
    std::map<Word, unsigned long> hits;
    for (auto& w : draws) ++hits[w];
    std::vector<std::pair<Word, unsigned long>> distinct(hits.begin(), hits.end());
    std::vector<std::optional<BaseEntry>> made(distinct.size());
    parallel_for(distinct.size(), opt.threads, [&](std::size_t i) {
      made[i] = make_entry(ifs, p, distinct[i].first, eps, E.g2_value);
    });
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      if (!made[i]) continue;
      Integer cnt;
      mpz_set_ui(cnt.get_mpz_t(), distinct[i].second);
      Rational w = Rational(cnt) / (Rational(static_cast<long>(S)) * cylinder_measure_exact(p, distinct[i].first));
      E.base_weights.push_back(w);
      entries.push_back(std::move(*made[i]));
    }
    E.words_examined = S;
  }

  for (std::size_t b = 0; b < entries.size(); ++b) {
    std::size_t first = E.cylinders.size();
    for (auto [l, m] : entries[b].windows)
      E.cylinders.push_back({static_cast<std::uint32_t>(b), static_cast<std::int32_t>(l), static_cast<std::int32_t>(m)});
    E.bases.push_back(std::move(entries[b].word));
    auto begin = E.cylinders.begin() + static_cast<std::ptrdiff_t>(first);
    std::sort(begin, E.cylinders.end(), [&](const LevelCylinder& x, const LevelCylinder& y) {
      int cmp = compare_cylinders(E, x, E, y);
      return cmp != 0 ? cmp < 0 : E.word_length(x) < E.word_length(y);
    });
    // distinct bases of equal length are never comparable, so adjacent checks suffice
    for (auto it = begin; it != E.cylinders.end() && it + 1 != E.cylinders.end(); ++it)
      if (compare_cylinders(E, *it, E, *(it + 1)) == 0)
        throw std::logic_error("build_level_set: cylinders are not disjoint");
  }
  return E;
}

Rational level_set_measure(const LevelSet& E, const ProbabilityVector& p, int threads) {
  const std::size_t k = p.size();
  std::size_t chunks = chunk_count(E.cylinders.size());
  std::vector<MeasureSum> parts(chunks, MeasureSum(k));
  parallel_for(chunks, threads, [&](std::size_t ci) {
    auto [lo, hi] = chunk_range(E.cylinders.size(), chunks, ci);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& cyl = E.cylinders[i];
      parts[ci].add(cylinder_counts(E, cyl, k), E.exact ? nullptr : &E.base_weights[cyl.base]);
    }
  });
  MeasureSum all(k);
  for (const auto& part : parts) all.merge(part);
  return all.total(exact_weights(p));
}

Rational pairwise_intersection_measure(const LevelSet& E, const LevelSet& F, const ProbabilityVector& p,
                                       int threads) {
  if (E.c != F.c) throw std::invalid_argument("pairwise_intersection_measure: level sets have different prefixes");
  const std::size_t k = p.size();
  const auto offF = base_offsets(F);
  const std::size_t nF = static_cast<std::size_t>(F.n);
  std::size_t chunks = chunk_count(E.cylinders.size());
  std::vector<MeasureSum> parts(chunks, MeasureSum(k));

  parallel_for(chunks, threads, [&](std::size_t ci) {
    auto [lo, hi] = chunk_range(E.cylinders.size(), chunks, ci);
    MeasureSum& acc = parts[ci];
    Word key;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& x = E.cylinders[i];
      std::size_t lx = static_cast<std::size_t>(E.n + x.appended);
      std::size_t K = std::min(lx, nF);
      key.resize(K);
      for (std::size_t t = 0; t < K; ++t) key[t] = E.symbol(x, t);
      auto less_prefix = [K](const Word& b, const Word& kw) {
        return std::lexicographical_compare(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(K), kw.begin(),
                                            kw.end());
      };
      auto greater_prefix = [K](const Word& kw, const Word& b) {
        return std::lexicographical_compare(kw.begin(), kw.end(), b.begin(),
                                            b.begin() + static_cast<std::ptrdiff_t>(K));
      };
      auto first = std::lower_bound(F.bases.begin(), F.bases.end(), key, less_prefix);
      auto last = std::upper_bound(first, F.bases.end(), key, greater_prefix);
      Rational wx = E.exact ? Rational(1) : E.base_weights[x.base];
      for (auto it = first; it != last; ++it) {
        std::size_t b = static_cast<std::size_t>(it - F.bases.begin());
        for (std::size_t yi = offF[b]; yi < offF[b + 1]; ++yi) {
          const auto& y = F.cylinders[yi];
          std::size_t ly = static_cast<std::size_t>(F.n + y.appended);
          if (lx >= nF && compare_cylinders(E, x, F, y, nF) != 0) continue;
          Rational w = wx * (F.exact ? Rational(1) : F.base_weights[y.base]);
          auto counts = lx >= ly ? cylinder_counts(E, x, k) : cylinder_counts(F, y, k);
          acc.add(counts, w == 1 ? nullptr : &w);
        }
      }
    }
  });
  MeasureSum all(k);
  for (const auto& part : parts) all.merge(part);
  return all.total(exact_weights(p));
}

double level_set_density(const LevelSet& E, const ProbabilityVector& p, double dim_s) {
  if (E.g2_value == 0) return 0;
  Rational m = level_set_measure(E, p);
  double mc = to_double(cylinder_measure_exact(p, E.c));
  return to_double(m) / (mc * E.n * std::pow(E.g2_value, dim_s));
}

KochenStone kochen_stone_bound(const std::vector<LevelSet>& levels, const ProbabilityVector& p, int threads) {
  if (levels.size() < 2) throw std::invalid_argument("kochen_stone_bound: need at least two levels");
  for (const auto& E : levels)
    if (E.c != levels.front().c) throw std::invalid_argument("kochen_stone_bound: levels have different prefixes");
  KochenStone ks;
  const std::size_t L = levels.size();
  for (const auto& E : levels) ks.level_measures.push_back(level_set_measure(E, p, threads));
  Rational S = 0, D = 0, prev_bound = 0, prev_S = 0;
  ks.increments_ok = true;
  for (std::size_t i = 0; i < L; ++i) {
    const Rational& e = ks.level_measures[i];
    Rational cross = 0;
    for (std::size_t j = 0; j < i; ++j) cross += pairwise_intersection_measure(levels[j], levels[i], p, threads);
    S += e;
    D += e + 2 * cross;
    Rational B = D > 0 ? Rational(S * S / D) : Rational(0);
    ks.prefix_bounds.push_back(to_double(B));
    if (i > 0 && prev_S > 0 && B - prev_bound > 2 * e + e * e / prev_S) ks.increments_ok = false;
    prev_bound = B;
    prev_S = S;
  }
  if (D == 0) throw std::invalid_argument("kochen_stone_bound: zero denominator (all levels empty)");
  ks.numerator = S * S;
  ks.denominator = D;
  Rational bound = ks.numerator / ks.denominator;
  ks.bound = to_double(bound);
  ks.normalized = to_double(bound / cylinder_measure_exact(p, levels.front().c));
  ks.cauchy_schwarz_ok = bound <= S;
  return ks;
}

// ---- hit search ----

namespace {

// x = phi_code[0..j) (y[j]) for every j < y.size(); a plain point has an empty code.
struct Query {
  Word code;
  std::vector<std::vector<double>> y;
  std::size_t jcap() const { return std::min(code.size(), y.size() - 1); }
};

struct RadiusPolicy {
  // log of an upper bound for every target radius below the node w (depth d)
  std::function<double(std::span<const Symbol> w, double log_r_w)> node_bound;
  // log radius of the target (a, l), or nullopt to skip it
  std::function<std::optional<double>(std::span<const Symbol> a, int l, double log_r_a)> target;
};

double norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> periodic_point(const IFSystem& ifs, std::span<const Symbol> u, std::span<const Symbol> v) {
  return compose_float(ifs, u).apply(compose_float(ifs, v).fixed_point());
}

class Searcher {
 public:
  Searcher(const IFSystem& ifs, const Query& q, int n, const RadiusPolicy& pol, std::size_t budget, bool first_only)
      : ifs_(ifs), q_(q), n_(n), pol_(pol), budget_(budget), first_only_(first_only) {
    for (double r : ifs.ratios()) logr_.push_back(std::log(r));
    center_ = ifs.bounds().center;
    R_ = ifs.bounds().radius;
    jcap_ = q.jcap();
    w_.reserve(static_cast<std::size_t>(n));
  }

  NearbySearch run() {
    FloatComposite id;
    id.t.assign(static_cast<std::size_t>(ifs_.dimension()), 0.0);
    descend(0, 0.0, 0.0, id);
    return std::move(out_);
  }

 private:
  bool stop_ = false;

  void descend(std::size_t j, double logr_c, double logr_w, const FloatComposite& local) {
    if (stop_) return;
    if (++out_.nodes > budget_) {
      out_.complete = false;
      stop_ = true;
      return;
    }
    std::size_t d = w_.size();
    if (d == static_cast<std::size_t>(n_)) {
      leaf(j, logr_w);
      return;
    }
    if (d > 0) {
      double bound = pol_.node_bound(w_, logr_w);
      if (bound == kNegInf) return;
      if (j < d) {
        double dl = norm_diff(q_.y[j], local.apply(center_)) - local.ratio * R_;
        if (dl > 0 && logr_c + std::log(dl) > bound + 1e-9) return;
      }
    }
    for (std::size_t b = 0; b < ifs_.size(); ++b) {
      w_.push_back(static_cast<Symbol>(b));
      if (j == d && d < jcap_ && q_.code[d] == b) {
        descend(d + 1, logr_c + logr_[b], logr_w + logr_[b], local);
      } else {
        FloatComposite next = local;
        next.append(ifs_.map(b));
        descend(j, logr_c, logr_w + logr_[b], next);
      }
      w_.pop_back();
      if (stop_) return;
    }
  }

  void leaf(std::size_t j, double logr_a) {
    const std::size_t n = w_.size();
    for (std::size_t l = 0; l < n; ++l) {
      auto radius = pol_.target(w_, static_cast<int>(l), logr_a);
      if (!radius || *radius == kNegInf) continue;
      const std::size_t P = n - l;
      auto tau = [&](std::size_t i) { return i < n ? w_[i] : w_[l + (i - n) % P]; };
      std::size_t J = j;
      if (j == n)
        while (J < jcap_ && q_.code[J] == tau(J)) ++J;
      double logr_J = 0;
      for (std::size_t i = 0; i < J; ++i) logr_J += logr_[tau(i)];
      Word u, v;
      if (J <= l) {
        u.assign(w_.begin() + static_cast<std::ptrdiff_t>(J), w_.begin() + static_cast<std::ptrdiff_t>(l));
        v.assign(w_.begin() + static_cast<std::ptrdiff_t>(l), w_.end());
      } else {
        std::size_t o = (J - l) % P;
        for (std::size_t i = 0; i < P; ++i) v.push_back(w_[l + (o + i) % P]);
      }
      double dl = norm_diff(q_.y[J], periodic_point(ifs_, u, v));
      if (dl == 0 || logr_J + std::log(dl) < *radius) {
        NearbyTarget t;
        t.rep = {static_cast<int>(l), static_cast<int>(n), w_};
        std::span<const Symbol> ws(w_);
        t.point = periodic_point(ifs_, ws.subspan(0, l), ws.subspan(l));
        t.distance = std::exp(logr_J) * dl;
        out_.targets.push_back(std::move(t));
        if (first_only_) {
          stop_ = true;
          return;
        }
      }
    }
  }

  const IFSystem& ifs_;
  const Query& q_;
  int n_;
  const RadiusPolicy& pol_;
  std::size_t budget_;
  bool first_only_;
  std::vector<double> logr_;
  std::vector<double> center_;
  double R_ = 0;
  std::size_t jcap_ = 0;
  Word w_;
  NearbySearch out_;
};

RadiusPolicy constant_radius(double radius) {
  double lr = std::log(radius);
  return {[lr](std::span<const Symbol>, double) { return lr; },
          [lr](std::span<const Symbol>, int, double) -> std::optional<double> { return lr; }};
}

bool canonical_rep(std::span<const Symbol> a, std::size_t l) {
  auto v = a.subspan(l);
  if (primitive_root_length(v) != v.size()) return false;
  return l == 0 || a[l - 1] != a.back();
}

}  // namespace

NearbySearch nearby_periodic_points(const IFSystem& ifs, std::span<const double> x, int n, double radius,
                                    std::size_t node_budget) {
  if (!(radius > 0)) throw std::invalid_argument("nearby_periodic_points: radius must be positive");
  if (n < 1) throw std::invalid_argument("nearby_periodic_points: n must be >= 1");
  if (x.size() != static_cast<std::size_t>(ifs.dimension()))
    throw std::invalid_argument("nearby_periodic_points: point dimension mismatch");
  Query q;
  q.y.emplace_back(x.begin(), x.end());
  auto pol = constant_radius(radius);
  return Searcher(ifs, q, n, pol, node_budget, false).run();
}

NearbySearch nearby_periodic_points_brute(const IFSystem& ifs, std::span<const double> x, int n, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("nearby_periodic_points_brute: radius must be positive");
  const std::size_t k = ifs.size();
  NearbySearch out;
  Word a(static_cast<std::size_t>(n), 0);
  for (;;) {
    for (std::size_t l = 0; l < a.size(); ++l) {
      std::span<const Symbol> as(a);
      auto pt = periodic_point(ifs, as.subspan(0, l), as.subspan(l));
      double d = norm_diff(x, pt);
      if (d < radius) out.targets.push_back({{static_cast<int>(l), n, a}, pt, d});
    }
    ++out.nodes;
    std::size_t i = a.size();
    while (i > 0 && ++a[i - 1] == k) a[--i] = 0;
    if (i == 0) break;
  }
  return out;
}

HitCurve hit_rate(const IFSystem& ifs, const ProbabilityVector& p, const TargetFunction& target, int N0, int N1,
                  long samples, std::uint64_t seed, int threads, std::size_t node_budget) {
  if (N0 < 1 || N1 < N0) throw std::invalid_argument("hit_rate: need 1 <= N0 <= N1");
  if (samples < 100) throw std::invalid_argument("hit_rate: need at least 100 samples");
  if (p.size() != ifs.size()) throw std::invalid_argument("hit_rate: weight vector size mismatch");
  if (!(target.power > 0)) throw std::invalid_argument("hit_rate: target power must be positive");
  const RateFunction& g = target.rate;
  const double tp = target.power;
  const double log_diam = std::log(ifs.diam(target.proxy));
  const double log_rmax = std::log(ifs.max_ratio());
  std::vector<double> logq;
  if (target.mode != TargetMode::Cylinder) {
    if (!ifs.exact_mode()) throw std::invalid_argument("hit_rate: intrinsic modes need an exact-form system");
    for (const auto& f : ifs.maps()) logq.push_back(std::log(static_cast<double>(f.exact->q)));
  }
  if (target.mode == TargetMode::IntrinsicEqui) {
    if (!ifs.equicontractive()) throw std::invalid_argument("hit_rate: intrinsic-equi mode needs equal ratios");
    if (!g.non_increasing()) throw std::invalid_argument("hit_rate: intrinsic-equi mode needs a non-increasing rate");
  }
  const double logq_min = logq.empty() ? 0 : *std::min_element(logq.begin(), logq.end());

  auto policy_for = [&](int n) {
    RadiusPolicy pol;
    double ln = std::log(static_cast<double>(n));
    double lg = g.log_value(ln);
    switch (target.mode) {
      case TargetMode::Cylinder:
        pol.node_bound = [=](std::span<const Symbol> w, double lrw) {
          return tp * (log_diam + lrw + static_cast<double>(n - static_cast<int>(w.size())) * log_rmax + lg);
        };
        pol.target = [=](std::span<const Symbol>, int, double lra) -> std::optional<double> {
          return tp * (log_diam + lra + lg);
        };
        break;
      case TargetMode::IntrinsicEqui: {
        double bound = tp * g.log_value(static_cast<double>(n - 1) * logq_min);
        pol.node_bound = [=](std::span<const Symbol>, double) { return bound; };
        pol.target = [&ifs, &g, tp](std::span<const Symbol> a, int l, double) -> std::optional<double> {
          if (!canonical_rep(a, static_cast<std::size_t>(l))) return std::nullopt;
          Representation rep{l, static_cast<int>(a.size()), Word(a.begin(), a.end())};
          return tp * g.log_value(log_integer(representation_denominator(ifs, rep)));
        };
        break;
      }
      case TargetMode::IntrinsicGeneral:
        pol.node_bound = [=, &logq](std::span<const Symbol> w, double) {
          double lQ = 0;
          for (Symbol s : w) lQ += logq[s];
          return tp * (std::log(2.0) + lg - lQ - static_cast<double>(n - static_cast<int>(w.size())) * logq_min);
        };
        pol.target = [&ifs, lg, tp](std::span<const Symbol> a, int l, double) -> std::optional<double> {
          if (!canonical_rep(a, static_cast<std::size_t>(l))) return std::nullopt;
          Representation rep{l, static_cast<int>(a.size()), Word(a.begin(), a.end())};
          return tp * (lg - log_integer(representation_denominator(ifs, rep)));
        };
        break;
    }
    return pol;
  };
  std::vector<RadiusPolicy> policies;
  for (int n = N0; n <= N1; ++n) policies.push_back(policy_for(n));

  // code long enough that the tail moves pi by < 1e-18 relative to the hull
  const std::size_t jcap = static_cast<std::size_t>(N1) + 64;
  const double tail = std::ceil(std::log(1e-18) / log_rmax);
  const std::size_t code_len = jcap + static_cast<std::size_t>(std::min(tail, 4000.0));

  HitCurve curve;
  curve.N0 = N0;
  curve.N1 = N1;
  curve.first_hit.assign(static_cast<std::size_t>(samples), 0);
  std::vector<std::size_t> nodes(static_cast<std::size_t>(samples), 0);
  parallel_for(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
    Query q;
    q.code = sample_code(p, code_len, derive_seed(seed, i));
    q.y.assign(jcap + 1, {});
    std::vector<double> cur = ifs.bounds().center;
    for (std::size_t idx = code_len; idx-- > 0;) {
      cur = ifs.map(q.code[idx]).apply(cur);
      if (idx <= jcap) q.y[idx] = cur;
    }
    for (int n = N0; n <= N1; ++n) {
      auto res = Searcher(ifs, q, n, policies[static_cast<std::size_t>(n - N0)], node_budget, true).run();
      nodes[i] += res.nodes;
      if (!res.complete) {
        curve.first_hit[i] = -1;
        return;
      }
      if (!res.targets.empty()) {
        curve.first_hit[i] = n;
        return;
      }
    }
  });
  for (auto c : nodes) curve.nodes += c;
  std::vector<long> by_level(static_cast<std::size_t>(N1 - N0 + 1), 0);
  for (int f : curve.first_hit) {
    if (f < 0) curve.partial = true;
    if (f > 0) ++by_level[static_cast<std::size_t>(f - N0)];
  }
  long acc = 0;
  for (long c : by_level) {
    acc += c;
    curve.cumulative.push_back(static_cast<double>(acc) / static_cast<double>(samples));
  }
  double f = curve.cumulative.back();
  curve.stderr_final = std::sqrt(f * (1 - f) / static_cast<double>(samples));
  return curve;
}

std::optional<FirstMomentBound> first_moment_bound(const IFSystem& ifs, const ProbabilityVector& p,
                                                   const TargetFunction& target, int N0, int N1) {
  if (target.mode != TargetMode::Cylinder) return std::nullopt;
  if (N0 < 1 || N1 < N0) throw std::invalid_argument("first_moment_bound: need 1 <= N0 <= N1");
  auto sep = separation_check(ifs, 8);
  if (sep.verdict != Separation::SSCWitnessed || !(sep.gap_lower > 0)) return std::nullopt;
  // p_a <= r_a^s' for every a, so the mass of a cylinder is at most its ratio to the s'
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ifs.size(); ++a) s = std::min(s, std::log(p[a]) / std::log(ifs.ratios()[a]));
  FirstMomentBound fm;
  fm.exponent = s;
  // a ball of diameter < gap * r_v meets one child of v
  fm.constant = std::pow(2.0 / sep.gap_lower, s);
  const double e = target.power * s;
  double rho = 0;
  for (double r : ifs.ratios()) rho += std::pow(r, e);
  const double log_diam = std::log(ifs.diam(target.proxy));
  double sum = 0;
  for (int n = N0; n <= N1; ++n) {
    double lg = target.rate.log_value(std::log(static_cast<double>(n)));
    if (lg == kNegInf) continue;
    sum += n * std::exp(e * (log_diam + lg) + n * std::log(rho));
  }
  fm.bound = fm.constant * sum;
  return fm;
}

}  // namespace ifsda
