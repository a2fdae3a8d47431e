#include "ifsda/rational_points.hpp"

#include "ifsda/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ifsda {

Integer representation_denominator(const IFSystem& ifs, const Representation& rep) {
  if (!ifs.exact_mode()) throw std::invalid_argument("representation_denominator: system has no exact form");
  if (rep.l < 0 || rep.n <= rep.l || rep.word.size() != static_cast<std::size_t>(rep.n))
    throw std::invalid_argument("representation_denominator: malformed representation");
  Integer pre = 1, per = 1;
  for (int j = 0; j < rep.n; ++j) (j < rep.l ? pre : per) *= Integer(static_cast<long>(ifs.map(rep.word[j]).exact->q));
  return pre * (per - 1);
}

namespace {

bool rep_less(const Representation& a, const Representation& b) {
  if (a.n != b.n) return a.n < b.n;
  if (a.l != b.l) return a.l < b.l;
  return a.word < b.word;
}

struct RepSearcher {
  const IFSystem& ifs;
  int n_cap;
  std::size_t budget;
  RepresentationSearch out;
  Word path;
  std::vector<RationalVector> ys;  // ys[k] = Q_w x - P_w for the length-k prefix w

  bool in_box(const RationalVector& y) const {
    const auto& b = ifs.bounds();
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] < b.exact_lo[i] || y[i] > b.exact_hi[i]) return false;
    return true;
  }

  void check_leaf() {
    int n = static_cast<int>(path.size());
    ExactComposite suffix;
    suffix.p.assign(static_cast<std::size_t>(ifs.dimension()), Integer(0));
    for (int l = n - 1; l >= 0; --l) {
      suffix.prepend(*ifs.map(path[l]).exact);
      const auto& y = ys[l];
      bool hit = true;
      Integer qm1 = suffix.q - 1;
      for (std::size_t i = 0; i < y.size() && hit; ++i) {
        // y * (Q - 1) == P  with y = num/den
        hit = y[i].get_num() * qm1 == suffix.p[i] * y[i].get_den();
      }
      if (hit) out.reps.push_back({l, n, path});
    }
  }

  void descend() {
    if (!out.complete) return;
    if (++out.nodes > budget) {
      out.complete = false;
      return;
    }
    if (!path.empty()) check_leaf();
    if (static_cast<int>(path.size()) == n_cap) return;
    const RationalVector y = ys.back();  // copy: ys grows below
    for (std::size_t a = 0; a < ifs.size(); ++a) {
      const auto& f = *ifs.map(a).exact;
      RationalVector z(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) z[i] = y[i] * f.q - f.p[i];
      if (!in_box(z)) continue;
      path.push_back(static_cast<Symbol>(a));
      ys.push_back(std::move(z));
      descend();
      ys.pop_back();
      path.pop_back();
    }
  }
};

}  // namespace

RepresentationSearch find_representations(const IFSystem& ifs, const EpCode& code, int n_cap,
                                          std::size_t node_budget) {
  if (!ifs.exact_mode()) throw std::invalid_argument("find_representations: system has no exact form");
  if (n_cap < static_cast<int>(code.u.size() + code.v.size()))
    throw std::invalid_argument("find_representations: n_cap smaller than the canonical code length");
  return find_representations_at(ifs, project_exact(ifs, code), n_cap, node_budget);
}

RepresentationSearch find_representations_at(const IFSystem& ifs, const RationalVector& x, int n_cap,
                                             std::size_t node_budget) {
  if (!ifs.exact_mode()) throw std::invalid_argument("find_representations: system has no exact form");
  if (x.size() != static_cast<std::size_t>(ifs.dimension()))
    throw std::invalid_argument("find_representations: point dimension mismatch");
  RepSearcher s{ifs, n_cap, node_budget, {}, {}, {}};
  if (!s.in_box(x)) return s.out;
  s.ys.push_back(x);
  s.descend();
  std::sort(s.out.reps.begin(), s.out.reps.end(), rep_less);
  return std::move(s.out);
}

std::optional<EpCode> code_of_point(const IFSystem& ifs, const RationalVector& x, int max_len,
                                    std::size_t node_budget) {
  for (int cap = 1; cap <= max_len; ++cap) {
    auto search = find_representations_at(ifs, x, cap, node_budget);
    if (!search.reps.empty()) return code_of(search.reps.front());
    if (!search.complete) break;
  }
  return std::nullopt;
}

IntrinsicDenominator intrinsic_denominator(const IFSystem& ifs, const EpCode& code, int n_cap,
                                           std::size_t node_budget) {
  auto search = find_representations(ifs, code, n_cap, node_budget);
  IntrinsicDenominator best;
  best.complete = search.complete;
  bool have = false;
  for (const auto& rep : search.reps) {
    Integer q = representation_denominator(ifs, rep);
    // reps are sorted by (n, l), so strict improvement keeps the tie rule
    if (!have || q < best.q_int) {
      best.q_int = q;
      best.n = rep.n;
      best.l = rep.l;
      best.word = rep.word;
      have = true;
    }
  }
  if (!have) throw std::logic_error("intrinsic_denominator: canonical representation not found");
  long q_min = std::numeric_limits<long>::max();
  for (const auto& m : ifs.maps()) q_min = std::min<long>(q_min, static_cast<long>(m.exact->q));
  best.certified = search.complete && pow(Integer(q_min), static_cast<unsigned long>(n_cap)) >= best.q_int;
  return best;
}

IntrinsicDenominator intrinsic_denominator_auto(const IFSystem& ifs, const EpCode& code, int max_cap) {
  int cap = static_cast<int>(code.u.size() + code.v.size());
  Representation canon{static_cast<int>(code.u.size()), cap, unroll(code, static_cast<std::size_t>(cap))};
  Integer bound = representation_denominator(ifs, canon);
  long q_min = std::numeric_limits<long>::max();
  for (const auto& m : ifs.maps()) q_min = std::min<long>(q_min, static_cast<long>(m.exact->q));
  while (cap < max_cap && pow(Integer(q_min), static_cast<unsigned long>(cap)) < bound) ++cap;
  return intrinsic_denominator(ifs, code, cap);
}

Integer reduced_denominator(const RationalVector& x) {
  Integer l = 1;
  for (auto v : x) {
    v.canonicalize();
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.get_den_mpz_t());
  }
  return l;
}

std::vector<EpCode> canonical_codes(std::size_t k, int depth) {
  std::vector<EpCode> out;
  auto next_word = [k](Word& w) {
    for (std::size_t i = w.size(); i-- > 0;) {
      if (++w[i] < k) return true;
      w[i] = 0;
    }
    return false;
  };
  for (int P = 1; P <= depth; ++P) {
    Word v(static_cast<std::size_t>(P), 0);
    do {
      if (primitive_root_length(v) != v.size()) continue;
      for (int L = 0; L + P <= depth; ++L) {
        Word u(static_cast<std::size_t>(L), 0);
        do {
          if (!u.empty() && u.back() == v.back()) continue;
          out.push_back({u, v});
        } while (next_word(u));
      }
    } while (next_word(v));
  }
  return out;
}

Enumeration enumerate_rationals(const IFSystem& ifs, int depth, std::size_t code_cap, int threads) {
  if (!ifs.exact_mode()) throw std::invalid_argument("enumerate_rationals: system has no exact form");
  if (depth < 1) throw std::invalid_argument("enumerate_rationals: depth must be >= 1");
  Enumeration out;
  auto codes = canonical_codes(ifs.size(), depth);
  if (codes.size() > code_cap) {
    codes.resize(code_cap);
    out.partial = true;
  }
  out.codes_visited = codes.size();
  std::vector<RationalVector> values(codes.size());
  parallel_for(codes.size(), threads, [&](std::size_t i) { values[i] = project_exact(ifs, codes[i]); });

  std::vector<std::size_t> order(codes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less(values[a], values[b]); });
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  out.points.resize(groups.size());
  parallel_for(groups.size(), threads, [&](std::size_t g) {
    auto [i0, i1] = groups[g];
    RationalPoint pt;
    pt.value = values[order[i0]];
    for (std::size_t i = i0; i < i1; ++i) pt.codes.push_back(codes[order[i]]);
    std::sort(pt.codes.begin(), pt.codes.end(), [](const EpCode& a, const EpCode& b) {
      std::size_t la = a.u.size() + a.v.size(), lb = b.u.size() + b.v.size();
      if (la != lb) return la < lb;
      if (a.v.size() != b.v.size()) return a.v.size() < b.v.size();
      return a < b;
    });
    pt.canonical_code = pt.codes.front();
    auto qi = intrinsic_denominator(ifs, pt.canonical_code, depth + 1);
    pt.q_int = qi.q_int;
    pt.n_param = qi.n;
    pt.l_param = qi.l;
    pt.certified = qi.certified;
    pt.reduced_q = reduced_denominator(pt.value);
    out.points[g] = std::move(pt);
  });
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(Separation s) {
  switch (s) {
    case Separation::SSCWitnessed: return "SSC-witnessed";
    case Separation::OverlapWitnessed: return "overlap-witnessed";
    default: return "inconclusive";
  }
}

namespace {

struct Hull {
  RationalVector lo, hi;      // box mode
  std::vector<double> c;      // ball mode
  double r = 0;
};

Hull hull_of(const IFSystem& ifs, const Word& w) {
  const auto& b = ifs.bounds();
  Hull h;
  if (b.mode == HullMode::Box) {
    auto rc = compose_rational(ifs, w);
    h.lo = rc.apply(b.exact_lo);
    h.hi = rc.apply(b.exact_hi);
  } else {
    auto fc = compose_float(ifs, w);
    h.c = fc.apply(b.center);
    h.r = fc.ratio * b.radius;
  }
  return h;
}

// Squared distance for boxes (exact), distance for balls.
Rational box_gap2(const Hull& a, const Hull& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.lo.size(); ++i) {
    Rational g = 0;
    if (b.lo[i] > a.hi[i]) g = b.lo[i] - a.hi[i];
    else if (a.lo[i] > b.hi[i]) g = a.lo[i] - b.hi[i];
    s += g * g;
  }
  return s;
}

double ball_gap(const Hull& a, const Hull& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.c.size(); ++i) s += (a.c[i] - b.c[i]) * (a.c[i] - b.c[i]);
  return std::sqrt(s) - a.r - b.r;
}

}  // namespace

SeparationReport separation_check(const IFSystem& ifs, int depth) {
  if (depth < 1) throw std::invalid_argument("separation_check: depth must be >= 1");
  SeparationReport rep;
  auto ov = detect_exact_overlap(ifs, std::min(depth, 8));
  if (ov.witness) {
    rep.verdict = Separation::OverlapWitnessed;
    rep.overlap = ov.witness;
    rep.depth_used = ov.depth_searched;
    return rep;
  }
  const bool box = ifs.bounds().mode == HullMode::Box;
  const bool exact_1d = box && ifs.exact_mode() && ifs.dimension() == 1;
  constexpr double kMargin = 1e-9;
  std::deque<std::pair<Word, Word>> queue;
  for (std::size_t a = 0; a < ifs.size(); ++a)
    for (std::size_t b = a + 1; b < ifs.size(); ++b)
      queue.push_back({Word{static_cast<Symbol>(a)}, Word{static_cast<Symbol>(b)}});
  double gap = std::numeric_limits<double>::infinity();
  std::size_t processed = 0;
  int deepest = 1;
  while (!queue.empty()) {
    auto [u, v] = std::move(queue.front());
    queue.pop_front();
    if (++processed > 2'000'000) return rep;
    deepest = std::max<int>(deepest, static_cast<int>(u.size()));
    Hull hu = hull_of(ifs, u), hv = hull_of(ifs, v);
    double dist;
    bool separated;
    if (box) {
      if (u.size() == v.size() && hu.lo == hv.lo && hu.hi == hv.hi) {
        rep.verdict = Separation::OverlapWitnessed;
        rep.overlap = std::make_pair(u, v);
        rep.depth_used = static_cast<int>(u.size());
        return rep;
      }
      Rational g2 = box_gap2(hu, hv);
      dist = std::sqrt(to_double(g2));
      separated = exact_1d ? g2 > 0 : dist > kMargin;
    } else {
      dist = ball_gap(hu, hv);
      separated = dist > kMargin;
    }
    if (separated) {
      gap = std::min(gap, dist);
      continue;
    }
    if (static_cast<int>(u.size()) >= depth) {
      rep.depth_used = depth;
      return rep;
    }
    for (std::size_t a = 0; a < ifs.size(); ++a)
      for (std::size_t b = 0; b < ifs.size(); ++b) {
        Word u2 = u, v2 = v;
        u2.push_back(static_cast<Symbol>(a));
        v2.push_back(static_cast<Symbol>(b));
        queue.push_back({std::move(u2), std::move(v2)});
      }
  }
  rep.verdict = Separation::SSCWitnessed;
  rep.gap_lower = gap;
  rep.depth_used = deepest;
  return rep;
}

}  // namespace ifsda
