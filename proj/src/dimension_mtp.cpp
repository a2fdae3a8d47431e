#include "ifsda/dimension_mtp.hpp"

#include "ifsda/errors.hpp"
#include "ifsda/parallel.hpp"
#include "ifsda/rational_points.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace ifsda {

BallSpec ball_power(const BallSpec& b, double s, double dim_h) {
  if (!(b.radius > 0)) throw std::invalid_argument("ball_power: radius must be positive");
  if (!(s > 0) || !(dim_h > 0)) throw std::invalid_argument("ball_power: s and dim_h must be positive");
  BallSpec out = b;
  if (s != dim_h) out.radius = std::pow(b.radius, s / dim_h);
  return out;
}

MtpRate mtp_rate(const TargetFunction& target, double t, double dim_h) {
  if (!(t >= 1)) throw std::invalid_argument("mtp_rate: t must be >= 1");
  if (!(dim_h > 0)) throw std::invalid_argument("mtp_rate: dim_h must be positive");
  MtpRate r;
  r.target = target;
  r.target.power = target.power * t;
  r.exponent = dim_h / t;
  return r;
}

double tail_n_xn(double x, int N) {
  if (!(x >= 0) || !(x < 1)) throw std::invalid_argument("tail_n_xn: need 0 <= x < 1");
  if (N < 1) N = 1;
  double n = N;
  return std::pow(x, n) * (n - (n - 1) * x) / ((1 - x) * (1 - x));
}

namespace {

RateProfile raise(RateProfile p, double t) {
  p.multiplier = std::pow(p.multiplier, t);
  p.base = std::pow(p.base, t);
  p.t *= t;
  p.u *= t;
  return p;
}

}  // namespace

CoveringSum covering_sum(const IFSystem& ifs, const TargetFunction& target, double s, int N0, int N1) {
  if (!(s > 0)) throw std::invalid_argument("covering_sum: s must be positive");
  if (N0 < 1 || N1 < N0) throw std::invalid_argument("covering_sum: need 1 <= N0 <= N1");
  const RateFunction& g = target.rate;
  const double st = s * target.power;
  const double k = static_cast<double>(ifs.size());
  CoveringSum out;

  std::vector<double> logq;
  if (target.mode != TargetMode::Cylinder) {
    if (!ifs.exact_mode()) throw std::invalid_argument("covering_sum: intrinsic modes need an exact-form system");
    for (const auto& f : ifs.maps()) logq.push_back(std::log(static_cast<double>(f.exact->q)));
  }
  if (target.mode == TargetMode::IntrinsicEqui && !ifs.equicontractive())
    throw std::invalid_argument("covering_sum: intrinsic-equi mode needs equal ratios");

  double rho = 0, log_pref = 0;
  switch (target.mode) {
    case TargetMode::Cylinder:
      for (double r : ifs.ratios()) rho += std::pow(r, st);
      log_pref = st * std::log(ifs.diam(target.proxy));
      break;
    case TargetMode::IntrinsicGeneral:
      for (double lq : logq) rho += std::exp(-st * lq);
      log_pref = st * std::log(2.0);
      break;
    case TargetMode::IntrinsicEqui: rho = k; break;
  }

  auto log_term = [&](int n) {
    double ln = std::log(static_cast<double>(n));
    double lg = target.mode == TargetMode::IntrinsicEqui ? g.log_value((n - 1) * logq.front()) : g.log_value(ln);
    if (lg == -std::numeric_limits<double>::infinity()) return lg;
    return ln + log_pref + st * lg + n * std::log(rho);
  };
  for (int n = N0; n <= N1; ++n) {
    double v = std::exp(log_term(n));
    out.terms.emplace_back(n, v);
    out.finite_sum += v;
  }

  auto prof = asymptotic_profile(g);
  if (prof) {
    if (target.mode == TargetMode::IntrinsicEqui) {
      if (prof->zero || prof->base < 1) {
        out.verdict = Verdict::Converges;
      } else if (prof->base > 1) {
        out.verdict = Verdict::Diverges;
      } else {
        double x = k * std::exp(-prof->t * st * logq.front());
        if (std::abs(x - 1) > 1e-9)
          out.verdict = x < 1 ? Verdict::Converges : Verdict::Diverges;
        else
          out.verdict = prof->u * st > 2 ? Verdict::Converges : Verdict::Diverges;
      }
    } else {
      RateProfile pt = raise(*prof, target.power);
      out.verdict = classify_profile(pt, s, rho);
      bool plain = !g.cap_exponent && !g.threshold_exponent && !prof->zero && prof->t == 0 && prof->u == 0;
      if (plain) {
        double x = std::pow(pt.base, s) * rho;
        if (x < 1)
          out.tail_limit = std::exp(log_pref) * std::pow(pt.multiplier, s) * tail_n_xn(x, N0);
        else
          out.tail_limit = std::numeric_limits<double>::infinity();
      }
    }
  }
  out.measure_zero = out.verdict == Verdict::Converges;
  return out;
}

namespace {

std::string map_key(const IFSystem& ifs, std::span<const Symbol> w) {
  std::string key;
  if (ifs.exact_mode()) {
    auto c = compose_exact(ifs, w);
    key = c.q.get_str(16);
    for (const auto& p : c.p) key += "," + p.get_str(16);
    return key;
  }
  auto f = compose_float(ifs, w);
  auto q = [](double v) { return std::to_string(std::llround(v * 1e12)); };
  key = q(f.ratio);
  for (double v : f.orthogonal) key += "," + q(v);
  for (double v : f.t) key += "," + q(v);
  return key;
}

long moran_count(const IFSystem& ifs, double delta, std::size_t cap) {
  std::unordered_set<std::string> seen;
  std::size_t words = 0;
  Word w;
  std::vector<double> ratio_stack{1.0};
  // iterative DFS over the cylinder tree, stopping at r_w <= delta
  std::vector<std::size_t> next{0};
  while (!next.empty()) {
    if (next.back() == ifs.size()) {
      next.pop_back();
      ratio_stack.pop_back();
      if (!w.empty()) w.pop_back();
      continue;
    }
    Symbol b = static_cast<Symbol>(next.back()++);
    double r = ratio_stack.back() * ifs.ratios()[b];
    w.push_back(b);
    if (r <= delta * (1 + 1e-12)) {
      if (++words > cap) throw BudgetExceeded("box_dimension: Moran cut exceeds the word cap");
      seen.insert(map_key(ifs, w));
      w.pop_back();
    } else {
      ratio_stack.push_back(r);
      next.push_back(0);
    }
  }
  return static_cast<long>(seen.size());
}

}  // namespace

BoxDimension box_dimension(const IFSystem& ifs, int k_min, int k_max, int threads, std::size_t word_cap) {
  if (k_min < 0 || k_max - k_min < 2) throw std::invalid_argument("box_dimension: need at least three levels");
  const double rmax = ifs.max_ratio();
  std::size_t levels = static_cast<std::size_t>(k_max - k_min + 1);
  std::vector<long> counts(levels);
  parallel_for(levels, threads, [&](std::size_t i) {
    counts[i] = moran_count(ifs, std::pow(rmax, k_min + static_cast<int>(i)), word_cap);
  });
  BoxDimension out;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < levels; ++i) {
    double delta = std::pow(rmax, k_min + static_cast<int>(i));
    out.counts.emplace_back(delta, counts[i]);
    xs.push_back(-std::log(delta));
    ys.push_back(std::log(static_cast<double>(counts[i])));
  }
  double n = static_cast<double>(levels), mx = 0, my = 0;
  for (std::size_t i = 0; i < levels; ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < levels; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  out.estimate = sxy / sxx;
  out.intercept = my - out.estimate * mx;
  double ss = 0;
  for (std::size_t i = 0; i < levels; ++i) {
    double r = ys[i] - (out.intercept + out.estimate * xs[i]);
    ss += r * r;
  }
  out.residual = std::sqrt(ss / n);
  return out;
}

DimensionChoice hausdorff_dimension_proxy(const IFSystem& ifs, int k_max) {
  auto sep = separation_check(ifs, 8);
  if (sep.verdict == Separation::SSCWitnessed) return {similarity_dimension(ifs), "similarity"};
  return {box_dimension(ifs, std::max(1, k_max - 6), k_max).estimate, "box-estimate"};
}

}  // namespace ifsda
