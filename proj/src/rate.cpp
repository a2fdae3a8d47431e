#include "ifsda/rate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ifsda {

RateFunction RateFunction::power(double t, double multiplier) {
  RateFunction g;
  g.family = RateFamily::Power;
  g.t = t;
  g.multiplier = multiplier;
  return g;
}

RateFunction RateFunction::power_log(double t, double u, double multiplier) {
  RateFunction g = power(t, multiplier);
  g.family = RateFamily::PowerLog;
  g.u = u;
  return g;
}

RateFunction RateFunction::geometric(double base, double multiplier) {
  if (base < 0) throw std::invalid_argument("geometric rate: base must be >= 0");
  RateFunction g;
  g.family = RateFamily::Geometric;
  g.base = base;
  g.multiplier = multiplier;
  return g;
}

RateFunction RateFunction::constant(double value) {
  RateFunction g;
  g.family = RateFamily::Constant;
  g.multiplier = value;
  return g;
}

RateFunction RateFunction::table(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("table rate: no values");
  for (double v : values)
    if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("table rate: values must be finite and >= 0");
  RateFunction g;
  g.family = RateFamily::Table;
  g.values = std::move(values);
  return g;
}

double RateFunction::operator()(double x) const {
  if (!(x >= 1)) throw std::invalid_argument("rate evaluated below 1");
  double v = 0;
  switch (family) {
    case RateFamily::Power: v = multiplier * std::pow(x, -t); break;
    case RateFamily::PowerLog: v = multiplier * std::pow(x, -t) * std::pow(std::max(std::log(x), 1.0), -u); break;
    case RateFamily::Geometric: v = multiplier * std::pow(base, x); break;
    case RateFamily::Constant: v = multiplier; break;
    case RateFamily::Table: {
      auto i = static_cast<std::size_t>(std::llround(x));
      v = values[std::min(i, values.size()) - 1];
      break;
    }
  }
  if (cap_exponent) v = std::min(v, std::pow(x, -*cap_exponent));
  if (threshold_exponent && v < std::pow(x, -*threshold_exponent)) v = 0;
  return v;
}

double RateFunction::log_value(double log_x) const {
  if (!(log_x >= 0)) throw std::invalid_argument("rate evaluated below 1");
  const double ninf = -std::numeric_limits<double>::infinity();
  auto lg = [&](double v) { return v > 0 ? std::log(v) : ninf; };
  double v = 0;
  switch (family) {
    case RateFamily::Power: v = lg(multiplier) - t * log_x; break;
    case RateFamily::PowerLog: v = lg(multiplier) - t * log_x - u * std::log(std::max(log_x, 1.0)); break;
    case RateFamily::Geometric:
      v = base == 1 ? lg(multiplier) : lg(multiplier) + std::exp(log_x) * lg(base);
      break;
    case RateFamily::Constant: v = lg(multiplier); break;
    case RateFamily::Table: return lg((*this)(std::min(std::exp(log_x), 1e18)));
  }
  if (std::isnan(v)) v = ninf;
  if (cap_exponent) v = std::min(v, -*cap_exponent * log_x);
  if (threshold_exponent && v < -*threshold_exponent * log_x) v = ninf;
  return v;
}

bool RateFunction::non_increasing(long upto) const {
  double prev = (*this)(1.0);
  for (long n = 2; n <= upto; ++n) {
    double v = (*this)(static_cast<double>(n));
    if (v > prev * (1 + 1e-12)) return false;
    prev = v;
  }
  return true;
}

std::string RateFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family) {
    case RateFamily::Power: os << "power(t=" << t << ",mult=" << multiplier << ")"; break;
    case RateFamily::PowerLog: os << "power-log(t=" << t << ",u=" << u << ",mult=" << multiplier << ")"; break;
    case RateFamily::Geometric: os << "geometric(base=" << base << ",mult=" << multiplier << ")"; break;
    case RateFamily::Constant: os << "constant(" << multiplier << ")"; break;
    case RateFamily::Table: os << "table(" << values.size() << " values)"; break;
  }
  if (cap_exponent) os << " min n^-" << *cap_exponent;
  if (threshold_exponent) os << " threshold n^-" << *threshold_exponent;
  return os.str();
}

RateFunction g1_transform(const RateFunction& g, double dim_s, bool equicontractive) {
  if (!(dim_s > 0)) throw std::invalid_argument("g1_transform: dim_s must be positive");
  RateFunction out = g;
  double e = (equicontractive ? 1.0 : 2.0) / dim_s;
  // min(g, n^-a, n^-b) = min(g, n^-max(a,b)) for n >= 1
  out.cap_exponent = g.cap_exponent ? std::max(*g.cap_exponent, e) : e;
  return out;
}

RateFunction g2_transform(const RateFunction& g1, double dim_s) {
  if (!(dim_s > 0)) throw std::invalid_argument("g2_transform: dim_s must be positive");
  RateFunction out = g1;
  double e = 4.0 / dim_s;
  out.threshold_exponent = g1.threshold_exponent ? std::min(*g1.threshold_exponent, e) : e;
  return out;
}

const char* to_string(TargetMode m) {
  switch (m) {
    case TargetMode::Cylinder: return "cylinder";
    case TargetMode::IntrinsicEqui: return "intrinsic-equi";
    default: return "intrinsic-general";
  }
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converges: return "Converges";
    case Verdict::Diverges: return "Diverges";
    default: return "Inconclusive";
  }
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

// Sign of A - B for large n, comparing shapes then multipliers.
int compare_profiles(const RateProfile& a, const RateProfile& b) {
  if (a.zero || b.zero) return a.zero == b.zero ? 0 : (a.zero ? -1 : 1);
  if (!close(a.base, b.base)) return a.base < b.base ? -1 : 1;
  if (!close(a.t, b.t)) return a.t > b.t ? -1 : 1;
  if (!close(a.u, b.u)) return a.u > b.u ? -1 : 1;
  if (!close(a.multiplier, b.multiplier)) return a.multiplier < b.multiplier ? -1 : 1;
  return 0;
}

std::vector<std::pair<long, double>> partial_sums(long horizon, const std::function<double(long)>& term) {
  std::vector<std::pair<long, double>> out;
  double acc = 0;
  long next = 1;
  for (long n = 1; n <= horizon; ++n) {
    acc += term(n);
    if (n == next || n == horizon) {
      out.emplace_back(n, acc);
      if (n == next) next *= 2;
    }
  }
  return out;
}

Verdict envelope_verdict(long horizon, const std::function<double(long)>& term, std::string& reason) {
  long h0 = std::max(1L, horizon / 2);
  double a = term(h0), b = term(horizon);
  if (b == 0 && a == 0) {
    reason = "terms vanish on the second half of the horizon";
    return Verdict::Converges;
  }
  if (a <= 0 || b <= 0 || horizon == h0) {
    reason = "no geometric envelope detected";
    return Verdict::Inconclusive;
  }
  double q = std::exp((std::log(b) - std::log(a)) / static_cast<double>(horizon - h0));
  if (q < 1 - 1e-6) {
    long q0 = horizon - (horizon - h0) / 2;
    bool mono = true;
    for (long n = q0; n < horizon && mono; ++n) mono = term(n + 1) <= term(n);
    if (mono) {
      reason = "geometric envelope with ratio " + std::to_string(q);
      return Verdict::Converges;
    }
  }
  if (q > 1 + 1e-6) {
    reason = "terms grow geometrically with ratio " + std::to_string(q);
    return Verdict::Diverges;
  }
  reason = "no geometric envelope detected";
  return Verdict::Inconclusive;
}

}  // namespace

std::optional<RateProfile> asymptotic_profile(const RateFunction& g) {
  RateProfile p;
  switch (g.family) {
    case RateFamily::Power: p = {g.multiplier, 1, g.t, 0, false}; break;
    case RateFamily::PowerLog: p = {g.multiplier, 1, g.t, g.u, false}; break;
    case RateFamily::Geometric: p = {g.multiplier, g.base, 0, 0, false}; break;
    case RateFamily::Constant: p = {g.multiplier, 1, 0, 0, false}; break;
    case RateFamily::Table: return std::nullopt;
  }
  if (p.multiplier == 0 || p.base == 0) p.zero = true;
  if (g.cap_exponent) {
    RateProfile cap{1, 1, *g.cap_exponent, 0, false};
    int c = compare_profiles(p, cap);
    if (c > 0) p = cap;
  }
  if (g.threshold_exponent && !p.zero) {
    RateProfile thr{1, 1, *g.threshold_exponent, 0, false};
    if (compare_profiles(p, thr) < 0) p.zero = true;
  }
  return p;
}

Verdict classify_profile(const RateProfile& prof, double s, double rho) {
  if (prof.zero) return Verdict::Converges;
  double G = std::pow(prof.base, s) * rho;
  if (std::abs(G - 1) > 1e-9) return G < 1 ? Verdict::Converges : Verdict::Diverges;
  double e = 1 - prof.t * s;  // exponent of n in the terms
  if (std::abs(e + 1) > 1e-12) return e < -1 ? Verdict::Converges : Verdict::Diverges;
  return prof.u * s > 1 ? Verdict::Converges : Verdict::Diverges;
}

namespace {

SeriesResult classify_with_rho(const RateFunction& g, double s, double rho, double diam_s, long horizon) {
  if (!(s > 0)) throw std::invalid_argument("series_classify: s must be positive");
  SeriesResult res;
  res.rho = rho;
  auto term = [&](long n) {
    double v = g(static_cast<double>(n));
    if (v <= 0) return 0.0;
    return diam_s * static_cast<double>(n) * std::exp(s * std::log(v) + static_cast<double>(n) * std::log(rho));
  };
  res.partial_sums = partial_sums(horizon, term);
  if (auto prof = asymptotic_profile(g)) {
    res.verdict = classify_profile(*prof, s, rho);
    res.reason = "closed-form profile";
  } else {
    res.verdict = envelope_verdict(horizon, term, res.reason);
  }
  return res;
}

}  // namespace

SeriesResult series_classify(const RateFunction& g, const IFSystem& ifs, double s, long horizon) {
  double rho = 0;
  for (double r : ifs.ratios()) rho += std::pow(r, s);
  return classify_with_rho(g, s, rho, std::pow(ifs.diam(), s), horizon);
}

SeriesResult series_classify_direct(const RateFunction& g, double s, long horizon) {
  return classify_with_rho(g, s, 1.0, 1.0, horizon);
}

RateFunction tww_rate(long q, double tau, double diam) {
  return RateFunction::geometric(std::pow(static_cast<double>(q), 1 - tau), 1.0 / diam);
}

double critical_power_exponent(double s) { return 2.0 / s; }

}  // namespace ifsda
