#pragma once

// Approximation rates g: N -> [0, inf), the targets Psi built from them, and
// symbolic classification of the associated volume series.

#include "ifsda/ifs_core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ifsda {

enum class RateFamily { Power, PowerLog, Geometric, Constant, Table };

/// Base value, then optionally g1 = min(g, n^-cap) and g2 = g1 if
/// g1 >= n^-threshold else 0.
///   power      multiplier * n^-t
///   power-log  multiplier * n^-t * max(log n, 1)^-u
///   geometric  multiplier * base^n
///   constant   multiplier
///   table      values[n-1]; the last entry repeats beyond the table
struct RateFunction {
  RateFamily family = RateFamily::Constant;
  double t = 0;
  double u = 0;
  double base = 1;
  double multiplier = 1;
  std::vector<double> values;
  std::optional<double> cap_exponent;
  std::optional<double> threshold_exponent;

  static RateFunction power(double t, double multiplier = 1);
  static RateFunction power_log(double t, double u, double multiplier = 1);
  static RateFunction geometric(double base, double multiplier = 1);
  static RateFunction constant(double value);
  static RateFunction table(std::vector<double> values);

  /// Defined for real x >= 1 so that Psi(q) can be evaluated at large q.
  double operator()(double x) const;
  /// log g(e^log_x), usable where x itself would overflow; -inf for 0.
  double log_value(double log_x) const;
  /// Non-increasing on [1, upto] (checked pointwise on integers).
  bool non_increasing(long upto = 10'000) const;
  std::string describe() const;
};

/// Truncation min(g, n^-e) with e = 2/dim_s, or 1/dim_s in the equicontractive variant.
RateFunction g1_transform(const RateFunction& g, double dim_s, bool equicontractive);
/// Thresholding at n^{-4/dim_s}.
RateFunction g2_transform(const RateFunction& g1, double dim_s);

enum class TargetMode { Cylinder, IntrinsicEqui, IntrinsicGeneral };
const char* to_string(TargetMode m);

/// cylinder:          Psi(a) = Diam(X_a) g(|a|)
/// intrinsic-equi:    radius Psi(q_int) with Psi = rate evaluated at q_int
/// intrinsic-general: radius g(n(p/q)) / q_int
/// Every radius is raised to `power` (1 unless built by mtp_rate).
struct TargetFunction {
  RateFunction rate;
  TargetMode mode = TargetMode::Cylinder;
  DiamProxy proxy = DiamProxy::Upper;
  double power = 1;
};

enum class Verdict { Converges, Diverges, Inconclusive };
const char* to_string(Verdict v);

/// Asymptotic shape multiplier * base^n * n^-t * (log n)^-u of a closed-family
/// rate after transforms; absent for tables.
struct RateProfile {
  double multiplier = 1;
  double base = 1;
  double t = 0;
  double u = 0;
  bool zero = false;  // eventually identically 0
};
std::optional<RateProfile> asymptotic_profile(const RateFunction& g);

struct SeriesResult {
  Verdict verdict = Verdict::Inconclusive;
  double rho = 1;  // sum_a r_a^s
  std::vector<std::pair<long, double>> partial_sums;  // at n = 1, 2, 4, ... and the horizon
  std::string reason;
};

/// sum_n sum_{|a|=n} n (Diam(X_a) g(n))^s = Diam(X)^s sum_n n g(n)^s rho^n.
SeriesResult series_classify(const RateFunction& g, const IFSystem& ifs, double s, long horizon = 100'000);
/// sum_n n g(n)^s, the form the series takes at s = dim_S.
SeriesResult series_classify_direct(const RateFunction& g, double s, long horizon = 100'000);
/// Classification of sum_n n * multiplier^s * (base^s rho)^n n^{-ts} (log n)^{-us}.
Verdict classify_profile(const RateProfile& prof, double s, double rho);

/// g(n) = Psi(q^n) / (Diam(X) q^-n) for Psi(q) = q^-tau.
RateFunction tww_rate(long q, double tau, double diam);

/// Exponent t* with sum n n^{-ts} diverging iff t <= t*: 2/s.
double critical_power_exponent(double s);

}  // namespace ifsda
