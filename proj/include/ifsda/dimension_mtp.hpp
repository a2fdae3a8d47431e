#pragma once

// Radius-power transforms, Psi^t bookkeeping, covering sums and symbolic
// box-counting estimates.

#include "ifsda/coding.hpp"
#include "ifsda/rate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ifsda {

struct BallSpec {
  std::vector<double> center;
  std::optional<EpCode> code;  // when the centre is given symbolically
  double radius = 1;
};

/// Same centre, radius r^{s/dim_h}. Radii >= 1 are allowed; they shrink
/// rather than grow when s > dim_h.
BallSpec ball_power(const BallSpec& b, double s, double dim_h);

struct MtpRate {
  TargetFunction target;  // radii raised to t
  double exponent = 0;    // dim_h / t
};
/// Throws std::invalid_argument for t < 1.
MtpRate mtp_rate(const TargetFunction& target, double t, double dim_h);

struct CoveringSum {
  std::vector<std::pair<int, double>> terms;  // n, sum over level-n targets of n * radius^s
  double finite_sum = 0;                      // sum of the terms over [N0, N1]
  std::optional<double> tail_limit;           // sum over n >= N0, closed form when available
  Verdict verdict = Verdict::Inconclusive;    // of the full series
  bool measure_zero = false;                  // Converges, so H^s(W) = 0
};
/// Cylinder mode: n (Diam g(n))^{s t} (sum r^{s t})^n.
/// intrinsic-equi: n #A^n Psi(q^{n-1})^{s t}, an upper bound.
/// intrinsic-general: n (2 g(n))^{s t} (sum q^{-s t})^n, an upper bound.
CoveringSum covering_sum(const IFSystem& ifs, const TargetFunction& target, double s, int N0, int N1);

/// sum_{n >= N} n x^n for 0 <= x < 1.
double tail_n_xn(double x, int N);

struct BoxDimension {
  double estimate = 0;
  double intercept = 0;
  double residual = 0;  // root mean square of the fit
  std::vector<std::pair<double, long>> counts;  // (delta, N(delta))
};
/// Least-squares slope of log N(delta_k) against log(1/delta_k) for
/// delta_k = r_max^k, k in [k_min, k_max]; N counts the distinct maps of the
/// Moran cut at delta_k. Needs at least three levels.
BoxDimension box_dimension(const IFSystem& ifs, int k_min, int k_max, int threads = 1,
                           std::size_t word_cap = 20'000'000);

struct DimensionChoice {
  double value = 0;
  std::string source;  // "similarity" or "box-estimate"
};
/// dim_S when SSC is witnessed, otherwise the box estimate (flagged).
DimensionChoice hausdorff_dimension_proxy(const IFSystem& ifs, int k_max = 10);

}  // namespace ifsda
