#pragma once

// Subword statistics of finite words: C_t, k_n, the frequent set F_n, windows
// with atypical ratio/weight products, and Monte Carlo estimators.

#include "ifsda/coding.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ifsda {

/// Number of distinct length-t factors among the |a|-t+1 windows; 0 if t > |a|.
long distinct_subwords(std::span<const Symbol> a, int t);

/// Sum over distinct length-t factors b of (number of windows equal to b)^2.
long collision_statistic(std::span<const Symbol> a, int t);

/// floor(log n / -log sum p^2) + 1, i.e. the least k >= 1 with n (sum p^2)^k < 1.
int k_n(const ProbabilityVector& p, long n);

/// C_{k_n}(a) >= floor(n/10); false whenever k_n > n.
bool in_frequent_set(std::span<const Symbol> a, const ProbabilityVector& p);

/// Windows l in [0, n-k_n] whose ratio product leaves
/// [e^{k(-chi-eps)}, e^{k(-chi+eps)}] or whose weight product leaves
/// [e^{k(-h-eps)}, e^{k(-h+eps)}], with k = k_n and chi, h taken for p.
std::vector<int> bad_windows(const IFSystem& ifs, const ProbabilityVector& p, std::span<const Symbol> a, double eps);

/// #bad_windows >= max(1, floor(n/20))
bool in_bad_set(const IFSystem& ifs, const ProbabilityVector& p, std::span<const Symbol> a, double eps);

struct GoodWitness {
  Word word;
  std::vector<int> windows;
  int k = 0;
};

/// Good(n, eps) is taken as F_n minus Bad(n, eps). For such a word the witness
/// keeps the first window of every distinct k_n-factor whose products lie in
/// both bands; there are at least floor(n/20) of them.
std::optional<GoodWitness> extract_good_witness(const IFSystem& ifs, const ProbabilityVector& p,
                                                std::span<const Symbol> a, double eps);

/// Independent replay of the witness conditions (count, distinct factors, bands).
bool validate_witness(const IFSystem& ifs, const ProbabilityVector& p, const GoodWitness& w, double eps);

struct Estimate {
  double estimate = 0;
  double stderr_ = 0;
  long hits = 0;
  long samples = 0;
};

/// Fraction of sampled words of length n lying in F_n. Sample i uses seed
/// derive_seed(seed, i).
Estimate estimate_frequent_measure(const ProbabilityVector& p, long n, long samples, std::uint64_t seed,
                                   int threads = 1);

struct BadEstimate {
  long n = 0;
  int k = 0;
  Estimate est;
};
struct BadMeasureReport {
  std::vector<BadEstimate> rows;
  /// exp of the least-squares slope of log(estimate) against k_n over rows with
  /// a positive estimate; absent with fewer than two such rows.
  std::optional<double> fitted_gamma;
};
BadMeasureReport estimate_bad_measure(const IFSystem& ifs, const ProbabilityVector& p, double eps,
                                      const std::vector<long>& n_list, long samples, std::uint64_t seed,
                                      int threads = 1);

struct GoodReport {
  Estimate est;
  long invalid_witnesses = 0;
  double mean_witness_size = 0;
};
GoodReport estimate_good_measure(const IFSystem& ifs, const ProbabilityVector& p, double eps, long n, long samples,
                                 std::uint64_t seed, int threads = 1);

/// Exact m(union of [a] over a in F_n) by enumerating A^n (n <= 24).
Rational exact_frequent_measure(const ProbabilityVector& p, int n);

}  // namespace ifsda
