#pragma once

// Rational points of exact-form systems: representations, intrinsic
// denominators, enumeration, and a finite-depth separation check.

#include "ifsda/coding.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ifsda {

/// prod_{j<=l} q_{a_j} * (prod_{l<j<=n} q_{a_j} - 1)
Integer representation_denominator(const IFSystem& ifs, const Representation& rep);

struct RepresentationSearch {
  std::vector<Representation> reps;  // sorted by (n, l, word)
  bool complete = true;              // false when the node budget cut the search
  std::size_t nodes = 0;
};

/// Every (l, n, word) with n <= n_cap and pi(word[0..l) word[l..n)^inf) equal
/// to the point coded by `code`. Words are found by descending the cylinder
/// tree and keeping only cylinders whose box hull contains the point, so
/// alternative codings of overlapping systems are included.
/// Throws std::invalid_argument when n_cap < |u| + |v|.
RepresentationSearch find_representations(const IFSystem& ifs, const EpCode& code, int n_cap,
                                          std::size_t node_budget = 1'000'000);

/// Same search started from an exact point; empty when x lies outside the hull.
RepresentationSearch find_representations_at(const IFSystem& ifs, const RationalVector& x, int n_cap,
                                             std::size_t node_budget = 1'000'000);
/// Canonical code of the shortest representation of x with n <= max_len.
std::optional<EpCode> code_of_point(const IFSystem& ifs, const RationalVector& x, int max_len = 32,
                                    std::size_t node_budget = 1'000'000);

struct IntrinsicDenominator {
  Integer q_int;
  int n = 0;
  int l = 0;
  Word word;
  /// Representations longer than n_cap have denominator >= q_min^{n_cap} >= q_int.
  bool certified = false;
  bool complete = true;
};
IntrinsicDenominator intrinsic_denominator(const IFSystem& ifs, const EpCode& code, int n_cap,
                                           std::size_t node_budget = 1'000'000);
/// Raises n_cap from |u|+|v| until certified or max_cap is reached.
IntrinsicDenominator intrinsic_denominator_auto(const IFSystem& ifs, const EpCode& code, int max_cap = 64);

/// Least common multiple of the reduced coordinate denominators.
Integer reduced_denominator(const RationalVector& x);

struct RationalPoint {
  RationalVector value;
  EpCode canonical_code;
  std::vector<EpCode> codes;  // every canonical code within the depth giving this value
  Integer q_int;
  int n_param = 0;
  int l_param = 0;
  Integer reduced_q;
  bool certified = false;
};

struct Enumeration {
  std::vector<RationalPoint> points;  // sorted by value
  bool partial = false;               // code cap reached
  std::size_t codes_visited = 0;
};

/// All distinct values pi(u v^inf) with |u| + |v| <= depth. Codes are visited
/// in a fixed order; points are sorted lexicographically by value.
Enumeration enumerate_rationals(const IFSystem& ifs, int depth, std::size_t code_cap = 10'000'000, int threads = 1);

/// Every canonical code with |u| + |v| <= depth, in enumeration order.
std::vector<EpCode> canonical_codes(std::size_t alphabet_size, int depth);

enum class Separation { SSCWitnessed, OverlapWitnessed, Inconclusive };

struct SeparationReport {
  Separation verdict = Separation::Inconclusive;
  /// Lower bound for min_{a != b} dist(X_a, X_b) when SSC is witnessed.
  double gap_lower = 0;
  int depth_used = 0;
  std::optional<std::pair<Word, Word>> overlap;
};
SeparationReport separation_check(const IFSystem& ifs, int depth);

const char* to_string(Separation s);

}  // namespace ifsda
