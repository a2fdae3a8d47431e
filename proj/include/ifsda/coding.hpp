#pragma once

// Words, cylinders, eventually periodic codes and the coding map.

#include "ifsda/ifs_core.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ifsda {

/// The infinite sequence u v v v ...
struct EpCode {
  Word u;
  Word v;
  bool operator==(const EpCode&) const = default;
  bool operator<(const EpCode& o) const { return u != o.u ? u < o.u : v < o.v; }
};

/// word[0..l) is the preperiod and word[l..n) one copy of the period.
struct Representation {
  int l = 0;
  int n = 1;
  Word word;
  bool operator==(const Representation&) const = default;
};

/// Shortest period of w that divides |w|.
std::size_t primitive_root_length(std::span<const Symbol> w);

/// Canonical form: primitive period, and the last symbols of u and v differ.
EpCode canonicalize(Word u, Word v);
EpCode code_of(const Representation& rep);
/// First `length` symbols of u v v v ...
Word unroll(const EpCode& code, std::size_t length);

/// pi(u v^infinity) = phi_u(fixed point of phi_v).
RationalVector project_exact(const IFSystem& ifs, const EpCode& code);

struct FloatProjection {
  std::vector<double> point;
  double error_bound = 0;
};
/// phi_prefix(centre of the attractor bounds); pi of every extension lies
/// within error_bound.
FloatProjection project_float(const IFSystem& ifs, std::span<const Symbol> prefix,
                              DiamProxy proxy = DiamProxy::Upper);

double cylinder_measure(const ProbabilityVector& p, std::span<const Symbol> a);
/// Exact product; float weights are read as the rationals their doubles denote.
Rational cylinder_measure_exact(const ProbabilityVector& p, std::span<const Symbol> a);
double cylinder_ratio(const IFSystem& ifs, std::span<const Symbol> a);
double cylinder_diam(const IFSystem& ifs, std::span<const Symbol> a, DiamProxy proxy = DiamProxy::Upper);

/// i.i.d. symbols with law p; symbol i uses counter i of the stream keyed by seed.
Word sample_code(const ProbabilityVector& p, std::size_t length, std::uint64_t seed);

/// Symbol labels joined directly when every label is one character, else
/// separated by commas.
std::string format_word(const IFSystem& ifs, std::span<const Symbol> w);
Word parse_word(const IFSystem& ifs, std::string_view text);
/// "u|v"
std::string format_code(const IFSystem& ifs, const EpCode& code);
EpCode parse_code(const IFSystem& ifs, std::string_view text);

}  // namespace ifsda
