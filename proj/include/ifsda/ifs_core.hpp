#pragma once

// Iterated function systems of similarities and their scalar invariants.
//
// Logarithms are natural throughout. Quantities built as ratios of logarithms
// (similarity dimension in the equicontractive case, the window length k_n in
// word_stats) do not depend on the base.

#include "ifsda/exact.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ifsda {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

/// x -> (x + p) / q with integer p and q >= 2.
struct ExactForm {
  std::vector<long> p;
  long q = 2;
};

/// x -> ratio * O * x + translation.
struct SimilarityMap {
  double ratio = 0.5;
  std::vector<double> translation;
  std::vector<double> orthogonal;  // row-major d x d; empty means identity
  std::optional<ExactForm> exact;

  static SimilarityMap from_exact(std::vector<long> p, long q);
  static SimilarityMap from_float(double ratio, std::vector<double> translation,
                                  std::vector<double> orthogonal = {});

  std::size_t dimension() const { return translation.size(); }
  bool has_rotation() const;
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> fixed_point() const;
};

enum class HullMode { Box, Ball };
enum class DiamProxy { Upper, Refined };

/// Outer hull of the attractor plus diameter estimates with
/// diam_refined <= Diam(X) <= min(diam_upper, diam_refined + refine_error).
struct AttractorBounds {
  HullMode mode = HullMode::Box;
  std::vector<double> lo, hi;         // box mode
  RationalVector exact_lo, exact_hi;  // box mode, exact rational extremes
  std::vector<double> center;         // box centre or ball centre
  RationalVector exact_center;
  double radius = 0;                  // X is inside the closed ball B(center, radius)
  double diam_upper = 0;
  double diam_refined = 0;
  double refine_error = 0;
};

class IFSystem {
 public:
  /// Validates the invariants; throws ValidationError naming the offending map.
  IFSystem(std::vector<std::string> alphabet, std::vector<SimilarityMap> maps);

  std::size_t size() const { return maps_.size(); }
  int dimension() const { return dimension_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  const std::vector<SimilarityMap>& maps() const { return maps_; }
  const SimilarityMap& map(std::size_t a) const { return maps_[a]; }
  const std::vector<double>& ratios() const { return ratios_; }
  double min_ratio() const;
  double max_ratio() const;

  bool equicontractive() const { return equicontractive_; }
  /// Every map carries an ExactForm.
  bool exact_mode() const { return exact_mode_; }
  /// No map has a non-identity orthogonal part.
  bool axis_aligned() const { return axis_aligned_; }

  const AttractorBounds& bounds() const { return bounds_; }
  double diam(DiamProxy proxy = DiamProxy::Upper) const;

  /// Stable textual form used for hashing and cache keys.
  std::string canonical_text() const;

 private:
  std::vector<std::string> alphabet_;
  std::vector<SimilarityMap> maps_;
  std::vector<double> ratios_;
  int dimension_ = 0;
  bool equicontractive_ = false;
  bool exact_mode_ = false;
  bool axis_aligned_ = true;
  AttractorBounds bounds_;
};

class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> weights);
  explicit ProbabilityVector(std::vector<Rational> weights);
  static ProbabilityVector uniform(std::size_t n);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t a) const { return weights_[a]; }
  const std::vector<double>& weights() const { return weights_; }
  /// Present when the weights are known exactly as rationals.
  const std::optional<std::vector<Rational>>& exact() const { return exact_; }
  double sum_squares() const;
  double max_weight() const;

 private:
  std::vector<double> weights_;
  std::optional<std::vector<Rational>> exact_;
};

/// Root of sum_a r_a^s = 1 (closed form when equicontractive, bisection otherwise).
double similarity_dimension(const IFSystem& ifs, double tol = 1e-13);

/// p_a = r_a^{dim_S}.
ProbabilityVector natural_weights(const IFSystem& ifs);

double entropy(const ProbabilityVector& p);
double lyapunov(const IFSystem& ifs, const ProbabilityVector& p);

struct MeasureInequality {
  bool holds = false;
  double margin = 0;  // (-2 log sum p^2) - h
};
MeasureInequality check_measure_inequality(const ProbabilityVector& p);

/// Weights p of a two-map system on either side of 1/2 where h_p = -2 log(p^2 + (1-p)^2).
struct BoundaryWeights {
  double low = 0;
  double high = 0;
};
BoundaryWeights boundary_weight_two_maps(double tol);

/// Half the smaller slack in the two smallness conditions on epsilon.
/// Throws std::domain_error when h_p < -2 log sum p^2 fails.
double epsilon_star(const IFSystem& ifs, const ProbabilityVector& p);

struct OverlapSearch {
  std::optional<std::pair<Word, Word>> witness;
  int depth_searched = 0;
  bool capped = false;  // the 2^22 table cap stopped the search early
  // Absence of a witness is not a proof that no exact overlap exists.
};
OverlapSearch detect_exact_overlap(const IFSystem& ifs, int max_depth);

const AttractorBounds& attractor_bounds(const IFSystem& ifs);

// Composition helpers. For a word w = w_1...w_n, phi_w = phi_{w_1} o ... o phi_{w_n}.

/// phi_w(x) = (x + p) / q for exact systems.
struct ExactComposite {
  Integer q = 1;
  std::vector<Integer> p;

  void append(const ExactForm& f);  // phi_w -> phi_w o f
  void prepend(const ExactForm& f); // phi_w -> f o phi_w
  RationalVector apply(const RationalVector& x) const;
  /// Fixed point p / (q - 1).
  RationalVector fixed_point() const;
};
ExactComposite compose_exact(const IFSystem& ifs, std::span<const Symbol> w);

/// phi_w(x) = ratio * O * x + t in floating point.
struct FloatComposite {
  double ratio = 1;
  std::vector<double> orthogonal;  // empty means identity
  std::vector<double> t;

  void append(const SimilarityMap& f);
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> fixed_point() const;
};
FloatComposite compose_float(const IFSystem& ifs, std::span<const Symbol> w);

/// Exact rational image of a point under an axis-aligned composed map. Float
/// maps are read as the exact rationals their doubles denote.
struct RationalComposite {
  Rational ratio = 1;
  RationalVector t;

  void append(const SimilarityMap& f);
  RationalVector apply(const RationalVector& x) const;
  RationalVector fixed_point() const;
};
RationalComposite compose_rational(const IFSystem& ifs, std::span<const Symbol> w);

}  // namespace ifsda
