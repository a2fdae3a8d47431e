#pragma once

// Experiment spec files: INI sections describing the system, weights, rate,
// target and run parameters.
//
//   [ifs]           dimension, optional alphabet (comma list; default: map order)
//   [map:<label>]   p, q            exact form (x + p) / q, p as "0" or "1, 2"
//                   ratio, translation, orthogonal (rows split by ';')
//   [weights]       mode = natural | uniform | explicit, values = comma list
//   [rate]          family = power | power-log | geometric | constant | table | tww
//                   t, u, base, multiplier, values, q, tau
//   [target]        mode = cylinder | intrinsic-equi | intrinsic-general,
//                   proxy = upper | refined, power
//   [experiment]    seed, threads, samples, n0, n1, n, n_list, s, eps, depth,
//                   prefix, horizon, budget, k_min, k_max, value, equi_variant

#include "ifsda/ifs_core.hpp"
#include "ifsda/rate.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ifsda {

struct ExperimentSpec {
  std::string path;
  std::string text;  // raw file content, hashed into every output
  std::optional<IFSystem> ifs;
  std::optional<ProbabilityVector> weights;  // resolved (natural by default)
  std::string weights_mode = "natural";
  std::optional<RateFunction> rate;
  TargetFunction target;
  std::map<std::string, std::string> experiment;  // raw [experiment] entries

  std::uint64_t seed = 0;
  bool has_seed = false;

  const IFSystem& system() const { return *ifs; }
  const ProbabilityVector& p() const { return *weights; }

  /// Typed [experiment] lookups; throw ValidationError naming "experiment.<key>".
  long get_long(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  bool has(const std::string& key) const { return experiment.count(key) > 0; }
  std::vector<long> get_long_list(const std::string& key, const std::vector<long>& fallback) const;
};

/// Throws ValidationError with the offending field on any problem.
ExperimentSpec parse_spec_text(const std::string& text, const std::string& path = "<memory>");
ExperimentSpec load_spec(const std::string& path);

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

RateFunction parse_rate(const std::map<std::string, std::string>& section, double diam);

}  // namespace ifsda
