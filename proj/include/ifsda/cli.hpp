#pragma once

// Command-line front end. Every subcommand reads one spec file, writes
// <out>/<subcommand>.json (and a CSV for tabular results) and prints the JSON
// summary on stdout.
//
// Exit codes: 0 success, 2 validation error, 3 budget abort (partial results
// are still written), 1 anything else.

#include "ifsda/rational_points.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ifsda {

inline constexpr const char* kVersion = "1.0.0";

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Enumeration cache, little-endian host layout:
///   "IFSDAENU" | u32 version | u64 fnv1a(canonical_text) | i32 depth |
///   u8 partial | u64 codes_visited | u64 count | count entries
/// Each entry: str value | str canonical code | str q_int | i32 n | i32 l |
///   str reduced_q | u8 certified | u32 #codes | str code ...
/// where str is a u32 byte length followed by the bytes.
void write_enumeration_cache(const std::string& path, const IFSystem& ifs, int depth, const Enumeration& e);
/// Absent when the file is missing, malformed, or keyed to another system or depth.
std::optional<Enumeration> read_enumeration_cache(const std::string& path, const IFSystem& ifs, int depth);

}  // namespace ifsda
