#pragma once

#include "ifsda/ifs_core.hpp"

#include <string>
#include <vector>

namespace fixtures {

inline ifsda::IFSystem cantor() {
  return ifsda::IFSystem({"0", "1"}, {ifsda::SimilarityMap::from_exact({0}, 3), ifsda::SimilarityMap::from_exact({2}, 3)});
}

// ratios 1/2 and 1/4
inline ifsda::IFSystem golden() {
  return ifsda::IFSystem({"1", "2"}, {ifsda::SimilarityMap::from_exact({0}, 2), ifsda::SimilarityMap::from_exact({3}, 4)});
}

inline ifsda::IFSystem dyadic() {
  return ifsda::IFSystem({"0", "1"}, {ifsda::SimilarityMap::from_exact({0}, 2), ifsda::SimilarityMap::from_exact({1}, 2)});
}

// x/2 and x/4 share the fixed point 0
inline ifsda::IFSystem overlapping() {
  return ifsda::IFSystem({"1", "2"}, {ifsda::SimilarityMap::from_exact({0}, 2), ifsda::SimilarityMap::from_exact({0}, 4)});
}

inline ifsda::IFSystem figure1() {
  using ifsda::SimilarityMap;
  return ifsda::IFSystem({"1", "2", "3"}, {SimilarityMap::from_exact({0, 0}, 2), SimilarityMap::from_exact({1, 0}, 2),
                                           SimilarityMap::from_exact({0, 1}, 2)});
}

inline ifsda::IFSystem figure2() {
  using ifsda::SimilarityMap;
  return ifsda::IFSystem({"1", "2", "3", "4"},
                         {SimilarityMap::from_exact({0, 0}, 2), SimilarityMap::from_exact({3, 0}, 4),
                          SimilarityMap::from_exact({0, 4}, 5), SimilarityMap::from_exact({2, 2}, 3)});
}

inline std::string spec_path(const std::string& name) { return std::string(IFSDA_SPEC_DIR) + "/" + name; }

}  // namespace fixtures
