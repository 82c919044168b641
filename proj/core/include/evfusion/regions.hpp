#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evfusion/metrics.hpp"

namespace evfusion {

// Region name -> base labels whose union forms the region.
using RegionScheme = std::map<std::string, std::vector<int>>;

// One mask per region. Throws InvalidArgument if the scheme names a label
// outside [0, classes) or if a grid label is out of range.
std::map<std::string, Mask> remap_nested_regions(std::span<const int> labels, std::size_t classes,
                                                 const RegionScheme& scheme);

}  // namespace evfusion
