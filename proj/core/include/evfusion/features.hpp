#pragma once

#include <cstddef>

#include "evfusion/matrix.hpp"
#include "evfusion/volume.hpp"

namespace evfusion {

inline constexpr std::size_t kFeatureDim = 4;

// Fixed per-voxel features of one channel, one row per voxel in volume order:
//   0 intensity
//   1 local mean over a window^3 neighbourhood
//   2 local (population) standard deviation over the same neighbourhood
//   3 gradient magnitude from central differences, in intensity per mm
// Neighbourhoods clamp coordinates at the volume edges. Each column is then
// min-max scaled to [0,1] over the volume; a constant column maps to 0.
Matrix extract_features(const Volume& volume, std::size_t channel, std::size_t window = 3);

}  // namespace evfusion
