#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "evfusion/matrix.hpp"

namespace evfusion {

using Mask = std::vector<std::uint8_t>;

// Voxel (x, y, z) of a grid lives at index (z * Y + y) * X + x.
struct GridGeometry {
  std::array<std::size_t, 3> dims{};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  std::size_t voxels() const noexcept { return dims[0] * dims[1] * dims[2]; }
};

// 2|P & G| / (|P| + |G|); 1 when both masks are empty.
double dice_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

enum class HausdorffMode {
  exact,         // max of the two directed distances
  percentile95,  // max of the directed 95th percentiles from each boundary
};

// Symmetric Hausdorff distance between voxel-center sets in physical units.
// Throws EmptyMask if either mask has no voxels.
double hausdorff(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, const GridGeometry& grid,
                 HausdorffMode mode = HausdorffMode::exact);

// Top-label expected calibration error with equal-width confidence bins.
double ece(const Matrix& scores, std::span<const int> labels, std::size_t bins = 10);
double ece(std::span<const double> confidence, std::span<const std::uint8_t> correct, std::size_t bins = 10);

}  // namespace evfusion
