#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "evfusion/metrics.hpp"

namespace evfusion {

// Multi-channel voxel grid. Channels vary fastest, then x, y, z:
// element (x, y, z, c) lives at ((z * Y + y) * X + x) * C + c.
struct Volume {
  Volume() = default;
  Volume(std::array<std::size_t, 3> dims, std::array<double, 3> spacing, std::size_t channels);
  Volume(std::array<std::size_t, 3> dims, std::array<double, 3> spacing, std::size_t channels,
         std::vector<float> data);

  std::size_t voxels() const noexcept { return dims[0] * dims[1] * dims[2]; }
  std::size_t voxel_index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return (z * dims[1] + y) * dims[0] + x;
  }
  float& at(std::size_t voxel, std::size_t c = 0) { return data[voxel * channels + c]; }
  float at(std::size_t voxel, std::size_t c = 0) const { return data[voxel * channels + c]; }

  GridGeometry geometry() const { return {dims, spacing}; }

  // Throws InvalidArgument on zero dims, bad spacing, size mismatch or non-finite data.
  void validate() const;

  // Bitwise equality of header and payload.
  friend bool operator==(const Volume& a, const Volume& b);

  std::array<std::size_t, 3> dims{};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::size_t channels = 1;
  std::vector<float> data;
};

inline constexpr std::size_t kMaxVolumeElements = std::size_t{1} << 32;

void write_volume(const Volume& volume, const std::filesystem::path& path);
Volume read_volume(const std::filesystem::path& path);

}  // namespace evfusion
