#include "evfusion/features.hpp"

#include <algorithm>
#include <cmath>

#include "evfusion/error.hpp"

namespace evfusion {

Matrix extract_features(const Volume& volume, std::size_t channel, std::size_t window) {
  if (channel >= volume.channels) {
    throw InvalidArgument("channel " + std::to_string(channel) + " out of range for a " +
                          std::to_string(volume.channels) + "-channel volume");
  }
  if (window == 0 || window % 2 == 0) throw InvalidArgument("feature window must be odd and positive");

  const auto [nx, ny, nz] = volume.dims;
  const auto radius = static_cast<std::ptrdiff_t>(window / 2);
  auto value = [&](std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) {
    x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(nx) - 1);
    y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(ny) - 1);
    z = std::clamp<std::ptrdiff_t>(z, 0, static_cast<std::ptrdiff_t>(nz) - 1);
    return static_cast<double>(volume.at(volume.voxel_index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                                            static_cast<std::size_t>(z)),
                                         channel));
  };

  Matrix features(volume.voxels(), kFeatureDim);
  const double count = static_cast<double>(window * window * window);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        const auto ix = static_cast<std::ptrdiff_t>(x);
        const auto iy = static_cast<std::ptrdiff_t>(y);
        const auto iz = static_cast<std::ptrdiff_t>(z);
        double sum = 0.0;
        for (auto dz = -radius; dz <= radius; ++dz)
          for (auto dy = -radius; dy <= radius; ++dy)
            for (auto dx = -radius; dx <= radius; ++dx) sum += value(ix + dx, iy + dy, iz + dz);
        const double mean = sum / count;
        double var = 0.0;
        for (auto dz = -radius; dz <= radius; ++dz)
          for (auto dy = -radius; dy <= radius; ++dy)
            for (auto dx = -radius; dx <= radius; ++dx) {
              const double d = value(ix + dx, iy + dy, iz + dz) - mean;
              var += d * d;
            }
        const double gx = (value(ix + 1, iy, iz) - value(ix - 1, iy, iz)) / (2.0 * volume.spacing[0]);
        const double gy = (value(ix, iy + 1, iz) - value(ix, iy - 1, iz)) / (2.0 * volume.spacing[1]);
        const double gz = (value(ix, iy, iz + 1) - value(ix, iy, iz - 1)) / (2.0 * volume.spacing[2]);

        auto row = features.row(volume.voxel_index(x, y, z));
        row[0] = value(ix, iy, iz);
        row[1] = mean;
        row[2] = std::sqrt(var / count);
        row[3] = std::sqrt(gx * gx + gy * gy + gz * gz);
      }
    }
  }

  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    double lo = features(0, j), hi = features(0, j);
    for (std::size_t i = 1; i < features.rows(); ++i) {
      lo = std::min(lo, features(i, j));
      hi = std::max(hi, features(i, j));
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < features.rows(); ++i) {
      features(i, j) = range > 0.0 ? std::clamp((features(i, j) - lo) / range, 0.0, 1.0) : 0.0;
    }
  }
  return features;
}

}  // namespace evfusion
