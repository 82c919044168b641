#include "evfusion/slices.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "evfusion/error.hpp"

namespace evfusion {

namespace fs = std::filesystem;

std::array<std::uint8_t, 3> label_color(int label) {
  if (label <= 0) return kLabelPalette[0];
  const auto n = kLabelPalette.size() - 1;
  return kLabelPalette[1 + (static_cast<std::size_t>(label) - 1) % n];
}

namespace {

std::vector<std::uint8_t> gray_levels(const Volume& volume) {
  volume.validate();
  float lo = volume.at(0), hi = volume.at(0);
  for (std::size_t i = 0; i < volume.voxels(); ++i) {
    lo = std::min(lo, volume.at(i));
    hi = std::max(hi, volume.at(i));
  }
  std::vector<std::uint8_t> out(volume.voxels(), 0);
  if (hi > lo) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (volume.at(i) - lo) / (hi - lo)));
    }
  }
  return out;
}

fs::path slice_path(const fs::path& dir, const std::string& prefix, std::size_t z, const char* ext) {
  char name[32];
  std::snprintf(name, sizeof name, "_z%03zu.%s", z, ext);
  return dir / (prefix + name);
}

void write_image(const fs::path& path, const char* magic, std::size_t width, std::size_t height,
                 const std::vector<std::uint8_t>& pixels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << magic << '\n' << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<fs::path> export_pgm_slices(const Volume& volume, const fs::path& out_dir, const std::string& prefix) {
  const auto gray = gray_levels(volume);
  ensure_dir(out_dir);
  const auto [nx, ny, nz] = volume.dims;
  std::vector<fs::path> written;
  for (std::size_t z = 0; z < nz; ++z) {
    std::vector<std::uint8_t> pixels(gray.begin() + static_cast<std::ptrdiff_t>(z * nx * ny),
                                     gray.begin() + static_cast<std::ptrdiff_t>((z + 1) * nx * ny));
    written.push_back(slice_path(out_dir, prefix, z, "pgm"));
    write_image(written.back(), "P5", nx, ny, pixels);
  }
  return written;
}

std::vector<fs::path> export_overlay_slices(const Volume& intensity, std::span<const int> truth,
                                            std::span<const int> predicted, const fs::path& out_dir,
                                            const std::string& prefix) {
  if (truth.size() != intensity.voxels() || predicted.size() != intensity.voxels()) {
    throw InvalidArgument("label grids do not match the intensity volume");
  }
  const auto gray = gray_levels(intensity);
  ensure_dir(out_dir);
  const auto [nx, ny, nz] = intensity.dims;
  std::vector<fs::path> written;
  std::vector<std::uint8_t> pixels(2 * nx * ny * 3);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t v = intensity.voxel_index(x, y, z);
        for (std::size_t side = 0; side < 2; ++side) {
          const int label = side == 0 ? truth[v] : predicted[v];
          const auto color = label_color(label);
          std::uint8_t* px = &pixels[(y * 2 * nx + side * nx + x) * 3];
          for (std::size_t c = 0; c < 3; ++c) {
            px[c] = label > 0 ? static_cast<std::uint8_t>((gray[v] + color[c] + 1) / 2) : gray[v];
          }
        }
      }
    }
    written.push_back(slice_path(out_dir, prefix, z, "ppm"));
    write_image(written.back(), "P6", 2 * nx, ny, pixels);
  }
  return written;
}

}  // namespace evfusion
