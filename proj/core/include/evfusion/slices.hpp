#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "evfusion/volume.hpp"

namespace evfusion {

// Overlay colors by label; label 0 is left unpainted and labels past the end
// wrap around to entry 1.
inline constexpr std::array<std::array<std::uint8_t, 3>, 7> kLabelPalette{{
    {0, 0, 0},        // 0 background (not drawn)
    {0, 255, 0},      // 1 green
    {255, 255, 0},    // 2 yellow
    {255, 0, 0},      // 3 red
    {0, 128, 255},    // 4 blue
    {255, 0, 255},    // 5 magenta
    {0, 255, 255},    // 6 cyan
}};

std::array<std::uint8_t, 3> label_color(int label);

// One binary PGM (P5) per axial slice of channel 0, intensities min-max mapped
// to 0..255 over the volume. Files are named <prefix>_z<NNN>.pgm.
std::vector<std::filesystem::path> export_pgm_slices(const Volume& volume, const std::filesystem::path& out_dir,
                                                     const std::string& prefix = "slice");

// One binary PPM (P6) per axial slice: ground truth on the left, prediction
// on the right, each painted at 50% opacity over the grayscale intensity.
// Files are named <prefix>_z<NNN>.ppm.
std::vector<std::filesystem::path> export_overlay_slices(const Volume& intensity, std::span<const int> truth,
                                                         std::span<const int> predicted,
                                                         const std::filesystem::path& out_dir,
                                                         const std::string& prefix = "overlay");

}  // namespace evfusion
