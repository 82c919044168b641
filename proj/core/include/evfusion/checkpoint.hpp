#pragma once

// Checkpoints use the volume container: JSON metadata (config, shapes, block
// names, training history) followed by every parameter block as float64 LE.

#include <filesystem>

#include "evfusion/trainer.hpp"

namespace evfusion {

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace evfusion
