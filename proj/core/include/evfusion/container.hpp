#pragma once

// Binary container shared by volumes and checkpoints:
//
//   offset 0   8 bytes  magic (ASCII, NUL padded)
//   offset 8   u32 LE   format version
//   offset 12  u32 LE   length L of the JSON metadata
//   offset 16  L bytes  UTF-8 JSON metadata
//   offset 16+L         raw little-endian payload

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace evfusion {

inline constexpr std::size_t kContainerHeaderSize = 16;

struct Container {
  std::uint32_t version = 0;
  nlohmann::json meta;
  std::vector<std::byte> payload;
};

void write_container(const std::filesystem::path& path, std::string_view magic, std::uint32_t version,
                     const nlohmann::json& meta, std::span<const std::byte> payload);

// Reads header and metadata; the payload must be exactly expected_payload(meta)
// bytes long.
Container read_container(const std::filesystem::path& path, std::string_view magic,
                         std::size_t (*expected_payload)(const nlohmann::json&));

// Little-endian (de)serialization of numeric arrays.
std::vector<std::byte> to_le_bytes(std::span<const float> values);
std::vector<std::byte> to_le_bytes(std::span<const double> values);
std::vector<float> floats_from_le(std::span<const std::byte> bytes);
std::vector<double> doubles_from_le(std::span<const std::byte> bytes);

}  // namespace evfusion
