#include "evfusion/container.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "evfusion/error.hpp"

namespace evfusion {

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr std::uint32_t kMaxMetaSize = 64u << 20;

std::array<char, kMagicSize> padded_magic(std::string_view magic) {
  if (magic.size() > kMagicSize) throw InvalidArgument("container magic longer than 8 bytes");
  std::array<char, kMagicSize> out{};
  std::memcpy(out.data(), magic.data(), magic.size());
  return out;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

template <typename T, typename U>
std::vector<std::byte> encode(std::span<const T> values) {
  static_assert(sizeof(T) == sizeof(U));
  std::vector<std::byte> out(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    U bits = std::bit_cast<U>(values[i]);
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      out[i * sizeof(U) + b] = static_cast<std::byte>((bits >> (8 * b)) & 0xff);
    }
  }
  return out;
}

template <typename T, typename U>
std::vector<T> decode(std::span<const std::byte> bytes) {
  if (bytes.size() % sizeof(U) != 0) throw FormatError("payload size is not a multiple of the element size");
  std::vector<T> out(bytes.size() / sizeof(U));
  for (std::size_t i = 0; i < out.size(); ++i) {
    U bits = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      bits |= static_cast<U>(std::to_integer<unsigned>(bytes[i * sizeof(U) + b])) << (8 * b);
    }
    out[i] = std::bit_cast<T>(bits);
  }
  return out;
}

}  // namespace

void write_container(const std::filesystem::path& path, std::string_view magic, std::uint32_t version,
                     const nlohmann::json& meta, std::span<const std::byte> payload) {
  const auto tag = padded_magic(magic);
  const std::string text = meta.dump();
  if (text.size() > kMaxMetaSize) throw InvalidArgument("container metadata too large");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(tag.data(), kMagicSize);
  put_u32(os, version);
  put_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path, std::string_view magic,
                         std::size_t (*expected_payload)(const nlohmann::json&)) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  const std::string where = "'" + path.string() + "': ";

  std::array<unsigned char, kContainerHeaderSize> header{};
  is.read(reinterpret_cast<char*>(header.data()), header.size());
  if (is.gcount() != static_cast<std::streamsize>(header.size())) {
    throw FormatError(where + "file shorter than the 16-byte header");
  }
  const auto tag = padded_magic(magic);
  if (std::memcmp(header.data(), tag.data(), kMagicSize) != 0) throw FormatError(where + "bad magic");

  Container c;
  c.version = get_u32(header.data() + 8);
  const std::uint32_t meta_size = get_u32(header.data() + 12);
  if (meta_size > kMaxMetaSize) throw FormatError(where + "metadata length out of range");

  std::string text(meta_size, '\0');
  is.read(text.data(), meta_size);
  if (is.gcount() != static_cast<std::streamsize>(meta_size)) {
    throw FormatError(where + "truncated metadata: expected " + std::to_string(meta_size) + " bytes, got " +
                      std::to_string(is.gcount()));
  }
  try {
    c.meta = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed metadata: " + e.what());
  }

  std::size_t expected = 0;
  try {
    expected = expected_payload(c.meta);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed metadata: " + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(where + e.what());
  }

  c.payload.resize(expected);
  is.read(reinterpret_cast<char*>(c.payload.data()), static_cast<std::streamsize>(expected));
  const auto got = static_cast<std::size_t>(is.gcount());
  if (got != expected) {
    throw FormatError(where + "truncated payload: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(got));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError(where + "trailing bytes after the " + std::to_string(expected) + "-byte payload");
  }
  return c;
}

std::vector<std::byte> to_le_bytes(std::span<const float> values) { return encode<float, std::uint32_t>(values); }
std::vector<std::byte> to_le_bytes(std::span<const double> values) { return encode<double, std::uint64_t>(values); }
std::vector<float> floats_from_le(std::span<const std::byte> bytes) { return decode<float, std::uint32_t>(bytes); }
std::vector<double> doubles_from_le(std::span<const std::byte> bytes) { return decode<double, std::uint64_t>(bytes); }

}  // namespace evfusion
