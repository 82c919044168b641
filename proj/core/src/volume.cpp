#include "evfusion/volume.hpp"

#include <cmath>
#include <cstring>

#include "evfusion/container.hpp"
#include "evfusion/error.hpp"

namespace evfusion {

namespace {

constexpr std::string_view kVolumeMagic = "EVFVOL";
constexpr std::uint32_t kVolumeVersion = 1;

// Element count with overflow and size checks.
std::size_t checked_elements(const std::array<std::size_t, 3>& dims, std::size_t channels) {
  std::size_t total = channels;
  if (channels == 0) throw InvalidArgument("volume needs at least one channel");
  for (std::size_t d : dims) {
    if (d == 0) throw InvalidArgument("volume dimensions must be positive");
    if (total > kMaxVolumeElements / d) throw InvalidArgument("volume dimensions overflow the element limit");
    total *= d;
  }
  return total;
}

std::size_t volume_payload_bytes(const nlohmann::json& meta) {
  if (meta.at("dtype").get<std::string>() != "float32") throw InvalidArgument("unsupported dtype");
  const auto dims = meta.at("dims").get<std::vector<std::int64_t>>();
  const auto channels = meta.at("channels").get<std::int64_t>();
  if (dims.size() != 3) throw InvalidArgument("volume header needs three dims");
  for (auto d : dims) {
    if (d <= 0) throw InvalidArgument("volume header dims must be positive");
  }
  if (channels <= 0) throw InvalidArgument("volume header channel count must be positive");
  const std::array<std::size_t, 3> udims{static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]),
                                         static_cast<std::size_t>(dims[2])};
  return checked_elements(udims, static_cast<std::size_t>(channels)) * sizeof(float);
}

}  // namespace

Volume::Volume(std::array<std::size_t, 3> dims_, std::array<double, 3> spacing_, std::size_t channels_)
    : dims(dims_), spacing(spacing_), channels(channels_), data(checked_elements(dims_, channels_), 0.0f) {}

Volume::Volume(std::array<std::size_t, 3> dims_, std::array<double, 3> spacing_, std::size_t channels_,
               std::vector<float> data_)
    : dims(dims_), spacing(spacing_), channels(channels_), data(std::move(data_)) {
  if (data.size() != checked_elements(dims, channels)) {
    throw InvalidArgument("volume data length does not match dims x channels");
  }
}

void Volume::validate() const {
  if (data.size() != checked_elements(dims, channels)) {
    throw InvalidArgument("volume data length does not match dims x channels");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("volume spacing must be positive and finite");
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw InvalidArgument("volume contains non-finite values");
  }
}

bool operator==(const Volume& a, const Volume& b) {
  return a.dims == b.dims && std::memcmp(a.spacing.data(), b.spacing.data(), sizeof(a.spacing)) == 0 &&
         a.channels == b.channels && a.data.size() == b.data.size() &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

void write_volume(const Volume& volume, const std::filesystem::path& path) {
  volume.validate();
  nlohmann::json meta = {{"dims", volume.dims},
                         {"spacing", volume.spacing},
                         {"channels", volume.channels},
                         {"dtype", "float32"}};
  write_container(path, kVolumeMagic, kVolumeVersion, meta, to_le_bytes(std::span<const float>(volume.data)));
}

Volume read_volume(const std::filesystem::path& path) {
  Container c = read_container(path, kVolumeMagic, &volume_payload_bytes);
  if (c.version != kVolumeVersion) {
    throw FormatError("'" + path.string() + "': unsupported volume version " + std::to_string(c.version));
  }
  Volume v;
  const auto dims = c.meta.at("dims").get<std::vector<std::size_t>>();
  v.dims = {dims[0], dims[1], dims[2]};
  const auto spacing = c.meta.at("spacing").get<std::vector<double>>();
  if (spacing.size() != 3) throw FormatError("'" + path.string() + "': volume header needs three spacings");
  v.spacing = {spacing[0], spacing[1], spacing[2]};
  v.channels = c.meta.at("channels").get<std::size_t>();
  v.data = floats_from_le(c.payload);
  try {
    v.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
  return v;
}

}  // namespace evfusion
