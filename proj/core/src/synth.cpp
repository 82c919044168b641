#include "evfusion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "evfusion/error.hpp"

namespace evfusion {

namespace fs = std::filesystem;
using nlohmann::json;

void SceneConfig::validate() const {
  const std::size_t k = classes();
  const std::size_t h = modalities();
  if (k < 2) throw ConfigError("scene needs at least 2 classes");
  if (h < 1) throw ConfigError("scene needs at least 1 modality");
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("scene dims must be positive");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("scene spacing must be positive");
  }
  if (contrast.size() != h) throw ConfigError("contrast must have one row per modality");
  for (const auto& row : contrast) {
    if (row.size() != k) throw ConfigError("contrast rows must have one entry per class");
    for (double c : row) {
      if (!std::isfinite(c)) throw ConfigError("contrast entries must be finite");
    }
  }
  if (noise_sigma.size() != h) throw ConfigError("noise_sigma must have one entry per modality");
  for (double s : noise_sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("noise_sigma must be non-negative");
  }
  if (blobs.size() != k - 1) throw ConfigError("blobs must have one entry per foreground class");
  for (const auto& b : blobs) {
    if (b.count_min > b.count_max) throw ConfigError("blob count range is empty");
    if (!(b.radius_min > 0.0) || b.radius_min > b.radius_max) throw ConfigError("blob radius range is invalid");
  }
  for (const auto& [name, base] : regions) {
    if (base.empty()) throw ConfigError("region '" + name + "' is empty");
    for (int l : base) {
      if (l < 0 || static_cast<std::size_t>(l) >= k) {
        throw ConfigError("region '" + name + "' refers to unknown label " + std::to_string(l));
      }
    }
  }
  double total = 0.0;
  for (double f : split) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  if (cases < 3) throw ConfigError("at least 3 cases are required");
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

SceneConfig scene_from_json(const json& j) {
  SceneConfig c;
  try {
    c.dims = get_or(j, "dims", c.dims);
    c.spacing = get_or(j, "spacing", c.spacing);
    c.contrast = j.at("contrast").get<std::vector<std::vector<double>>>();
    const std::size_t h = c.contrast.size();
    const std::size_t k = h == 0 ? 0 : c.contrast.front().size();
    c.class_names = get_or(j, "class_names", std::vector<std::string>{});
    if (c.class_names.empty()) {
      for (std::size_t i = 0; i < k; ++i) c.class_names.push_back(i == 0 ? "background" : "class" + std::to_string(i));
    }
    c.modality_names = get_or(j, "modality_names", std::vector<std::string>{});
    if (c.modality_names.empty()) {
      for (std::size_t i = 0; i < h; ++i) c.modality_names.push_back("mod" + std::to_string(i));
    }
    if (j.at("noise_sigma").is_number()) {
      c.noise_sigma.assign(h, j.at("noise_sigma").get<double>());
    } else {
      c.noise_sigma = j.at("noise_sigma").get<std::vector<double>>();
    }
    if (j.contains("blobs")) {
      for (const auto& b : j.at("blobs")) {
        BlobSpec spec;
        const auto count = b.at("count").get<std::array<std::size_t, 2>>();
        const auto radius = b.at("radius").get<std::array<double, 2>>();
        spec.count_min = count[0];
        spec.count_max = count[1];
        spec.radius_min = radius[0];
        spec.radius_max = radius[1];
        c.blobs.push_back(spec);
      }
    } else if (k >= 2) {
      c.blobs.assign(k - 1, BlobSpec{});
    }
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.cases = get_or<std::size_t>(j, "cases", c.cases);
    c.split = get_or(j, "split", c.split);
    c.regions = get_or(j, "regions", RegionScheme{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid scene config: ") + e.what());
  }
  c.validate();
  return c;
}

json scene_to_json(const SceneConfig& c) {
  json blobs = json::array();
  for (const auto& b : c.blobs) {
    blobs.push_back({{"count", {b.count_min, b.count_max}}, {"radius", {b.radius_min, b.radius_max}}});
  }
  json j = {{"dims", c.dims},
            {"spacing", c.spacing},
            {"class_names", c.class_names},
            {"modality_names", c.modality_names},
            {"contrast", c.contrast},
            {"noise_sigma", c.noise_sigma},
            {"blobs", blobs},
            {"seed", c.seed},
            {"cases", c.cases},
            {"split", c.split}};
  if (!c.regions.empty()) j["regions"] = c.regions;
  return j;
}

SceneConfig load_scene(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("scene config " + path.string() + " is not valid JSON: " + e.what());
  }
  return scene_from_json(j);
}

std::vector<const Case*> Dataset::split(const std::string& name) const {
  std::vector<const Case*> out;
  for (const auto& c : cases) {
    if (c.split == name) out.push_back(&c);
  }
  return out;
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::size_t index, std::uint32_t kind, std::uint32_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), kind, sub};
  return std::mt19937_64(seq);
}

std::string case_id(std::size_t index) {
  std::string digits = std::to_string(index);
  return "case" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

}  // namespace

Case generate_case(const SceneConfig& config, std::size_t index) {
  config.validate();
  const auto [nx, ny, nz] = config.dims;
  const auto& sp = config.spacing;
  Case out;
  out.id = case_id(index);
  out.labels = Volume(config.dims, config.spacing, 1);

  auto geometry = stream(config.seed, index, 0);
  for (std::size_t k = 1; k < config.classes(); ++k) {
    const auto& spec = config.blobs[k - 1];
    const std::size_t count = std::uniform_int_distribution<std::size_t>(spec.count_min, spec.count_max)(geometry);
    for (std::size_t b = 0; b < count; ++b) {
      std::array<double, 3> center{};
      for (std::size_t a = 0; a < 3; ++a) {
        center[a] = std::uniform_real_distribution<double>(0.0, static_cast<double>(config.dims[a] - 1) * sp[a])(
            geometry);
      }
      const double radius = spec.radius_min == spec.radius_max
                                ? spec.radius_min
                                : std::uniform_real_distribution<double>(spec.radius_min, spec.radius_max)(geometry);
      const double r2 = radius * radius;
      for (std::size_t z = 0; z < nz; ++z) {
        const double dz = static_cast<double>(z) * sp[2] - center[2];
        if (dz * dz > r2) continue;
        for (std::size_t y = 0; y < ny; ++y) {
          const double dy = static_cast<double>(y) * sp[1] - center[1];
          if (dz * dz + dy * dy > r2) continue;
          for (std::size_t x = 0; x < nx; ++x) {
            const double dx = static_cast<double>(x) * sp[0] - center[0];
            if (dx * dx + dy * dy + dz * dz <= r2) out.labels.at(out.labels.voxel_index(x, y, z)) = static_cast<float>(k);
          }
        }
      }
    }
  }

  for (std::size_t h = 0; h < config.modalities(); ++h) {
    auto noise_rng = stream(config.seed, index, 1, static_cast<std::uint32_t>(h));
    std::normal_distribution<double> noise(0.0, 1.0);
    Volume vol(config.dims, config.spacing, 1);
    for (std::size_t i = 0; i < vol.voxels(); ++i) {
      const auto label = static_cast<std::size_t>(out.labels.at(i));
      const double eps = noise(noise_rng);
      const double v = config.contrast[h][label] + config.noise_sigma[h] * eps;
      vol.at(i) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    out.modalities.push_back(std::move(vol));
  }
  return out;
}

std::array<std::size_t, 3> split_counts(std::size_t n_cases, const std::array<double, 3>& f) {
  double total = 0.0;
  for (double v : f) {
    if (!(v >= 0.0)) throw ConfigError("split fractions must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  if (n_cases < 3) throw ConfigError("at least 3 cases are required");
  const double n = static_cast<double>(n_cases);
  auto train = static_cast<std::size_t>(std::llround(f[0] * n));
  auto val = static_cast<std::size_t>(std::llround(f[1] * n));
  train = std::min(train, n_cases);
  val = std::min(val, n_cases - train);
  return {train, val, n_cases - train - val};
}

namespace {

std::vector<std::string> split_tags(std::size_t n_cases, const std::array<double, 3>& split) {
  const auto counts = split_counts(n_cases, split);
  std::vector<std::string> tags;
  const char* names[] = {"train", "val", "test"};
  for (std::size_t s = 0; s < 3; ++s) tags.insert(tags.end(), counts[s], names[s]);
  return tags;
}

}  // namespace

Dataset synthesize(const SceneConfig& config, std::size_t n_cases, const std::array<double, 3>& split) {
  config.validate();
  const auto tags = split_tags(n_cases, split);
  Dataset ds{config, {}};
  ds.scene.cases = n_cases;
  ds.scene.split = split;
  for (std::size_t i = 0; i < n_cases; ++i) {
    ds.cases.push_back(generate_case(config, i));
    ds.cases.back().split = tags[i];
  }
  return ds;
}

DatasetManifest generate_dataset(const SceneConfig& config, std::size_t n_cases, const std::array<double, 3>& split,
                                 const fs::path& out_dir) {
  config.validate();
  const auto tags = split_tags(n_cases, split);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest{config, {}, out_dir};
  manifest.scene.cases = n_cases;
  manifest.scene.split = split;
  for (std::size_t i = 0; i < n_cases; ++i) {
    const Case c = generate_case(config, i);
    ManifestCase entry{c.id, tags[i], {}, c.id + "_label.evol"};
    for (std::size_t h = 0; h < c.modalities.size(); ++h) {
      fs::path file = c.id + "_" + config.modality_names[h] + ".evol";
      write_volume(c.modalities[h], out_dir / file);
      entry.modalities.push_back(file);
    }
    write_volume(c.labels, out_dir / entry.label);
    manifest.cases.push_back(std::move(entry));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json cases = json::array();
  for (const auto& c : manifest.cases) {
    json mods = json::array();
    for (const auto& m : c.modalities) mods.push_back(m.generic_string());
    cases.push_back({{"id", c.id}, {"split", c.split}, {"modalities", mods}, {"label", c.label.generic_string()}});
  }
  const json j = {{"version", 1}, {"scene", scene_to_json(manifest.scene)}, {"cases", cases}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

DatasetManifest load_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest " + file.string());
  DatasetManifest m;
  m.root = file.parent_path();
  try {
    json j;
    in >> j;
    m.scene = scene_from_json(j.at("scene"));
    for (const auto& c : j.at("cases")) {
      ManifestCase entry;
      entry.id = c.at("id").get<std::string>();
      entry.split = c.at("split").get<std::string>();
      if (entry.split != "train" && entry.split != "val" && entry.split != "test") {
        throw ConfigError("case " + entry.id + " has unknown split '" + entry.split + "'");
      }
      for (const auto& p : c.at("modalities")) entry.modalities.emplace_back(p.get<std::string>());
      entry.label = c.at("label").get<std::string>();
      if (entry.modalities.size() != m.scene.modalities()) {
        throw ConfigError("case " + entry.id + " lists the wrong number of modalities");
      }
      m.cases.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + file.string() + ": " + e.what());
  }
  for (const auto& c : m.cases) {
    auto check = [&](const fs::path& p) {
      if (!fs::exists(m.root / p)) throw IoError("manifest references missing file " + (m.root / p).string());
    };
    for (const auto& p : c.modalities) check(p);
    check(c.label);
  }
  return m;
}

std::vector<int> labels_of(const Volume& labels, std::size_t classes) {
  if (labels.channels != 1) throw InvalidArgument("label volume must have one channel");
  std::vector<int> out(labels.voxels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = labels.at(i);
    if (!(v >= 0.0f) || v != std::floor(v) || static_cast<std::size_t>(v) >= classes) {
      throw InvalidArgument("label volume holds " + std::to_string(v) + ", not a class index below " +
                            std::to_string(classes));
    }
    out[i] = static_cast<int>(v);
  }
  return out;
}

Dataset load_dataset(const DatasetManifest& manifest) {
  Dataset ds{manifest.scene, {}};
  for (const auto& entry : manifest.cases) {
    Case c;
    c.id = entry.id;
    c.split = entry.split;
    c.labels = read_volume(manifest.root / entry.label);
    labels_of(c.labels, manifest.scene.classes());
    for (const auto& p : entry.modalities) {
      c.modalities.push_back(read_volume(manifest.root / p));
      if (c.modalities.back().dims != c.labels.dims) {
        throw FormatError("case " + c.id + ": " + p.string() + " dims differ from the label volume");
      }
    }
    if (!ds.cases.empty() && ds.cases.front().labels.dims != c.labels.dims) {
      throw FormatError("case " + c.id + " dims differ from the first case");
    }
    ds.cases.push_back(std::move(c));
  }
  return ds;
}

}  // namespace evfusion
