#pragma once

// Synthetic multi-modality phantoms. Each case is a label grid of spherical
// blobs plus one intensity volume per modality, where modality h shows class k
// at mean intensity contrast[h][k] with Gaussian noise, clipped to [0,1].
// Equal contrast entries make a modality blind between those classes.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evfusion/regions.hpp"
#include "evfusion/volume.hpp"

namespace evfusion {

struct BlobSpec {
  std::size_t count_min = 1;
  std::size_t count_max = 2;
  double radius_min = 2.0;  // mm
  double radius_max = 4.0;
};

struct SceneConfig {
  std::array<std::size_t, 3> dims{24, 24, 24};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<std::string> class_names;      // K, index 0 is background
  std::vector<std::string> modality_names;   // H
  std::vector<std::vector<double>> contrast;  // H x K
  std::vector<double> noise_sigma;            // H
  std::vector<BlobSpec> blobs;                // K - 1, for classes 1..K-1
  std::uint64_t seed = 0;
  std::size_t cases = 12;
  std::array<double, 3> split{0.5, 0.25, 0.25};
  RegionScheme regions;

  std::size_t classes() const noexcept { return class_names.size(); }
  std::size_t modalities() const noexcept { return modality_names.size(); }

  // Throws ConfigError.
  void validate() const;
};

// Missing names are filled in as class<k> / mod<h>; throws ConfigError.
SceneConfig scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneConfig& config);
SceneConfig load_scene(const std::filesystem::path& path);

struct Case {
  std::string id;
  std::string split;  // "train", "val" or "test"
  std::vector<Volume> modalities;
  Volume labels;  // class index stored as float, one channel
};

struct Dataset {
  SceneConfig scene;
  std::vector<Case> cases;

  std::vector<const Case*> split(const std::string& name) const;
};

// Case `index` of the scene. Geometry and each modality's noise come from
// separate streams derived from (seed, index), so a modality's noise does not
// depend on the label layout or on the other modalities.
Case generate_case(const SceneConfig& config, std::size_t index);

// Per-split case counts: round(f0 n), round(f1 n), remainder.
std::array<std::size_t, 3> split_counts(std::size_t n_cases, const std::array<double, 3>& fractions);

Dataset synthesize(const SceneConfig& config, std::size_t n_cases, const std::array<double, 3>& split);

struct ManifestCase {
  std::string id;
  std::string split;
  std::vector<std::filesystem::path> modalities;
  std::filesystem::path label;
};

struct DatasetManifest {
  SceneConfig scene;
  std::vector<ManifestCase> cases;
  std::filesystem::path root;  // relative case paths resolve against this
};

// Writes every case and manifest.json under out_dir.
DatasetManifest generate_dataset(const SceneConfig& config, std::size_t n_cases,
                                 const std::array<double, 3>& split, const std::filesystem::path& out_dir);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
// Accepts the manifest file or the directory holding manifest.json. Checks
// that every referenced file exists.
DatasetManifest load_manifest(const std::filesystem::path& path);
// Reads every volume and checks consistent dims and label range.
Dataset load_dataset(const DatasetManifest& manifest);

// Integer labels from a label volume; throws InvalidArgument for values that
// are not class indices in [0, classes).
std::vector<int> labels_of(const Volume& labels, std::size_t classes);

}  // namespace evfusion
