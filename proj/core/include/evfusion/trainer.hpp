#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evfusion/metrics.hpp"
#include "evfusion/model.hpp"
#include "evfusion/synth.hpp"

namespace evfusion {

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch = 4096;  // voxels per Adam step
  std::uint64_t seed = 0;
  std::size_t prototypes = 10;
  std::size_t window = 3;
  std::size_t threads = 1;
  std::size_t kmeans_sample = 10000;  // voxel features per source
  std::optional<std::size_t> modality;  // single-source ablation
  bool baseline_softmax = false;
  double softmax_init_scale = 0.01;

  // Throws ConfigError.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig load_train_config(const std::filesystem::path& path);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_dice = 0.0;
};

struct Checkpoint {
  TrainConfig config;
  std::vector<std::string> modality_names;
  ModelParams params;
  std::size_t epoch = 0;  // epoch of the stored parameters, 0 before training
  std::vector<EpochRecord> history;
};

// Per-voxel features of every modality of one case, with its labels.
struct PreparedCase {
  std::string id;
  FeatureBatch features;
  std::vector<int> labels;
  GridGeometry grid;
};

PreparedCase prepare_case(const Case& c, std::size_t classes, std::size_t window);
std::vector<PreparedCase> prepare_split(const Dataset& dataset, const std::string& split, std::size_t window);

// Initial parameters: k-means prototypes from a seeded feature subsample of
// the training cases, alpha = 0.5, gamma = 0.01, beta = 0.5 and seeded random
// memberships; or a small random softmax head.
ModelParams initialize_model(const TrainConfig& config, const SceneConfig& scene,
                             const std::vector<PreparedCase>& train);

// Mean over cases of the macro Dice over foreground classes.
double mean_case_dice(const ModelParams& params, const std::vector<PreparedCase>& cases, std::size_t threads);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Adam over shuffled voxel batches; after every epoch the validation split is
// scored and the best epoch's parameters are kept (earliest on ties).
Checkpoint train(const Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch = {});

// Checkpoint holding the initial parameters, before any step.
Checkpoint initial_checkpoint(const Dataset& dataset, const TrainConfig& config);

}  // namespace evfusion
