#include "evfusion/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "evfusion/adam.hpp"
#include "evfusion/error.hpp"
#include "evfusion/features.hpp"
#include "evfusion/kmeans.hpp"
#include "evfusion/loss.hpp"

namespace evfusion {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a non-negative finite number");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (prototypes < 1) throw ConfigError("prototypes must be at least 1");
  if (window < 1 || window % 2 == 0) throw ConfigError("window must be odd and positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (kmeans_sample < 1) throw ConfigError("kmeans_sample must be at least 1");
  if (!(softmax_init_scale >= 0.0)) throw ConfigError("softmax_init_scale must be non-negative");
}

TrainConfig train_config_from_json(const json& j) {
  static const std::set<std::string> known{"epochs",     "learning_rate", "beta1",         "beta2",
                                           "adam_eps",   "batch",         "seed",          "prototypes",
                                           "window",     "threads",       "kmeans_sample", "modality",
                                           "baseline_softmax", "softmax_init_scale"};
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown training config key '" + key + "'");
  }
  TrainConfig c;
  try {
    auto read = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    read("epochs", c.epochs);
    read("learning_rate", c.learning_rate);
    read("beta1", c.beta1);
    read("beta2", c.beta2);
    read("adam_eps", c.adam_eps);
    read("batch", c.batch);
    read("seed", c.seed);
    read("prototypes", c.prototypes);
    read("window", c.window);
    read("threads", c.threads);
    read("kmeans_sample", c.kmeans_sample);
    read("baseline_softmax", c.baseline_softmax);
    read("softmax_init_scale", c.softmax_init_scale);
    if (j.contains("modality") && !j.at("modality").is_null()) c.modality = j.at("modality").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid training config: ") + e.what());
  }
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"batch", c.batch},
          {"seed", c.seed},
          {"prototypes", c.prototypes},
          {"window", c.window},
          {"threads", c.threads},
          {"kmeans_sample", c.kmeans_sample},
          {"modality", c.modality ? json(*c.modality) : json(nullptr)},
          {"baseline_softmax", c.baseline_softmax},
          {"softmax_init_scale", c.softmax_init_scale}};
}

TrainConfig load_train_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open training config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("training config " + path.string() + " is not valid JSON: " + e.what());
  }
  return train_config_from_json(j);
}

PreparedCase prepare_case(const Case& c, std::size_t classes, std::size_t window) {
  PreparedCase out{c.id, {}, labels_of(c.labels, classes), c.labels.geometry()};
  for (const auto& vol : c.modalities) out.features.sources.push_back(extract_features(vol, 0, window));
  return out;
}

std::vector<PreparedCase> prepare_split(const Dataset& dataset, const std::string& split, std::size_t window) {
  std::vector<PreparedCase> out;
  for (const Case* c : dataset.split(split)) out.push_back(prepare_case(*c, dataset.scene.classes(), window));
  return out;
}

namespace {

std::vector<std::size_t> active_sources(const TrainConfig& config, std::size_t modalities) {
  if (config.modality) {
    if (*config.modality >= modalities) {
      throw ConfigError("modality " + std::to_string(*config.modality) + " out of range for " +
                        std::to_string(modalities) + " modalities");
    }
    return {*config.modality};
  }
  std::vector<std::size_t> all(modalities);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

// Rows of all cases stacked in case order.
FeatureBatch stack_features(const std::vector<PreparedCase>& cases) {
  const std::size_t sources = cases.front().features.sources.size();
  const std::size_t dim = cases.front().features.sources.front().cols();
  std::size_t total = 0;
  for (const auto& c : cases) total += c.features.voxels();
  FeatureBatch out;
  for (std::size_t h = 0; h < sources; ++h) {
    Matrix m(total, dim);
    std::size_t offset = 0;
    for (const auto& c : cases) {
      const auto& src = c.features.sources[h];
      std::copy(src.data().begin(), src.data().end(), m.data().begin() + static_cast<std::ptrdiff_t>(offset * dim));
      offset += src.rows();
    }
    out.sources.push_back(std::move(m));
  }
  return out;
}

FeatureBatch gather(const FeatureBatch& all, std::span<const std::size_t> rows) {
  FeatureBatch out;
  for (const auto& src : all.sources) {
    Matrix m(rows.size(), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = src.row(rows[i]);
      std::copy(r.begin(), r.end(), m.row(i).begin());
    }
    out.sources.push_back(std::move(m));
  }
  return out;
}

double macro_foreground_dice(std::span<const int> truth, std::span<const int> predicted, std::size_t classes) {
  double total = 0.0;
  Mask t(truth.size()), p(truth.size());
  for (std::size_t k = 1; k < classes; ++k) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      t[i] = truth[i] == static_cast<int>(k);
      p[i] = predicted[i] == static_cast<int>(k);
    }
    total += dice_score(p, t);
  }
  return total / static_cast<double>(classes - 1);
}

}  // namespace

ModelParams initialize_model(const TrainConfig& config, const SceneConfig& scene,
                             const std::vector<PreparedCase>& train) {
  config.validate();
  if (train.empty()) throw ConfigError("dataset has no training cases");
  const dst::Frame frame(scene.class_names);
  const std::size_t modalities = scene.modalities();
  auto active = active_sources(config, modalities);
  std::mt19937_64 rng(config.seed);

  if (config.baseline_softmax) {
    auto p = ModelParams::softmax(frame, modalities, kFeatureDim, std::move(active));
    std::normal_distribution<double> draw(0.0, 1.0);
    for (double& w : p.softmax_head->weights.data()) w = config.softmax_init_scale * draw(rng);
    return p;
  }

  const FeatureBatch all = stack_features(train);
  const std::size_t n = all.voxels();
  std::vector<ESParams> sources;
  for (std::size_t h = 0; h < modalities; ++h) {
    std::vector<std::size_t> rows;
    if (n <= config.kmeans_sample) {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    } else {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::sample(perm.begin(), perm.end(), std::back_inserter(rows), config.kmeans_sample, rng);
    }
    Matrix sample = gather(FeatureBatch{{all.sources[h]}}, rows).sources.front();
    Matrix protos = kmeans_init(sample, config.prototypes, rng());
    sources.push_back(ESParams::initialized(frame, std::move(protos), rng));
  }
  auto p = ModelParams::evidential(frame, std::move(sources));
  p.active = std::move(active);
  return p;
}

double mean_case_dice(const ModelParams& params, const std::vector<PreparedCase>& cases, std::size_t threads) {
  if (cases.empty()) throw ConfigError("no cases to score");
  double total = 0.0;
  for (const auto& c : cases) {
    const auto predicted = predicted_labels(predict_scores(params, c.features, threads));
    total += macro_foreground_dice(c.labels, predicted, params.classes());
  }
  return total / static_cast<double>(cases.size());
}

Checkpoint initial_checkpoint(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  const auto train_cases = prepare_split(dataset, "train", config.window);
  return {config, dataset.scene.modality_names, initialize_model(config, dataset.scene, train_cases), 0, {}};
}

Checkpoint train(const Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto train_cases = prepare_split(dataset, "train", config.window);
  const auto val_cases = prepare_split(dataset, "val", config.window);
  if (train_cases.empty()) throw ConfigError("dataset has no training cases");
  if (val_cases.empty()) throw ConfigError("dataset has no validation cases");

  ModelParams params = initialize_model(config, dataset.scene, train_cases);
  const FeatureBatch all = stack_features(train_cases);
  std::vector<int> all_labels;
  for (const auto& c : train_cases) all_labels.insert(all_labels.end(), c.labels.begin(), c.labels.end());

  Adam adam(params.parameter_count(), {config.learning_rate, config.beta1, config.beta2, config.adam_eps});
  std::seed_seq shuffle_seed{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                             0x5eedu};
  std::mt19937_64 shuffle_rng(shuffle_seed);

  Checkpoint best{config, dataset.scene.modality_names, params, 0, {}};
  double best_dice = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(all.voxels());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> batch_labels;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch, ++steps) {
      const std::span<const std::size_t> rows(order.data() + begin, std::min(config.batch, order.size() - begin));
      batch_labels.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) batch_labels[i] = all_labels[rows[i]];
      const std::string where = "epoch " + std::to_string(epoch) + " step " + std::to_string(steps + 1);
      const LossAndGradient lg = [&] {
        try {
          return backward(params, gather(all, rows), GroundTruth(params.classes(), batch_labels), config.threads);
        } catch (const DegenerateFusion& e) {
          throw DegenerateFusion(where + ": " + e.what(), e.voxel());
        } catch (const TotalConflict& e) {
          throw TotalConflict(where + ": " + e.what());
        }
      }();
      if (!std::isfinite(lg.loss)) throw NumericalError("non-finite loss at " + where);
      auto flat = params.flatten();
      adam.step(flat, lg.gradient.flatten());
      params.assign(flat);
      loss_sum += lg.loss;
    }

    EpochRecord record{epoch, loss_sum / static_cast<double>(steps), mean_case_dice(params, val_cases, config.threads)};
    best.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (record.val_dice > best_dice) {
      best_dice = record.val_dice;
      best.params = params;
      best.epoch = epoch;
    }
  }
  return best;
}

}  // namespace evfusion
