#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evfusion/matrix.hpp"
#include "evfusion/metrics.hpp"
#include "evfusion/regions.hpp"
#include "evfusion/trainer.hpp"

namespace evfusion {

inline constexpr std::size_t kEceBins = 10;

// Case-averaged scores for one class or region. Hausdorff values average only
// over cases where both masks are non-empty; the others are counted.
struct RegionScore {
  std::string name;
  double dice = 0.0;
  std::optional<double> hausdorff;
  std::optional<double> hd95;
  std::size_t hd_excluded = 0;
};

struct CaseScore {
  std::string id;
  std::vector<double> dice;                     // per foreground class
  std::vector<std::optional<double>> hausdorff;  // per foreground class
  double macro_dice = 0.0;
};

struct MetricsReport {
  std::string split;
  std::size_t case_count = 0;
  std::vector<RegionScore> classes;  // foreground classes 1..K-1
  std::vector<RegionScore> regions;  // nested regions, when a scheme is given
  double macro_dice = 0.0;           // mean of classes[].dice
  std::optional<double> macro_hausdorff;  // mean of the defined classes[].hausdorff
  double ece = 0.0;                  // top-label ECE over all voxels
  std::size_t voxels = 0;
  std::vector<CaseScore> cases;
};

struct CasePrediction {
  std::string id;
  std::vector<int> truth;
  std::vector<int> predicted;
  Matrix scores;  // N x K
  GridGeometry grid;
};

MetricsReport evaluate_predictions(const std::vector<CasePrediction>& cases,
                                   const std::vector<std::string>& class_names,
                                   const RegionScheme& regions = {});

MetricsReport evaluate(const Checkpoint& checkpoint, const Dataset& dataset, const std::string& split,
                       std::size_t threads = 1);

// Per-case scores and labels from a model; the split must not be empty.
std::vector<CasePrediction> predict_split(const ModelParams& params, const std::vector<PreparedCase>& cases,
                                          std::size_t threads = 1);

nlohmann::json report_to_json(const MetricsReport& report);
std::string report_to_table(const MetricsReport& report);

// Learned beta for every source and class; throws ConfigError for a
// checkpoint without a reliability matrix.
nlohmann::json reliability_to_json(const Checkpoint& checkpoint);
std::string reliability_to_table(const Checkpoint& checkpoint);

}  // namespace evfusion
