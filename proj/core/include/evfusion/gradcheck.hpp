#pragma once

// Central finite-difference verification of analytic gradients.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "evfusion/loss.hpp"
#include "evfusion/model.hpp"

namespace evfusion {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

// Relative error |a - n| / max(|a|, |n|) per coordinate; coordinates whose
// absolute difference is at most abs_floor count as exact.
GradCheckResult finite_diff_check(const std::function<double(std::span<const double>)>& f,
                                  std::span<const double> analytic, std::vector<double> point, double step,
                                  double abs_floor = 1e-10);

GradCheckResult finite_diff_check(const ModelParams& params, const FeatureBatch& batch, const GroundTruth& gt,
                                  double step, double abs_floor = 1e-10);

struct GradCheckShape {
  std::size_t voxels = 20;
  std::size_t classes = 3;
  std::size_t sources = 2;
  std::size_t prototypes = 3;
  std::size_t dim = 2;
  bool softmax = false;
};

struct GradCheckInstance {
  ModelParams params;
  FeatureBatch batch;
  GroundTruth gt;
};

// Random parameters and features with activations well inside (0, 1).
GradCheckInstance random_gradcheck_instance(const GradCheckShape& shape, std::uint64_t seed);

struct GradCheckCase {
  GradCheckShape shape;
  std::uint64_t seed = 0;
  GradCheckResult result;
};

// `count` random evidential configurations with K in {2,3,4}, H in {1,2,3},
// I in {1,3,5} and d in {1,2,3}, each checked with the given step.
std::vector<GradCheckCase> gradcheck_sweep(std::uint64_t seed, std::size_t count = 50, double step = 1e-5,
                                           double abs_floor = 1e-10);

}  // namespace evfusion
