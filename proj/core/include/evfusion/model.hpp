#pragma once

// Full parameter set of a segmentation head over H feature sources, and the
// batched forward pass producing per-voxel class scores.
//
// Two kinds of head share this container:
//   evidential: one ES layer per source, fused by contextual discounting;
//   softmax:    a linear layer over the concatenated source features.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evfusion/dst.hpp"
#include "evfusion/es_layer.hpp"
#include "evfusion/matrix.hpp"
#include "evfusion/mmef.hpp"

namespace evfusion {

struct SoftmaxHead {
  SoftmaxHead(dst::Frame frame, std::size_t inputs);

  std::size_t classes() const noexcept { return weights.rows(); }
  std::size_t inputs() const noexcept { return weights.cols(); }

  dst::Frame frame;
  Matrix weights;            // K x F
  std::vector<double> bias;  // K
};

// Per-voxel features for each source; every matrix is N x d.
struct FeatureBatch {
  std::vector<Matrix> sources;

  std::size_t voxels() const noexcept { return sources.empty() ? 0 : sources.front().rows(); }
  void validate() const;
};

struct ParamBlock {
  std::string name;
  std::span<double> values;
};

struct ConstParamBlock {
  std::string name;
  std::span<const double> values;
};

struct ModelParams {
  static ModelParams evidential(dst::Frame frame, std::vector<ESParams> sources);
  static ModelParams softmax(dst::Frame frame, std::size_t sources, std::size_t feature_dim,
                             std::vector<std::size_t> active);

  bool is_evidential() const noexcept { return reliability.has_value(); }
  std::size_t classes() const noexcept { return frame.size(); }
  std::size_t source_count() const noexcept { return modalities; }

  // Zero-valued parameter set with identical shapes; used as the gradient carrier.
  ModelParams zeros_like() const;

  // Every trainable array in a fixed order.
  std::vector<ParamBlock> blocks();
  std::vector<ConstParamBlock> blocks() const;
  std::size_t parameter_count() const;

  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  dst::Frame frame;
  std::size_t modalities = 0;
  std::size_t feature_dim = 0;
  std::vector<ESParams> sources = {};
  std::optional<ReliabilityMatrix> reliability = std::nullopt;
  std::optional<SoftmaxHead> softmax_head = std::nullopt;
  std::vector<std::size_t> active = {};  // sources taking part in the forward pass
};

using GradientBundle = ModelParams;

// N x K matrix of normalized class scores.
Matrix predict_scores(const ModelParams& params, const FeatureBatch& batch, std::size_t threads = 1);

// Contour of every active source at every voxel, through the typed per-voxel
// API (es_forward -> contour -> fuse_voxel). Slow; used for cross-checks.
Matrix predict_scores_reference(const ModelParams& params, const FeatureBatch& batch);

std::vector<int> predicted_labels(const Matrix& scores);

}  // namespace evfusion
