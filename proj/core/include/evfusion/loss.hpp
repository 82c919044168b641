#pragma once

// Discounted Dice loss over normalized fused scores and its exact gradient
// with respect to every raw model parameter.
//
// Per class c:  L_c = 1 - 2 sum_n S_nc G_nc / (sum_n S_nc + sum_n G_nc + eps)
// and the loss is the mean of L_c over all K classes.

#include <cstddef>
#include <span>
#include <vector>

#include "evfusion/matrix.hpp"
#include "evfusion/model.hpp"

namespace evfusion {

inline constexpr double kDiceSmoothing = 1e-6;

struct GroundTruth {
  GroundTruth(std::size_t classes, std::vector<int> labels);

  std::size_t classes() const noexcept { return class_count; }
  std::size_t size() const noexcept { return labels.size(); }
  double one_hot(std::size_t n, std::size_t k) const { return labels[n] == static_cast<int>(k) ? 1.0 : 0.0; }

  std::size_t class_count;
  std::vector<int> labels;
};

double discounted_dice_loss(const Matrix& scores, const GroundTruth& gt);

struct LossAndGradient {
  double loss;
  GradientBundle gradient;
};

// Forward and reverse pass over the batch. Voxels are processed in fixed
// chunks and partial sums reduced in chunk order, so the result does not
// depend on the thread count.
LossAndGradient backward(const ModelParams& params, const FeatureBatch& batch, const GroundTruth& gt,
                         std::size_t threads = 1);

double loss_value(const ModelParams& params, const FeatureBatch& batch, const GroundTruth& gt,
                  std::size_t threads = 1);

}  // namespace evfusion
