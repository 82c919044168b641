#pragma once

// Multi-source evidence fusion: per-source contextual discounting of contour
// functions followed by a product over sources, normalized over classes.

#include <cstddef>
#include <span>
#include <vector>

#include "evfusion/dst.hpp"

namespace evfusion {

inline constexpr double kDegenerateFusionThreshold = 1e-30;

// Products switch to log space when K * H exceeds this.
inline constexpr std::size_t kLogSpaceThreshold = 32;

struct ReliabilityMatrix {
  // beta_raw = 0 everywhere, i.e. beta = 0.5.
  ReliabilityMatrix(dst::Frame frame, std::size_t sources);

  std::size_t sources() const noexcept { return source_count; }
  std::size_t classes() const noexcept { return frame.size(); }

  double beta(std::size_t h, std::size_t k) const;
  std::vector<double> beta_row(std::size_t h) const;

  ReliabilityMatrix zeros_like() const { return ReliabilityMatrix(frame, source_count); }

  dst::Frame frame;
  std::size_t source_count;
  std::vector<double> beta_raw;  // H x K, row-major
};

struct FusedScores {
  std::vector<double> values;
};

FusedScores fuse_voxel(std::span<const dst::ContourFunction> contours, const ReliabilityMatrix& beta);

// per_source[h][n] is the contour of source h at voxel n.
std::vector<FusedScores> fuse_volume(const std::vector<std::vector<dst::ContourFunction>>& per_source,
                                     const ReliabilityMatrix& beta);

// Argmax; ties resolve to the lowest class index.
std::size_t predicted_label(std::span<const double> scores);
inline std::size_t predicted_label(const FusedScores& scores) { return predicted_label(scores.values); }

// Flat-array fusion kernel over a subset of sources, used by training.
class FusionEvaluator {
 public:
  // `active` lists the source rows of the reliability matrix that take part.
  FusionEvaluator(const ReliabilityMatrix& reliability, std::vector<std::size_t> active);

  std::size_t active_count() const noexcept { return active_.size(); }
  std::size_t classes() const noexcept { return classes_; }
  const std::vector<std::size_t>& active() const noexcept { return active_; }

  // pl and discounted are (active sources) x K, row-major. Throws
  // DegenerateFusion when the normalizing sum drops below the threshold.
  void forward(std::span<const double> pl, std::span<double> discounted, std::span<double> scores) const;

  // Given d(loss)/d(scores): writes d(loss)/d(pl) and adds d(loss)/d(beta)
  // into dbeta (full H x K layout).
  void backward(std::span<const double> pl, std::span<const double> discounted, std::span<const double> scores,
                std::span<const double> dscores, std::span<double> dpl, std::span<double> dbeta) const;

  // Chain rule through the logistic; adds into raw_grad.beta_raw.
  void to_raw(std::span<const double> dbeta, ReliabilityMatrix& raw_grad) const;

 private:
  const ReliabilityMatrix* reliability_;
  std::vector<std::size_t> active_;
  std::size_t classes_;
  std::vector<double> beta_;  // full H x K
  bool log_space_;
};

}  // namespace evfusion
