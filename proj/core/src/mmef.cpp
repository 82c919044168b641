#include "evfusion/mmef.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evfusion/error.hpp"
#include "evfusion/es_layer.hpp"

namespace evfusion {

namespace {

const double kLogDegenerate = std::log(kDegenerateFusionThreshold);

// Normalizes the class products held in `values` (or their logs) in place.
void normalize_products(std::span<double> values, bool log_space) {
  if (log_space) {
    const double top = *std::max_element(values.begin(), values.end());
    if (top == -std::numeric_limits<double>::infinity()) {
      throw DegenerateFusion("all discounted contour products vanish");
    }
    double total = 0.0;
    for (double& v : values) {
      v = std::exp(v - top);
      total += v;
    }
    if (top + std::log(total) < kLogDegenerate) throw DegenerateFusion("all discounted contour products vanish");
    for (double& v : values) v /= total;
  } else {
    double total = 0.0;
    for (double v : values) total += v;
    if (!(total >= kDegenerateFusionThreshold)) throw DegenerateFusion("all discounted contour products vanish");
    for (double& v : values) v /= total;
  }
}

}  // namespace

ReliabilityMatrix::ReliabilityMatrix(dst::Frame frame_, std::size_t sources)
    : frame(std::move(frame_)), source_count(sources), beta_raw(sources * frame.size(), 0.0) {
  if (sources == 0) throw InvalidArgument("reliability matrix needs at least one source");
}

double ReliabilityMatrix::beta(std::size_t h, std::size_t k) const {
  if (h >= source_count || k >= classes()) throw InvalidArgument("reliability index out of range");
  return logistic(beta_raw[h * classes() + k]);
}

std::vector<double> ReliabilityMatrix::beta_row(std::size_t h) const {
  std::vector<double> row(classes());
  for (std::size_t k = 0; k < row.size(); ++k) row[k] = beta(h, k);
  return row;
}

FusedScores fuse_voxel(std::span<const dst::ContourFunction> contours, const ReliabilityMatrix& beta) {
  if (contours.empty()) throw InvalidArgument("fusion needs at least one source");
  if (contours.size() != beta.sources()) {
    throw InvalidArgument("got " + std::to_string(contours.size()) + " contours for a reliability matrix with " +
                          std::to_string(beta.sources()) + " sources");
  }
  const std::size_t k_count = beta.classes();
  const bool log_space = k_count * contours.size() > kLogSpaceThreshold;
  std::vector<double> values(k_count, log_space ? 0.0 : 1.0);
  for (std::size_t h = 0; h < contours.size(); ++h) {
    if (!(contours[h].frame() == beta.frame)) throw InvalidArgument("contour frame differs from reliability frame");
    const auto discounted = dst::contextual_discount_contour(contours[h], beta.beta_row(h));
    for (std::size_t k = 0; k < k_count; ++k) {
      if (log_space) {
        values[k] += std::log(discounted[k]);
      } else {
        values[k] *= discounted[k];
      }
    }
  }
  normalize_products(values, log_space);
  return FusedScores{std::move(values)};
}

std::vector<FusedScores> fuse_volume(const std::vector<std::vector<dst::ContourFunction>>& per_source,
                                     const ReliabilityMatrix& beta) {
  if (per_source.size() != beta.sources()) throw InvalidArgument("source count does not match reliability matrix");
  const std::size_t n = per_source.empty() ? 0 : per_source.front().size();
  for (const auto& s : per_source) {
    if (s.size() != n) throw InvalidArgument("sources disagree on voxel count");
  }
  std::vector<FusedScores> out;
  out.reserve(n);
  std::vector<dst::ContourFunction> voxel;
  voxel.reserve(per_source.size());
  for (std::size_t i = 0; i < n; ++i) {
    voxel.clear();
    for (const auto& s : per_source) voxel.push_back(s[i]);
    try {
      out.push_back(fuse_voxel(voxel, beta));
    } catch (const DegenerateFusion& e) {
      throw DegenerateFusion(std::string(e.what()) + " at voxel " + std::to_string(i), i);
    }
  }
  return out;
}

std::size_t predicted_label(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("empty score vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

// ---------------------------------------------------------------------------

FusionEvaluator::FusionEvaluator(const ReliabilityMatrix& reliability, std::vector<std::size_t> active)
    : reliability_(&reliability),
      active_(std::move(active)),
      classes_(reliability.classes()),
      beta_(reliability.beta_raw.size()) {
  if (active_.empty()) throw InvalidArgument("fusion needs at least one active source");
  for (std::size_t h : active_) {
    if (h >= reliability.sources()) throw InvalidArgument("active source index out of range");
  }
  for (std::size_t i = 0; i < beta_.size(); ++i) beta_[i] = logistic(reliability.beta_raw[i]);
  log_space_ = classes_ * active_.size() > kLogSpaceThreshold;
}

void FusionEvaluator::forward(std::span<const double> pl, std::span<double> discounted,
                              std::span<double> scores) const {
  std::fill(scores.begin(), scores.end(), log_space_ ? 0.0 : 1.0);
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const double* b = beta_.data() + active_[a] * classes_;
    for (std::size_t k = 0; k < classes_; ++k) {
      const double c = 1.0 - b[k] + b[k] * pl[a * classes_ + k];
      discounted[a * classes_ + k] = c;
      if (log_space_) {
        scores[k] += std::log(c);
      } else {
        scores[k] *= c;
      }
    }
  }
  normalize_products(scores, log_space_);
}

void FusionEvaluator::backward(std::span<const double> pl, std::span<const double> discounted,
                               std::span<const double> scores, std::span<const double> dscores,
                               std::span<double> dpl, std::span<double> dbeta) const {
  // S = softmax(log F): d log F_k = S_k (dS_k - <S, dS>).
  double inner = 0.0;
  for (std::size_t k = 0; k < classes_; ++k) inner += scores[k] * dscores[k];
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const std::size_t row = active_[a] * classes_;
    for (std::size_t k = 0; k < classes_; ++k) {
      const double dlog = scores[k] * (dscores[k] - inner);
      const double dc = dlog / discounted[a * classes_ + k];
      dbeta[row + k] += dc * (pl[a * classes_ + k] - 1.0);
      dpl[a * classes_ + k] = dc * beta_[row + k];
    }
  }
}

void FusionEvaluator::to_raw(std::span<const double> dbeta, ReliabilityMatrix& raw_grad) const {
  for (std::size_t h : active_) {
    for (std::size_t k = 0; k < classes_; ++k) {
      const std::size_t i = h * classes_ + k;
      raw_grad.beta_raw[i] += dbeta[i] * beta_[i] * (1.0 - beta_[i]);
    }
  }
}

}  // namespace evfusion
