#include "evfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evfusion/error.hpp"
#include "evfusion/mmef.hpp"

namespace evfusion {

double dice_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) {
    throw InvalidArgument("mask lengths differ: " + std::to_string(pred.size()) + " vs " + std::to_string(gt.size()));
  }
  std::size_t p = 0, g = 0, both = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0;
    const bool b = gt[i] != 0;
    p += a;
    g += b;
    both += a && b;
  }
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

namespace {

struct Point {
  double x, y, z;
};

Point center(std::size_t index, const GridGeometry& grid) {
  const std::size_t x = index % grid.dims[0];
  const std::size_t y = (index / grid.dims[0]) % grid.dims[1];
  const std::size_t z = index / (grid.dims[0] * grid.dims[1]);
  return {static_cast<double>(x) * grid.spacing[0], static_cast<double>(y) * grid.spacing[1],
          static_cast<double>(z) * grid.spacing[2]};
}

double distance2(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Voxels of the mask with a 6-neighbour outside it, the grid exterior counting
// as outside. For a point outside the mask, the nearest mask voxel is always
// one of these.
std::vector<std::size_t> boundary(std::span<const std::uint8_t> mask, const GridGeometry& grid) {
  const auto [nx, ny, nz] = grid.dims;
  std::vector<std::size_t> out;
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t i = (z * ny + y) * nx + x;
        if (!mask[i]) continue;
        const bool edge = x == 0 || x + 1 == nx || y == 0 || y + 1 == ny || z == 0 || z + 1 == nz ||
                          !mask[i - 1] || !mask[i + 1] || !mask[i - nx] || !mask[i + nx] ||
                          !mask[i - nx * ny] || !mask[i + nx * ny];
        if (edge) out.push_back(i);
      }
    }
  }
  return out;
}

double nearest(const Point& p, const std::vector<Point>& targets, double stop_below) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : targets) {
    best = std::min(best, distance2(p, t));
    if (best <= stop_below) break;
  }
  return best;
}

std::vector<Point> points(const std::vector<std::size_t>& idx, const GridGeometry& grid) {
  std::vector<Point> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(center(i, grid));
  return out;
}

// Directed distance from every voxel of `from` to the set `to`, squared.
double directed_max(std::span<const std::uint8_t> from, std::span<const std::uint8_t> to,
                    const std::vector<Point>& to_boundary, const GridGeometry& grid) {
  double worst = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (!from[i] || to[i]) continue;
    worst = std::max(worst, nearest(center(i, grid), to_boundary, worst));
  }
  return worst;
}

double directed_percentile(const std::vector<std::size_t>& from_boundary, std::span<const std::uint8_t> to,
                           const std::vector<Point>& to_boundary, const GridGeometry& grid, double q) {
  std::vector<double> d;
  d.reserve(from_boundary.size());
  for (auto i : from_boundary) d.push_back(to[i] ? 0.0 : nearest(center(i, grid), to_boundary, 0.0));
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(d.size())));
  const std::size_t k = std::clamp<std::size_t>(rank, 1, d.size()) - 1;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  return d[k];
}

}  // namespace

double hausdorff(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, const GridGeometry& grid,
                 HausdorffMode mode) {
  if (pred.size() != grid.voxels() || gt.size() != grid.voxels()) {
    throw InvalidArgument("mask sizes do not match the grid");
  }
  const bool pred_any = std::any_of(pred.begin(), pred.end(), [](auto v) { return v != 0; });
  const bool gt_any = std::any_of(gt.begin(), gt.end(), [](auto v) { return v != 0; });
  if (!pred_any || !gt_any) throw EmptyMask(!pred_any ? "predicted mask is empty" : "ground-truth mask is empty");

  const auto pred_edge = boundary(pred, grid);
  const auto gt_edge = boundary(gt, grid);
  const auto pred_pts = points(pred_edge, grid);
  const auto gt_pts = points(gt_edge, grid);

  if (mode == HausdorffMode::exact) {
    const double a = directed_max(pred, gt, gt_pts, grid);
    const double b = directed_max(gt, pred, pred_pts, grid);
    return std::sqrt(std::max(a, b));
  }
  const double a = directed_percentile(pred_edge, gt, gt_pts, grid, 0.95);
  const double b = directed_percentile(gt_edge, pred, pred_pts, grid, 0.95);
  return std::sqrt(std::max(a, b));
}

double ece(std::span<const double> confidence, std::span<const std::uint8_t> correct, std::size_t bins) {
  if (bins == 0) throw InvalidArgument("ECE needs at least one bin");
  if (confidence.size() != correct.size()) throw InvalidArgument("confidence and correctness lengths differ");
  if (confidence.empty()) return 0.0;
  std::vector<double> conf_sum(bins, 0.0), hits(bins, 0.0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double c = std::clamp(confidence[i], 0.0, 1.0);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(c * static_cast<double>(bins)));
    conf_sum[b] += c;
    hits[b] += correct[i] ? 1.0 : 0.0;
  }
  // sum_b (n_b / N) |acc_b - conf_b| = sum_b |hits_b - conf_sum_b| / N
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) total += std::abs(hits[b] - conf_sum[b]);
  return total / static_cast<double>(confidence.size());
}

double ece(const Matrix& scores, std::span<const int> labels, std::size_t bins) {
  if (scores.rows() != labels.size()) throw InvalidArgument("score rows and label count differ");
  std::vector<double> confidence(scores.rows());
  std::vector<std::uint8_t> correct(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    const std::size_t k = predicted_label(row);
    confidence[i] = row[k];
    correct[i] = static_cast<int>(k) == labels[i];
  }
  return ece(confidence, correct, bins);
}

}  // namespace evfusion
