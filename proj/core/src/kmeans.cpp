#include "evfusion/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace evfusion {

namespace {

// Indices of the first occurrence of each distinct row, in row order.
std::vector<std::size_t> distinct_rows(const Matrix& m) {
  std::vector<std::size_t> order(m.rows());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = m.row(a);
    const auto rb = m.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::stable_sort(order.begin(), order.end(), less);
  std::vector<std::size_t> firsts;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || less(order[i - 1], order[i])) firsts.push_back(order[i]);
  }
  std::sort(firsts.begin(), firsts.end());
  return firsts;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    d += t * t;
  }
  return d;
}

}  // namespace

Matrix kmeans_init(const Matrix& sample, std::size_t count, std::uint64_t seed, const KMeansOptions& options) {
  if (count == 0) throw InvalidArgument("k-means needs at least one center");
  if (sample.rows() < count) {
    throw InvalidArgument("k-means sample has " + std::to_string(sample.rows()) + " points, fewer than " +
                          std::to_string(count) + " centers");
  }
  const std::size_t dim = sample.cols();

  std::vector<std::size_t> candidates = distinct_rows(sample);
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);

  Matrix centers(count, dim);
  for (std::size_t c = 0; c < count; ++c) {
    // Fewer distinct points than centers: reuse them; the duplicates stay put.
    const auto src = sample.row(candidates[c % candidates.size()]);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
  }

  std::vector<std::size_t> assignment(sample.rows(), 0);
  Matrix sums(count, dim);
  std::vector<std::size_t> members(count);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    for (std::size_t n = 0; n < sample.rows(); ++n) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < count; ++c) {
        const double d = squared_distance(sample.row(n), centers.row(c));
        if (d < best) {
          best = d;
          assignment[n] = c;
        }
      }
    }
    std::fill(sums.data().begin(), sums.data().end(), 0.0);
    std::fill(members.begin(), members.end(), 0);
    for (std::size_t n = 0; n < sample.rows(); ++n) {
      auto acc = sums.row(assignment[n]);
      const auto x = sample.row(n);
      for (std::size_t j = 0; j < dim; ++j) acc[j] += x[j];
      ++members[assignment[n]];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < count; ++c) {
      if (members[c] == 0) continue;
      auto center = centers.row(c);
      double shift = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double updated = sums(c, j) / static_cast<double>(members[c]);
        shift += (updated - center[j]) * (updated - center[j]);
        center[j] = updated;
      }
      movement = std::max(movement, std::sqrt(shift));
    }
    if (movement < options.tolerance) break;
  }
  return centers;
}

}  // namespace evfusion
