#include "evfusion/gradcheck.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "evfusion/error.hpp"

namespace evfusion {

GradCheckResult finite_diff_check(const std::function<double(std::span<const double>)>& f,
                                  std::span<const double> analytic, std::vector<double> point, double step,
                                  double abs_floor) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  if (analytic.size() != point.size()) throw InvalidArgument("gradient and point sizes differ");
  GradCheckResult result;
  result.coordinates = point.size();
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + step;
    const double up = f(point);
    point[i] = saved - step;
    const double down = f(point);
    point[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double diff = std::abs(numeric - analytic[i]);
    double rel = 0.0;
    if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
      rel = std::numeric_limits<double>::infinity();
    } else if (diff > abs_floor) {
      rel = diff / std::max(std::abs(numeric), std::abs(analytic[i]));
    }
    if (i == 0 || rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = i;
      result.worst_analytic = analytic[i];
      result.worst_numeric = numeric;
    }
  }
  return result;
}

GradCheckResult finite_diff_check(const ModelParams& params, const FeatureBatch& batch, const GroundTruth& gt,
                                  double step, double abs_floor) {
  const auto analytic = backward(params, batch, gt).gradient.flatten();
  ModelParams probe = params;
  auto f = [&](std::span<const double> point) {
    probe.assign(point);
    return loss_value(probe, batch, gt);
  };
  return finite_diff_check(f, analytic, params.flatten(), step, abs_floor);
}

GradCheckInstance random_gradcheck_instance(const GradCheckShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> symmetric(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto frame = dst::Frame::indexed(shape.classes);
  FeatureBatch batch;
  for (std::size_t h = 0; h < shape.sources; ++h) {
    Matrix x(shape.voxels, shape.dim);
    for (double& v : x.data()) v = unit(rng);
    batch.sources.push_back(std::move(x));
  }
  std::vector<int> labels(shape.voxels);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(shape.classes) - 1);
  for (int& l : labels) l = pick(rng);

  if (shape.softmax) {
    std::vector<std::size_t> active(shape.sources);
    for (std::size_t h = 0; h < shape.sources; ++h) active[h] = h;
    auto params = ModelParams::softmax(frame, shape.sources, shape.dim, std::move(active));
    for (double& w : params.softmax_head->weights.data()) w = normal(rng);
    for (double& b : params.softmax_head->bias) b = 0.5 * normal(rng);
    return {std::move(params), std::move(batch), GroundTruth(shape.classes, std::move(labels))};
  }

  std::vector<ESParams> sources;
  for (std::size_t h = 0; h < shape.sources; ++h) {
    ESParams p(frame, shape.prototypes, shape.dim);
    for (double& v : p.prototypes.data()) v = unit(rng);
    for (double& v : p.alpha_raw) v = normal(rng);
    // |eta| in [0.5, 2]: gamma in [0.25, 4], random sign.
    for (double& v : p.gamma_raw) v = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 1.5 * unit(rng));
    for (double& v : p.membership_raw) v = symmetric(rng);
    sources.push_back(std::move(p));
  }
  auto params = ModelParams::evidential(frame, std::move(sources));
  for (double& v : params.reliability->beta_raw) v = normal(rng);
  return {std::move(params), std::move(batch), GroundTruth(shape.classes, std::move(labels))};
}

std::vector<GradCheckCase> gradcheck_sweep(std::uint64_t seed, std::size_t count, double step, double abs_floor) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::initializer_list<std::size_t> options) {
    return *(options.begin() + std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng));
  };
  std::vector<GradCheckCase> out;
  for (std::size_t c = 0; c < count; ++c) {
    GradCheckCase entry;
    entry.shape.classes = pick({2, 3, 4});
    entry.shape.sources = pick({1, 2, 3});
    entry.shape.prototypes = pick({1, 3, 5});
    entry.shape.dim = pick({1, 2, 3});
    entry.seed = rng();
    const auto inst = random_gradcheck_instance(entry.shape, entry.seed);
    entry.result = finite_diff_check(inst.params, inst.batch, inst.gt, step, abs_floor);
    out.push_back(entry);
  }
  return out;
}

}  // namespace evfusion
