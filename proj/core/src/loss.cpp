#include "evfusion/loss.hpp"

#include <cmath>

#include "evfusion/error.hpp"
#include "evfusion/parallel.hpp"

namespace evfusion {

GroundTruth::GroundTruth(std::size_t classes, std::vector<int> labels_)
    : class_count(classes), labels(std::move(labels_)) {
  if (classes == 0) throw InvalidArgument("ground truth needs at least one class");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) {
      throw InvalidArgument("label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

namespace {

struct DiceSums {
  std::vector<double> overlap;    // sum_n S_nc G_nc
  std::vector<double> predicted;  // sum_n S_nc
  std::vector<double> truth;      // sum_n G_nc
};

void check_shapes(const Matrix& scores, const GroundTruth& gt) {
  if (scores.rows() == 0) throw InvalidArgument("Dice loss needs at least one voxel");
  if (scores.rows() != gt.size() || scores.cols() != gt.classes()) {
    throw InvalidArgument("score matrix " + std::to_string(scores.rows()) + "x" + std::to_string(scores.cols()) +
                          " does not match ground truth " + std::to_string(gt.size()) + "x" +
                          std::to_string(gt.classes()));
  }
}

DiceSums dice_sums(const Matrix& scores, const GroundTruth& gt) {
  const std::size_t n = scores.rows();
  const std::size_t k_count = scores.cols();
  const std::size_t chunks = chunk_count(n, kDefaultChunk);
  // partial[c][chunk]
  std::vector<std::vector<double>> overlap(k_count, std::vector<double>(chunks, 0.0));
  std::vector<std::vector<double>> predicted(k_count, std::vector<double>(chunks, 0.0));
  std::vector<std::vector<double>> truth(k_count, std::vector<double>(chunks, 0.0));
  for_each_chunk(n, kDefaultChunk, 1, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto s = scores.row(i);
      const auto label = static_cast<std::size_t>(gt.labels[i]);
      for (std::size_t k = 0; k < k_count; ++k) predicted[k][chunk] += s[k];
      overlap[label][chunk] += s[label];
      truth[label][chunk] += 1.0;
    }
  });
  DiceSums sums;
  for (std::size_t k = 0; k < k_count; ++k) {
    sums.overlap.push_back(pairwise_sum(overlap[k]));
    sums.predicted.push_back(pairwise_sum(predicted[k]));
    sums.truth.push_back(pairwise_sum(truth[k]));
  }
  return sums;
}

double dice_loss_from_sums(const DiceSums& sums) {
  const std::size_t k_count = sums.overlap.size();
  double total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    total += 1.0 - 2.0 * sums.overlap[k] / (sums.predicted[k] + sums.truth[k] + kDiceSmoothing);
  }
  return total / static_cast<double>(k_count);
}

// dL/dS_nk = a_k G_nk + b_k
struct ScoreGradient {
  std::vector<double> on_label;
  std::vector<double> constant;

  double at(std::size_t k, bool is_label) const { return (is_label ? on_label[k] : 0.0) + constant[k]; }
};

ScoreGradient score_gradient(const DiceSums& sums) {
  const std::size_t k_count = sums.overlap.size();
  const double inv_k = 1.0 / static_cast<double>(k_count);
  ScoreGradient g{std::vector<double>(k_count), std::vector<double>(k_count)};
  for (std::size_t k = 0; k < k_count; ++k) {
    const double den = sums.predicted[k] + sums.truth[k] + kDiceSmoothing;
    g.on_label[k] = -2.0 * inv_k / den;
    g.constant[k] = 2.0 * inv_k * sums.overlap[k] / (den * den);
  }
  return g;
}

void backward_evidential(const ModelParams& params, const FeatureBatch& batch, const GroundTruth& gt,
                         const ScoreGradient& dscore, std::size_t threads, GradientBundle& grad) {
  const std::size_t n = batch.voxels();
  const std::size_t k_count = params.classes();
  const std::size_t active = params.active.size();

  std::vector<ESEvaluator> layers;
  for (const auto& s : params.sources) layers.emplace_back(s);
  const FusionEvaluator fusion(*params.reliability, params.active);

  struct Accumulator {
    std::vector<ESDerivedGrad> layers;
    std::vector<double> dbeta;
  };
  const std::size_t chunks = chunk_count(n, kDefaultChunk);
  std::vector<Accumulator> acc;
  acc.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    Accumulator a;
    for (std::size_t h : params.active) a.layers.emplace_back(params.sources[h]);
    a.dbeta.assign(params.reliability->beta_raw.size(), 0.0);
    acc.push_back(std::move(a));
  }

  for_each_chunk(n, kDefaultChunk, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    auto& local = acc[chunk];
    std::vector<ESEvaluator::Workspace> ws;
    for (std::size_t h : params.active) ws.push_back(layers[h].make_workspace());
    std::vector<double> pl(active * k_count), discounted(active * k_count), dpl(active * k_count);
    std::vector<double> scores(k_count), ds(k_count);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t a = 0; a < active; ++a) {
        const std::size_t h = params.active[a];
        layers[h].contour(batch.sources[h].row(i), ws[a], std::span(pl).subspan(a * k_count, k_count));
      }
      try {
        fusion.forward(pl, discounted, scores);
      } catch (const DegenerateFusion& e) {
        throw DegenerateFusion(std::string(e.what()) + " at voxel " + std::to_string(i), i);
      }
      const auto label = static_cast<std::size_t>(gt.labels[i]);
      for (std::size_t k = 0; k < k_count; ++k) ds[k] = dscore.at(k, k == label);
      fusion.backward(pl, discounted, scores, ds, dpl, local.dbeta);
      for (std::size_t a = 0; a < active; ++a) {
        const std::size_t h = params.active[a];
        layers[h].backward(batch.sources[h].row(i), std::span(dpl).subspan(a * k_count, k_count), ws[a],
                           local.layers[a]);
      }
    }
  });

  // Ordered reduction over chunks.
  Accumulator total = std::move(acc.front());
  for (std::size_t c = 1; c < chunks; ++c) {
    for (std::size_t a = 0; a < active; ++a) total.layers[a].add(acc[c].layers[a]);
    for (std::size_t i = 0; i < total.dbeta.size(); ++i) total.dbeta[i] += acc[c].dbeta[i];
  }
  for (std::size_t a = 0; a < active; ++a) {
    const std::size_t h = params.active[a];
    layers[h].to_raw(total.layers[a], grad.sources[h]);
  }
  fusion.to_raw(total.dbeta, *grad.reliability);
}

void backward_softmax(const ModelParams& params, const FeatureBatch& batch, const GroundTruth& gt,
                      const Matrix& scores, const ScoreGradient& dscore, std::size_t threads,
                      GradientBundle& grad) {
  const std::size_t n = batch.voxels();
  const std::size_t k_count = params.classes();
  const auto& head = *params.softmax_head;
  const std::size_t inputs = head.inputs();
  const std::size_t chunks = chunk_count(n, kDefaultChunk);
  std::vector<Matrix> dweights(chunks, Matrix(k_count, inputs));
  std::vector<std::vector<double>> dbias(chunks, std::vector<double>(k_count, 0.0));

  for_each_chunk(n, kDefaultChunk, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    std::vector<double> x(inputs), dz(k_count);
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t f = 0;
      for (std::size_t h : params.active) {
        for (double v : batch.sources[h].row(i)) x[f++] = v;
      }
      const auto s = scores.row(i);
      const auto label = static_cast<std::size_t>(gt.labels[i]);
      double inner = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) inner += s[k] * dscore.at(k, k == label);
      for (std::size_t k = 0; k < k_count; ++k) {
        dz[k] = s[k] * (dscore.at(k, k == label) - inner);
        dbias[chunk][k] += dz[k];
        auto row = dweights[chunk].row(k);
        for (std::size_t j = 0; j < inputs; ++j) row[j] += dz[k] * x[j];
      }
    }
  });
  auto& out = *grad.softmax_head;
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t i = 0; i < out.weights.size(); ++i) out.weights.data()[i] += dweights[c].data()[i];
    for (std::size_t k = 0; k < k_count; ++k) out.bias[k] += dbias[c][k];
  }
}

}  // namespace

double discounted_dice_loss(const Matrix& scores, const GroundTruth& gt) {
  check_shapes(scores, gt);
  return dice_loss_from_sums(dice_sums(scores, gt));
}

double loss_value(const ModelParams& params, const FeatureBatch& batch, const GroundTruth& gt,
                  std::size_t threads) {
  return discounted_dice_loss(predict_scores(params, batch, threads), gt);
}

LossAndGradient backward(const ModelParams& params, const FeatureBatch& batch, const GroundTruth& gt,
                         std::size_t threads) {
  if (gt.classes() != params.classes()) throw InvalidArgument("ground truth class count does not match model");
  const Matrix scores = predict_scores(params, batch, threads);
  check_shapes(scores, gt);
  const DiceSums sums = dice_sums(scores, gt);
  const ScoreGradient dscore = score_gradient(sums);

  LossAndGradient out{dice_loss_from_sums(sums), params.zeros_like()};
  if (params.is_evidential()) {
    backward_evidential(params, batch, gt, dscore, threads, out.gradient);
  } else {
    backward_softmax(params, batch, gt, scores, dscore, threads, out.gradient);
  }
  return out;
}

}  // namespace evfusion
