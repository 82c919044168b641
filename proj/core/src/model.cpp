#include "evfusion/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evfusion/error.hpp"
#include "evfusion/parallel.hpp"

namespace evfusion {

SoftmaxHead::SoftmaxHead(dst::Frame frame_, std::size_t inputs)
    : frame(std::move(frame_)), weights(frame.size(), inputs), bias(frame.size(), 0.0) {}

void FeatureBatch::validate() const {
  if (sources.empty()) throw InvalidArgument("feature batch has no sources");
  for (const auto& m : sources) {
    if (m.rows() != sources.front().rows()) throw InvalidArgument("feature sources disagree on voxel count");
  }
}

ModelParams ModelParams::evidential(dst::Frame frame, std::vector<ESParams> sources) {
  if (sources.empty()) throw InvalidArgument("evidential model needs at least one source");
  ModelParams p{.frame = frame};
  p.modalities = sources.size();
  p.feature_dim = sources.front().dim();
  for (const auto& s : sources) {
    if (!(s.frame == frame)) throw InvalidArgument("ES layer frame differs from model frame");
  }
  p.sources = std::move(sources);
  p.reliability.emplace(frame, p.modalities);
  p.active.resize(p.modalities);
  std::iota(p.active.begin(), p.active.end(), 0);
  return p;
}

ModelParams ModelParams::softmax(dst::Frame frame, std::size_t sources, std::size_t feature_dim,
                                 std::vector<std::size_t> active) {
  if (active.empty()) throw InvalidArgument("softmax model needs at least one active source");
  ModelParams p{.frame = frame};
  p.modalities = sources;
  p.feature_dim = feature_dim;
  p.active = std::move(active);
  p.softmax_head.emplace(frame, p.active.size() * feature_dim);
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& block : z.blocks()) std::fill(block.values.begin(), block.values.end(), 0.0);
  return z;
}

namespace {

template <typename Block, typename Self>
std::vector<Block> collect_blocks(Self& self) {
  std::vector<Block> out;
  for (std::size_t h = 0; h < self.sources.size(); ++h) {
    auto& s = self.sources[h];
    const std::string prefix = "source" + std::to_string(h) + ".";
    out.push_back({prefix + "prototypes", s.prototypes.data()});
    out.push_back({prefix + "alpha_raw", s.alpha_raw});
    out.push_back({prefix + "gamma_raw", s.gamma_raw});
    out.push_back({prefix + "membership_raw", s.membership_raw});
  }
  if (self.reliability) out.push_back({"beta_raw", self.reliability->beta_raw});
  if (self.softmax_head) {
    out.push_back({"softmax.weights", self.softmax_head->weights.data()});
    out.push_back({"softmax.bias", self.softmax_head->bias});
  }
  return out;
}

}  // namespace

std::vector<ParamBlock> ModelParams::blocks() { return collect_blocks<ParamBlock>(*this); }

std::vector<ConstParamBlock> ModelParams::blocks() const { return collect_blocks<ConstParamBlock>(*this); }

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.values.size();
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& b : blocks()) flat.insert(flat.end(), b.values.begin(), b.values.end());
  return flat;
}

void ModelParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw InvalidArgument("flat parameter vector has the wrong length");
  std::size_t offset = 0;
  for (auto& b : blocks()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), b.values.size(), b.values.begin());
    offset += b.values.size();
  }
}

namespace {

void check_batch(const ModelParams& params, const FeatureBatch& batch) {
  batch.validate();
  if (batch.sources.size() != params.modalities) {
    throw InvalidArgument("feature batch has " + std::to_string(batch.sources.size()) + " sources, model expects " +
                          std::to_string(params.modalities));
  }
  for (std::size_t h : params.active) {
    if (batch.sources[h].cols() != params.feature_dim) throw InvalidArgument("feature dimension mismatch");
  }
}

void softmax_in_place(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : z) v /= total;
}

}  // namespace

Matrix predict_scores(const ModelParams& params, const FeatureBatch& batch, std::size_t threads) {
  check_batch(params, batch);
  const std::size_t n = batch.voxels();
  const std::size_t k_count = params.classes();
  Matrix scores(n, k_count);

  if (!params.is_evidential()) {
    const auto& head = *params.softmax_head;
    for_each_chunk(n, kDefaultChunk, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        auto z = scores.row(i);
        for (std::size_t k = 0; k < k_count; ++k) {
          double acc = head.bias[k];
          std::size_t f = 0;
          for (std::size_t h : params.active) {
            for (double x : batch.sources[h].row(i)) acc += head.weights(k, f++) * x;
          }
          z[k] = acc;
        }
        softmax_in_place(z);
      }
    });
    return scores;
  }

  std::vector<ESEvaluator> layers;
  for (const auto& s : params.sources) layers.emplace_back(s);
  const FusionEvaluator fusion(*params.reliability, params.active);
  const std::size_t active = params.active.size();

  for_each_chunk(n, kDefaultChunk, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<ESEvaluator::Workspace> ws;
    for (std::size_t h : params.active) ws.push_back(layers[h].make_workspace());
    std::vector<double> pl(active * k_count), discounted(active * k_count);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t a = 0; a < active; ++a) {
        const std::size_t h = params.active[a];
        layers[h].contour(batch.sources[h].row(i), ws[a], std::span(pl).subspan(a * k_count, k_count));
      }
      try {
        fusion.forward(pl, discounted, scores.row(i));
      } catch (const DegenerateFusion& e) {
        throw DegenerateFusion(std::string(e.what()) + " at voxel " + std::to_string(i), i);
      }
    }
  });
  return scores;
}

Matrix predict_scores_reference(const ModelParams& params, const FeatureBatch& batch) {
  check_batch(params, batch);
  if (!params.is_evidential()) return predict_scores(params, batch, 1);
  const std::size_t n = batch.voxels();
  Matrix scores(n, params.classes());
  ReliabilityMatrix active_beta(params.frame, params.active.size());
  for (std::size_t a = 0; a < params.active.size(); ++a) {
    for (std::size_t k = 0; k < params.classes(); ++k) {
      active_beta.beta_raw[a * params.classes() + k] =
          params.reliability->beta_raw[params.active[a] * params.classes() + k];
    }
  }
  std::vector<dst::ContourFunction> contours;
  for (std::size_t i = 0; i < n; ++i) {
    contours.clear();
    for (std::size_t h : params.active) {
      contours.push_back(dst::contour(es_forward(batch.sources[h].row(i), params.sources[h])));
    }
    const auto fused = fuse_voxel(contours, active_beta);
    std::copy(fused.values.begin(), fused.values.end(), scores.row(i).begin());
  }
  return scores;
}

std::vector<int> predicted_labels(const Matrix& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) out[i] = static_cast<int>(predicted_label(scores.row(i)));
  return out;
}

}  // namespace evfusion
