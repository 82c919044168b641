#include "evfusion/es_layer.hpp"

#include <cmath>

#include "evfusion/error.hpp"

namespace evfusion {

double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ESParams::ESParams(dst::Frame frame_, std::size_t prototype_count, std::size_t dim)
    : frame(std::move(frame_)),
      prototypes(prototype_count, dim),
      alpha_raw(prototype_count, 0.0),
      gamma_raw(prototype_count, 0.0),
      membership_raw(prototype_count * frame.size(), 0.0) {
  if (prototype_count == 0) throw InvalidArgument("ES layer needs at least one prototype");
  if (dim == 0) throw InvalidArgument("feature dimension must be positive");
}

ESParams ESParams::initialized(dst::Frame frame, Matrix protos, std::mt19937_64& rng) {
  ESParams p(std::move(frame), protos.rows(), protos.cols());
  p.prototypes = std::move(protos);
  // logistic(0) = 0.5, 0.1^2 = 0.01
  std::fill(p.alpha_raw.begin(), p.alpha_raw.end(), 0.0);
  std::fill(p.gamma_raw.begin(), p.gamma_raw.end(), std::sqrt(kInitialGamma));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& h : p.membership_raw) h = unit(rng);
  return p;
}

std::vector<double> ESParams::membership(std::size_t i) const {
  const std::size_t k_count = classes();
  if (i >= prototype_count()) throw InvalidArgument("prototype index out of range");
  std::vector<double> u(k_count);
  double norm = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double h = membership_raw[i * k_count + k];
    u[k] = h * h;
    norm += u[k];
  }
  if (norm < kMembershipGuard) {
    std::fill(u.begin(), u.end(), 1.0 / static_cast<double>(k_count));
  } else {
    for (double& v : u) v /= norm;
  }
  return u;
}

ESParams ESParams::zeros_like() const {
  ESParams z(frame, prototype_count(), dim());
  return z;
}

std::vector<double> prototype_activations(std::span<const double> x, const ESParams& params) {
  if (x.size() != params.dim()) {
    throw InvalidArgument("feature dimension " + std::to_string(x.size()) + " does not match prototype dimension " +
                          std::to_string(params.dim()));
  }
  std::vector<double> s(params.prototype_count());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto p = params.prototypes.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - p[j];
      d2 += diff * diff;
    }
    s[i] = params.alpha(i) * std::exp(-params.gamma(i) * d2);
  }
  return s;
}

dst::SimpleClassMass es_forward(std::span<const double> x, const ESParams& params) {
  const auto s = prototype_activations(x, params);
  std::vector<dst::SimpleClassMass> masses;
  masses.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto u = params.membership(i);
    for (double& v : u) v *= s[i];
    masses.emplace_back(params.frame, std::move(u), 1.0 - s[i]);
  }
  return dst::combine_simple(masses);
}

std::vector<dst::SimpleClassMass> es_forward_batch(const Matrix& xs, const ESParams& params) {
  std::vector<dst::SimpleClassMass> out;
  out.reserve(xs.rows());
  for (std::size_t n = 0; n < xs.rows(); ++n) out.push_back(es_forward(xs.row(n), params));
  return out;
}

// ---------------------------------------------------------------------------

ESDerivedGrad::ESDerivedGrad(const ESParams& shape)
    : prototypes(shape.prototypes.size(), 0.0),
      alpha(shape.prototype_count(), 0.0),
      gamma(shape.prototype_count(), 0.0),
      membership(shape.membership_raw.size(), 0.0) {}

void ESDerivedGrad::clear() {
  for (auto* v : {&prototypes, &alpha, &gamma, &membership}) std::fill(v->begin(), v->end(), 0.0);
}

void ESDerivedGrad::add(const ESDerivedGrad& other) {
  auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  acc(prototypes, other.prototypes);
  acc(alpha, other.alpha);
  acc(gamma, other.gamma);
  acc(membership, other.membership);
}

ESEvaluator::ESEvaluator(const ESParams& params)
    : params_(&params),
      count_(params.prototype_count()),
      dim_(params.dim()),
      classes_(params.classes()),
      alpha_(count_),
      gamma_(count_),
      membership_(count_ * classes_),
      membership_norm_(count_) {
  for (std::size_t i = 0; i < count_; ++i) {
    alpha_[i] = params.alpha(i);
    gamma_[i] = params.gamma(i);
    double norm = 0.0;
    for (std::size_t k = 0; k < classes_; ++k) {
      const double h = params.membership_raw[i * classes_ + k];
      norm += h * h;
    }
    membership_norm_[i] = norm < kMembershipGuard ? 0.0 : norm;
    for (std::size_t k = 0; k < classes_; ++k) {
      const double h = params.membership_raw[i * classes_ + k];
      membership_[i * classes_ + k] =
          membership_norm_[i] == 0.0 ? 1.0 / static_cast<double>(classes_) : h * h / norm;
    }
  }
}

ESEvaluator::Workspace ESEvaluator::make_workspace() const {
  Workspace ws;
  ws.dist2.resize(count_);
  ws.decay.resize(count_);
  ws.activation.resize(count_);
  ws.commonality.resize(count_ * classes_);
  ws.prod.resize(classes_);
  ws.scratch.resize(count_ + 1);
  ws.grad_activation.resize(count_);
  return ws;
}

void ESEvaluator::contour(std::span<const double> x, Workspace& ws, std::span<double> pl) const {
  if (x.size() != dim_) throw InvalidArgument("feature dimension does not match prototype dimension");
  const auto& protos = params_->prototypes;
  double omega = 1.0;
  for (std::size_t i = 0; i < count_; ++i) {
    const auto p = protos.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double diff = x[j] - p[j];
      d2 += diff * diff;
    }
    ws.dist2[i] = d2;
    ws.decay[i] = std::exp(-gamma_[i] * d2);
    ws.activation[i] = alpha_[i] * ws.decay[i];
    omega *= 1.0 - ws.activation[i];
  }
  std::fill(ws.prod.begin(), ws.prod.end(), 1.0);
  for (std::size_t i = 0; i < count_; ++i) {
    const double s = ws.activation[i];
    for (std::size_t k = 0; k < classes_; ++k) {
      const double a = 1.0 - s + membership_[i * classes_ + k] * s;
      ws.commonality[i * classes_ + k] = a;
      ws.prod[k] *= a;
    }
  }
  double z = omega;
  for (std::size_t k = 0; k < classes_; ++k) z += ws.prod[k] - omega;
  if (z < dst::kConflictThreshold) throw TotalConflict("ES layer: prototype masses in total conflict");
  ws.omega_product = omega;
  ws.normalizer = z;
  for (std::size_t k = 0; k < classes_; ++k) pl[k] = ws.prod[k] / z;
}

void ESEvaluator::backward(std::span<const double> x, std::span<const double> dpl, Workspace& ws,
                           ESDerivedGrad& grad) const {
  const double z = ws.normalizer;
  double weighted = 0.0;
  for (std::size_t k = 0; k < classes_; ++k) weighted += dpl[k] * ws.prod[k];
  const double dz = -weighted / (z * z);
  const double dq = -static_cast<double>(classes_ - 1) * dz;

  std::vector<double>& suffix = ws.scratch;
  std::vector<double>& ds = ws.grad_activation;
  std::fill(ds.begin(), ds.end(), 0.0);

  for (std::size_t k = 0; k < classes_; ++k) {
    const double dprod = dpl[k] / z + dz;
    suffix[count_] = 1.0;
    for (std::size_t i = count_; i-- > 0;) suffix[i] = suffix[i + 1] * ws.commonality[i * classes_ + k];
    double prefix = 1.0;
    for (std::size_t i = 0; i < count_; ++i) {
      const double da = dprod * prefix * suffix[i + 1];
      const double u = membership_[i * classes_ + k];
      ds[i] += da * (u - 1.0);
      grad.membership[i * classes_ + k] += da * ws.activation[i];
      prefix *= ws.commonality[i * classes_ + k];
    }
  }
  {
    suffix[count_] = 1.0;
    for (std::size_t i = count_; i-- > 0;) suffix[i] = suffix[i + 1] * (1.0 - ws.activation[i]);
    double prefix = 1.0;
    for (std::size_t i = 0; i < count_; ++i) {
      ds[i] -= dq * prefix * suffix[i + 1];
      prefix *= 1.0 - ws.activation[i];
    }
  }

  const auto& protos = params_->prototypes;
  for (std::size_t i = 0; i < count_; ++i) {
    const double s = ws.activation[i];
    grad.alpha[i] += ds[i] * ws.decay[i];
    grad.gamma[i] -= ds[i] * s * ws.dist2[i];
    const double dd = -ds[i] * s * gamma_[i];
    const auto p = protos.row(i);
    for (std::size_t j = 0; j < dim_; ++j) grad.prototypes[i * dim_ + j] += -2.0 * (x[j] - p[j]) * dd;
  }
}

void ESEvaluator::to_raw(const ESDerivedGrad& grad, ESParams& raw_grad) const {
  const auto& p = *params_;
  for (std::size_t i = 0; i < count_; ++i) {
    raw_grad.alpha_raw[i] += grad.alpha[i] * alpha_[i] * (1.0 - alpha_[i]);
    raw_grad.gamma_raw[i] += grad.gamma[i] * 2.0 * p.gamma_raw[i];
    for (std::size_t j = 0; j < dim_; ++j) {
      raw_grad.prototypes(i, j) += grad.prototypes[i * dim_ + j];
    }
    const double norm = membership_norm_[i];
    if (norm == 0.0) continue;  // uniform substitute is constant
    double dot = 0.0;
    for (std::size_t k = 0; k < classes_; ++k) {
      dot += grad.membership[i * classes_ + k] * membership_[i * classes_ + k];
    }
    for (std::size_t k = 0; k < classes_; ++k) {
      const double h = p.membership_raw[i * classes_ + k];
      raw_grad.membership_raw[i * classes_ + k] += 2.0 * h / norm * (grad.membership[i * classes_ + k] - dot);
    }
  }
}

}  // namespace evfusion
