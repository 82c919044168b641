#pragma once

// Evidential segmentation layer: distance-to-prototype activations turned into
// simple mass functions (one per prototype) and combined by Dempster's rule.
//
// Trainable parameters are stored unconstrained:
//   alpha_i = logistic(alpha_raw_i)          in (0,1)
//   gamma_i = gamma_raw_i^2                  >= 0
//   u_ik    = h_ik^2 / sum_j h_ij^2          (uniform when the sum vanishes)

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "evfusion/dst.hpp"
#include "evfusion/matrix.hpp"

namespace evfusion {

inline constexpr double kInitialAlpha = 0.5;
inline constexpr double kInitialGamma = 0.01;
inline constexpr double kMembershipGuard = 1e-12;

double logistic(double x) noexcept;

struct ESParams {
  ESParams(dst::Frame frame, std::size_t prototype_count, std::size_t dim);

  // alpha = 0.5, gamma = 0.01 and memberships from squared uniform draws.
  static ESParams initialized(dst::Frame frame, Matrix prototypes, std::mt19937_64& rng);

  std::size_t prototype_count() const noexcept { return prototypes.rows(); }
  std::size_t dim() const noexcept { return prototypes.cols(); }
  std::size_t classes() const noexcept { return frame.size(); }

  double alpha(std::size_t i) const { return logistic(alpha_raw.at(i)); }
  double gamma(std::size_t i) const { return gamma_raw.at(i) * gamma_raw.at(i); }
  std::vector<double> membership(std::size_t i) const;

  // Zero-valued parameter set of the same shape.
  ESParams zeros_like() const;

  dst::Frame frame;
  Matrix prototypes;                  // I x d
  std::vector<double> alpha_raw;      // I
  std::vector<double> gamma_raw;      // I
  std::vector<double> membership_raw; // I x K, row-major
};

using FeatureVector = std::vector<double>;

std::vector<double> prototype_activations(std::span<const double> x, const ESParams& params);

dst::SimpleClassMass es_forward(std::span<const double> x, const ESParams& params);

// One mass per row of xs, in row order.
std::vector<dst::SimpleClassMass> es_forward_batch(const Matrix& xs, const ESParams& params);

// Gradients with respect to the constrained quantities (alpha, gamma, u) and
// the prototypes, accumulated over voxels before mapping back to raw values.
struct ESDerivedGrad {
  explicit ESDerivedGrad(const ESParams& shape);
  void clear();
  void add(const ESDerivedGrad& other);

  std::vector<double> prototypes;
  std::vector<double> alpha;
  std::vector<double> gamma;
  std::vector<double> membership;
};

// Evaluates the layer's contour function with derived parameters cached;
// the hot path used by training and volume inference.
class ESEvaluator {
 public:
  struct Workspace {
    std::vector<double> dist2;
    std::vector<double> decay;       // exp(-gamma_i * d_i^2)
    std::vector<double> activation;  // s_i
    std::vector<double> commonality; // A_ik = 1 - s_i + u_ik s_i, I x K
    std::vector<double> prod;        // P_k
    std::vector<double> scratch;
    std::vector<double> grad_activation;
    double omega_product = 1.0;      // Q
    double normalizer = 1.0;         // Z
  };

  explicit ESEvaluator(const ESParams& params);

  Workspace make_workspace() const;

  // pl_k = P_k / Z with P_k = prod_i A_ik, Z = sum_k P_k - (K-1) prod_i (1 - s_i).
  void contour(std::span<const double> x, Workspace& ws, std::span<double> pl) const;

  // Accumulates d(loss)/d(derived params) given d(loss)/d(pl); ws must hold
  // the state left by contour() for the same x.
  void backward(std::span<const double> x, std::span<const double> dpl, Workspace& ws,
                ESDerivedGrad& grad) const;

  // Chain rule from derived to raw parameters; adds into raw_grad.
  void to_raw(const ESDerivedGrad& grad, ESParams& raw_grad) const;

  const ESParams& params() const noexcept { return *params_; }

 private:
  const ESParams* params_;
  std::size_t count_;
  std::size_t dim_;
  std::size_t classes_;
  std::vector<double> alpha_;
  std::vector<double> gamma_;
  std::vector<double> membership_;
  std::vector<double> membership_norm_;  // sum_k h_ik^2, 0 when guarded
};

}  // namespace evfusion
