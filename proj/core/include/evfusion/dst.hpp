#pragma once

// Mass-function algebra on a finite frame of discernment.
//
// Subsets of the frame are encoded as bitmasks: bit k is set iff the k-th
// label belongs to the subset. Mass functions are stored densely (2^K
// entries), which bounds the frame at kMaxFrameSize labels.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evfusion::dst {

using Subset = std::uint32_t;

inline constexpr std::size_t kMaxFrameSize = 16;

// Dempster normalizers below this are reported as total conflict.
inline constexpr double kConflictThreshold = 1e-12;

class Frame {
 public:
  explicit Frame(std::vector<std::string> labels);

  // Frame with labels "0", "1", ..., "K-1".
  static Frame indexed(std::size_t k);

  std::size_t size() const noexcept { return labels_->size(); }
  std::size_t subset_count() const noexcept { return std::size_t{1} << size(); }
  Subset omega() const noexcept { return static_cast<Subset>(subset_count() - 1); }
  Subset singleton(std::size_t k) const;

  const std::string& label(std::size_t k) const { return labels_->at(k); }
  const std::vector<std::string>& labels() const noexcept { return *labels_; }
  std::optional<std::size_t> index_of(std::string_view label) const;

  bool contains(Subset a) const noexcept { return a <= omega(); }

  // "|"-joined member labels in lexicographic order; "" for the empty set.
  std::string subset_name(Subset a) const;
  Subset parse_subset(std::string_view name) const;

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.labels_ == b.labels_ || *a.labels_ == *b.labels_;
  }

 private:
  std::shared_ptr<const std::vector<std::string>> labels_;
};

class MassFunction {
 public:
  // Validates non-negativity, m(empty) == 0 and unit total mass.
  MassFunction(Frame frame, std::vector<double> masses);

  const Frame& frame() const noexcept { return frame_; }
  double operator[](Subset a) const { return masses_.at(a); }
  std::span<const double> masses() const noexcept { return masses_; }

  // Subsets with non-zero mass, in increasing bitmask order.
  std::vector<Subset> focal_sets() const;

 private:
  Frame frame_;
  std::vector<double> masses_;
};

// Mass function whose focal sets are restricted to singletons and the frame.
class SimpleClassMass {
 public:
  SimpleClassMass(Frame frame, std::vector<double> singletons, double omega);

  static SimpleClassMass vacuous(const Frame& frame);

  const Frame& frame() const noexcept { return frame_; }
  std::span<const double> singletons() const noexcept { return singletons_; }
  double singleton(std::size_t k) const { return singletons_.at(k); }
  double omega() const noexcept { return omega_; }

 private:
  Frame frame_;
  std::vector<double> singletons_;
  double omega_;
};

// Plausibility of each singleton.
class ContourFunction {
 public:
  ContourFunction(Frame frame, std::vector<double> values);

  static ContourFunction ones(const Frame& frame);

  const Frame& frame() const noexcept { return frame_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const { return values_.at(k); }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  Frame frame_;
  std::vector<double> values_;
};

MassFunction vacuous(const Frame& frame);

double belief(const MassFunction& m, Subset a);
double plausibility(const MassFunction& m, Subset a);
ContourFunction contour(const MassFunction& m);
ContourFunction contour(const SimpleClassMass& m);

// Mass assigned to pairs of disjoint focal sets.
double conflict(const MassFunction& m1, const MassFunction& m2);

// Dempster's rule. Throws TotalConflict when 1 - kappa < kConflictThreshold.
MassFunction dempster_combine(const MassFunction& m1, const MassFunction& m2);

// Dempster combination of singleton/frame-focused masses in O(I*K).
SimpleClassMass combine_simple(std::span<const SimpleClassMass> masses);

// Classical discounting: beta * m + (1 - beta) * vacuous.
MassFunction discount(const MassFunction& m, double beta);

// Contour of the contextually discounted mass: 1 - beta_k + beta_k * pl_k.
ContourFunction contextual_discount_contour(const ContourFunction& pl,
                                            std::span<const double> beta);

// Elementwise product of contours. The 1/(1-kappa) constant is not applied.
std::vector<double> fused_contour(std::span<const ContourFunction> contours);

MassFunction to_mass_function(const SimpleClassMass& m);

}  // namespace evfusion::dst
