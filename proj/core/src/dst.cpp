#include "evfusion/dst.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "evfusion/error.hpp"

namespace evfusion::dst {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_same_frame(const Frame& a, const Frame& b) {
  if (!(a == b)) throw InvalidArgument("mass functions are defined on different frames");
}

void check_subset(const Frame& frame, Subset a) {
  if (!frame.contains(a)) {
    throw InvalidArgument("subset bitmask " + std::to_string(a) + " out of range for frame of size " +
                          std::to_string(frame.size()));
  }
}

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InvalidArgument(std::string(what) + " must lie in [0,1], got " + std::to_string(v));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Frame

Frame::Frame(std::vector<std::string> labels) {
  if (labels.empty()) throw InvalidArgument("frame needs at least one label");
  if (labels.size() > kMaxFrameSize) {
    throw InvalidArgument("frame size " + std::to_string(labels.size()) + " exceeds " +
                          std::to_string(kMaxFrameSize));
  }
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty() || l.find('|') != std::string::npos) {
      throw InvalidArgument("invalid frame label '" + l + "'");
    }
    if (!seen.insert(l).second) throw InvalidArgument("duplicate frame label '" + l + "'");
  }
  labels_ = std::make_shared<const std::vector<std::string>>(std::move(labels));
}

Frame Frame::indexed(std::size_t k) {
  std::vector<std::string> labels(k);
  for (std::size_t i = 0; i < k; ++i) labels[i] = std::to_string(i);
  return Frame(std::move(labels));
}

Subset Frame::singleton(std::size_t k) const {
  if (k >= size()) throw InvalidArgument("class index out of range");
  return Subset{1} << k;
}

std::optional<std::size_t> Frame::index_of(std::string_view label) const {
  const auto& l = *labels_;
  auto it = std::find(l.begin(), l.end(), label);
  if (it == l.end()) return std::nullopt;
  return static_cast<std::size_t>(it - l.begin());
}

std::string Frame::subset_name(Subset a) const {
  check_subset(*this, a);
  std::vector<std::string> members;
  for (std::size_t k = 0; k < size(); ++k) {
    if (a & (Subset{1} << k)) members.push_back(label(k));
  }
  std::sort(members.begin(), members.end());
  std::string out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) out += '|';
    out += members[i];
  }
  return out;
}

Subset Frame::parse_subset(std::string_view name) const {
  Subset a = 0;
  if (name.empty()) return a;
  std::size_t start = 0;
  while (start <= name.size()) {
    auto end = name.find('|', start);
    if (end == std::string_view::npos) end = name.size();
    auto token = name.substr(start, end - start);
    auto idx = index_of(token);
    if (!idx) throw InvalidArgument("unknown label '" + std::string(token) + "' in subset '" + std::string(name) + "'");
    a |= Subset{1} << *idx;
    start = end + 1;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Value types

MassFunction::MassFunction(Frame frame, std::vector<double> masses)
    : frame_(std::move(frame)), masses_(std::move(masses)) {
  if (masses_.size() != frame_.subset_count()) {
    throw InvalidArgument("mass vector has " + std::to_string(masses_.size()) + " entries, expected " +
                          std::to_string(frame_.subset_count()));
  }
  double total = 0.0;
  for (double v : masses_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("masses must be finite and non-negative");
    total += v;
  }
  if (masses_[0] != 0.0) throw InvalidArgument("mass on the empty set must be zero");
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw InvalidArgument("masses sum to " + std::to_string(total) + ", expected 1");
  }
}

std::vector<Subset> MassFunction::focal_sets() const {
  std::vector<Subset> out;
  for (Subset a = 0; a < masses_.size(); ++a) {
    if (masses_[a] > 0.0) out.push_back(a);
  }
  return out;
}

SimpleClassMass::SimpleClassMass(Frame frame, std::vector<double> singletons, double omega)
    : frame_(std::move(frame)), singletons_(std::move(singletons)), omega_(omega) {
  if (singletons_.size() != frame_.size()) throw InvalidArgument("singleton mass count does not match frame");
  double total = omega_;
  check_unit(omega_, "omega mass");
  for (double v : singletons_) {
    check_unit(v, "singleton mass");
    total += v;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw InvalidArgument("simple mass sums to " + std::to_string(total) + ", expected 1");
  }
}

SimpleClassMass SimpleClassMass::vacuous(const Frame& frame) {
  return SimpleClassMass(frame, std::vector<double>(frame.size(), 0.0), 1.0);
}

ContourFunction::ContourFunction(Frame frame, std::vector<double> values)
    : frame_(std::move(frame)), values_(std::move(values)) {
  if (values_.size() != frame_.size()) throw InvalidArgument("contour length does not match frame");
  for (double v : values_) check_unit(v, "contour value");
}

ContourFunction ContourFunction::ones(const Frame& frame) {
  return ContourFunction(frame, std::vector<double>(frame.size(), 1.0));
}

// ---------------------------------------------------------------------------
// Operations

MassFunction vacuous(const Frame& frame) {
  std::vector<double> m(frame.subset_count(), 0.0);
  m[frame.omega()] = 1.0;
  return MassFunction(frame, std::move(m));
}

double belief(const MassFunction& m, Subset a) {
  check_subset(m.frame(), a);
  double bel = 0.0;
  // Enumerate the non-empty subsets of a.
  for (Subset b = a; b != 0; b = (b - 1) & a) bel += m[b];
  return std::min(bel, 1.0);
}

double plausibility(const MassFunction& m, Subset a) {
  check_subset(m.frame(), a);
  double pl = 0.0;
  const auto masses = m.masses();
  for (Subset b = 1; b < masses.size(); ++b) {
    if (b & a) pl += masses[b];
  }
  return std::min(pl, 1.0);
}

ContourFunction contour(const MassFunction& m) {
  const auto& frame = m.frame();
  std::vector<double> pl(frame.size());
  for (std::size_t k = 0; k < frame.size(); ++k) pl[k] = plausibility(m, frame.singleton(k));
  return ContourFunction(frame, std::move(pl));
}

ContourFunction contour(const SimpleClassMass& m) {
  std::vector<double> pl(m.frame().size());
  for (std::size_t k = 0; k < pl.size(); ++k) pl[k] = std::min(1.0, m.singleton(k) + m.omega());
  return ContourFunction(m.frame(), std::move(pl));
}

double conflict(const MassFunction& m1, const MassFunction& m2) {
  check_same_frame(m1.frame(), m2.frame());
  const auto f1 = m1.focal_sets();
  const auto f2 = m2.focal_sets();
  double kappa = 0.0;
  for (Subset b : f1) {
    for (Subset c : f2) {
      if ((b & c) == 0) kappa += m1[b] * m2[c];
    }
  }
  return std::clamp(kappa, 0.0, 1.0);
}

MassFunction dempster_combine(const MassFunction& m1, const MassFunction& m2) {
  check_same_frame(m1.frame(), m2.frame());
  const auto& frame = m1.frame();
  std::vector<double> joint(frame.subset_count(), 0.0);
  const auto f1 = m1.focal_sets();
  const auto f2 = m2.focal_sets();
  for (Subset b : f1) {
    for (Subset c : f2) joint[b & c] += m1[b] * m2[c];
  }
  // 1 - kappa computed from the non-conflicting mass directly.
  double normalizer = 0.0;
  for (Subset a = 1; a < joint.size(); ++a) normalizer += joint[a];
  if (normalizer < kConflictThreshold) {
    throw TotalConflict("Dempster combination undefined: total conflict (1 - kappa = " +
                        std::to_string(normalizer) + ")");
  }
  joint[0] = 0.0;
  for (Subset a = 1; a < joint.size(); ++a) joint[a] /= normalizer;
  return MassFunction(frame, std::move(joint));
}

SimpleClassMass combine_simple(std::span<const SimpleClassMass> masses) {
  if (masses.empty()) throw InvalidArgument("combine_simple needs at least one mass function");
  const Frame& frame = masses.front().frame();
  const std::size_t k_count = frame.size();
  std::vector<double> commonality(k_count, 1.0);
  double omega = 1.0;
  for (const auto& m : masses) {
    check_same_frame(frame, m.frame());
    for (std::size_t k = 0; k < k_count; ++k) commonality[k] *= m.singleton(k) + m.omega();
    omega *= m.omega();
  }
  double normalizer = omega;
  std::vector<double> singletons(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    singletons[k] = std::max(0.0, commonality[k] - omega);
    normalizer += singletons[k];
  }
  if (normalizer < kConflictThreshold) {
    throw TotalConflict("combine_simple: total conflict between prototype masses");
  }
  for (double& v : singletons) v /= normalizer;
  omega /= normalizer;

  // Absorb rounding so the result satisfies the unit-sum invariant exactly enough.
  double total = omega + std::accumulate(singletons.begin(), singletons.end(), 0.0);
  omega = std::clamp(omega + (1.0 - total), 0.0, 1.0);
  return SimpleClassMass(frame, std::move(singletons), omega);
}

MassFunction discount(const MassFunction& m, double beta) {
  check_unit(beta, "discount coefficient beta");
  const auto& frame = m.frame();
  std::vector<double> out(m.masses().begin(), m.masses().end());
  for (double& v : out) v *= beta;
  out[frame.omega()] += 1.0 - beta;
  return MassFunction(frame, std::move(out));
}

ContourFunction contextual_discount_contour(const ContourFunction& pl, std::span<const double> beta) {
  if (beta.size() != pl.size()) throw InvalidArgument("beta vector length does not match frame");
  std::vector<double> out(pl.size());
  for (std::size_t k = 0; k < pl.size(); ++k) {
    check_unit(beta[k], "contextual discount coefficient");
    out[k] = std::clamp(1.0 - beta[k] + beta[k] * pl[k], 0.0, 1.0);
  }
  return ContourFunction(pl.frame(), std::move(out));
}

std::vector<double> fused_contour(std::span<const ContourFunction> contours) {
  if (contours.empty()) throw InvalidArgument("fused_contour needs at least one contour");
  const Frame& frame = contours.front().frame();
  std::vector<double> out(frame.size(), 1.0);
  for (const auto& pl : contours) {
    check_same_frame(frame, pl.frame());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= pl[k];
  }
  return out;
}

MassFunction to_mass_function(const SimpleClassMass& m) {
  const auto& frame = m.frame();
  std::vector<double> out(frame.subset_count(), 0.0);
  for (std::size_t k = 0; k < frame.size(); ++k) out[frame.singleton(k)] += m.singleton(k);
  out[frame.omega()] += m.omega();
  return MassFunction(frame, std::move(out));
}

}  // namespace evfusion::dst
