#include "evfusion/regions.hpp"

#include "evfusion/error.hpp"

namespace evfusion {

std::map<std::string, Mask> remap_nested_regions(std::span<const int> labels, std::size_t classes,
                                                 const RegionScheme& scheme) {
  std::map<std::string, std::vector<bool>> members;
  for (const auto& [name, base] : scheme) {
    if (base.empty()) throw InvalidArgument("region '" + name + "' has no base labels");
    auto& in = members[name];
    in.assign(classes, false);
    for (int l : base) {
      if (l < 0 || static_cast<std::size_t>(l) >= classes) {
        throw InvalidArgument("region '" + name + "' refers to unknown label " + std::to_string(l));
      }
      in[static_cast<std::size_t>(l)] = true;
    }
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) {
      throw InvalidArgument("label " + std::to_string(l) + " out of range");
    }
  }

  std::map<std::string, Mask> out;
  for (const auto& [name, in] : members) {
    Mask mask(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) mask[i] = in[static_cast<std::size_t>(labels[i])] ? 1 : 0;
    out.emplace(name, std::move(mask));
  }
  return out;
}

}  // namespace evfusion
