#include "evfusion/dst_json.hpp"

#include "evfusion/error.hpp"

namespace evfusion::dst {

MassFunction mass_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("frame") || !j.contains("masses")) {
    throw InvalidArgument("mass function JSON needs 'frame' and 'masses'");
  }
  const auto& jf = j.at("frame");
  const auto& jm = j.at("masses");
  if (!jf.is_array() || !jm.is_object()) {
    throw InvalidArgument("'frame' must be an array and 'masses' an object");
  }
  Frame frame(jf.get<std::vector<std::string>>());
  std::vector<double> masses(frame.subset_count(), 0.0);
  for (const auto& [key, value] : jm.items()) {
    if (!value.is_number()) throw InvalidArgument("mass for '" + key + "' is not a number");
    Subset a = frame.parse_subset(key);
    if (a == 0) throw InvalidArgument("mass on the empty set is not allowed");
    masses[a] += value.get<double>();
  }
  return MassFunction(std::move(frame), std::move(masses));
}

nlohmann::json mass_to_json(const MassFunction& m) {
  nlohmann::json masses = nlohmann::json::object();
  const auto& frame = m.frame();
  for (Subset a = 1; a < frame.subset_count(); ++a) {
    if (m[a] > 0.0) masses[frame.subset_name(a)] = m[a];
  }
  return {{"frame", frame.labels()}, {"masses", masses}};
}

nlohmann::json contour_to_json(const ContourFunction& pl) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t k = 0; k < pl.size(); ++k) out[pl.frame().label(k)] = pl[k];
  return out;
}

}  // namespace evfusion::dst
