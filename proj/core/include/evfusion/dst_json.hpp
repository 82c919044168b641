#pragma once

// JSON form of mass functions:
//   {"frame": ["a","b"], "masses": {"a": 0.6, "a|b": 0.4}}
// Subset keys are "|"-joined label lists; absent subsets carry zero mass.

#include <nlohmann/json.hpp>

#include "evfusion/dst.hpp"

namespace evfusion::dst {

MassFunction mass_from_json(const nlohmann::json& j);
nlohmann::json mass_to_json(const MassFunction& m);
nlohmann::json contour_to_json(const ContourFunction& pl);

}  // namespace evfusion::dst
