#pragma once

#include "hinf/plant.hpp"

#include <json.hpp>

#include <string>

namespace hinf {

/// Strict schema: exactly the keys n, A, b1, b2, c1, c2, d11, d12, d21.
/// A is row-major. Missing or extra keys raise Errc::ParseError.
StateSpacePlant<double> plant_from_json(const nlohmann::json& j);
nlohmann::json plant_to_json(const StateSpacePlant<double>& p);

StateSpacePlant<double> load_plant(const std::string& path);

}  // namespace hinf
