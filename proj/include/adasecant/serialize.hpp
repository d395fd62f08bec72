#pragma once

#include <json.hpp>

#include "adasecant/baselines.hpp"
#include "adasecant/moving_stat.hpp"
#include "adasecant/problems.hpp"
#include "adasecant/stepper.hpp"

// Plain-text (JSON) state serialization. Finite doubles round-trip
// bit-exactly: the writer emits shortest-round-trip decimal forms.

namespace adasecant {

nlohmann::json bank_to_json(const StatBank& bank);
StatBank bank_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const AdaSecantConfig& cfg);
AdaSecantConfig config_from_json(const nlohmann::json& j);

nlohmann::json state_to_json(const AdaSecantState& state);
AdaSecantState state_from_json(const nlohmann::json& j);

nlohmann::json baseline_to_json(const BaselineState& state);
BaselineState baseline_from_json(const nlohmann::json& j);

std::string to_string(StepFormula f);
StepFormula step_formula_from_string(const std::string& s);
std::string to_string(GammaFormula f);
GammaFormula gamma_formula_from_string(const std::string& s);

}  // namespace adasecant
