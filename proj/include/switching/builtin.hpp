#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "switching/model.hpp"

namespace switching {

// JSON model descriptors with fields {model, params, costs, lambda, horizon}.
// Two production families are built in:
//   "regulator"   : 1-D two-regime drift regulator with Gaussian-bump rewards
//   "put-options" : two stocks + savings account, put payoffs, three regimes
// plus a "symmetric" test family (equal coefficients across regimes, constant
// rewards) used by diagnostics.
nlohmann::json default_descriptor(const std::string& family);

SwitchingModel model_from_descriptor(const nlohmann::json& descriptor);

// FNV-1a over the canonical (sorted-key, compact) dump of the descriptor.
std::uint64_t descriptor_hash(const nlohmann::json& descriptor);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace switching
