#pragma once

#include <json.hpp>

#include "refine/analysis.hpp"
#include "refine/auction.hpp"
#include "refine/dists.hpp"
#include "refine/prediction.hpp"

namespace refine {

// Readers throw nlohmann::json::exception for missing or mistyped fields and
// std::invalid_argument for values the domain types reject.

nlohmann::json to_json(const Distribution& d);
Distribution distribution_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AuctionInstance& inst);
AuctionInstance instance_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PredictionScheme& s);
PredictionScheme scheme_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RefinementStructure& rs);
RefinementStructure refinement_from_json(const nlohmann::json& j);

/// {"slot_of": [slot or null, ...]}
nlohmann::json to_json(const Assignment& asg);

nlohmann::json to_json(const OutcomeMetrics& m);

nlohmann::json to_json(const AppendixDelta& d);

}  // namespace refine
