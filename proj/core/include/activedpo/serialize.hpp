#pragma once

#include <nlohmann/json.hpp>

#include "activedpo/types.hpp"

namespace activedpo {

void to_json(nlohmann::json& j, const Triplet& t);
void from_json(const nlohmann::json& j, Triplet& t);
void to_json(nlohmann::json& j, const PreferenceRecord& r);
void from_json(const nlohmann::json& j, PreferenceRecord& r);
void to_json(nlohmann::json& j, const Metrics& m);
void from_json(const nlohmann::json& j, Metrics& m);

// Metrics row as written to metrics.jsonl: everything except wall_time, so
// the file is a pure function of the configuration.
nlohmann::json metrics_row(const Metrics& m);

}  // namespace activedpo
