#pragma once

#include <nlohmann/json.hpp>

#include "cqlin/classifier.hpp"
#include "cqlin/structure.hpp"

namespace cqlin {

// Exactly status, theorem, companion, hypothesis, engine_plan, notes.
nlohmann::json verdict_json(const Verdict& v);
nlohmann::json structure_json(const StructureReport& r, const ConjunctiveQuery& q);
nlohmann::json profile_json(const TgdSetProfile& p);

}  // namespace cqlin
