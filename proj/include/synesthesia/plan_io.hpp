#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "synesthesia/strokes.hpp"

namespace synesthesia {

nlohmann::json plan_to_json(const PaintingPlan& plan);
/// Throws FormatError on missing/unknown keys or wrong value types.
PaintingPlan plan_from_json(const nlohmann::json& j);

/// Serialized text; doubles are written in shortest round-trip form.
std::string dump_plan(const PaintingPlan& plan);

void save_plan(const PaintingPlan& plan, const std::filesystem::path& path);
PaintingPlan load_plan(const std::filesystem::path& path);

}  // namespace synesthesia
