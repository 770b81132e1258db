#include "synesthesia/plan_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "synesthesia/error.hpp"

namespace synesthesia {

using nlohmann::json;

namespace {

json rgb_to_json(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }

void require_keys(const json& obj, const std::set<std::string>& keys, const char* what) {
  if (!obj.is_object()) throw FormatError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!keys.contains(key)) {
      throw FormatError(std::string("unknown key '") + key + "' in " + what);
    }
  }
  for (const auto& key : keys) {
    if (!obj.contains(key)) throw FormatError(std::string("missing key '") + key + "' in " + what);
  }
}

double number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw FormatError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

Rgb rgb_from_json(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) {
    throw FormatError(std::string("'") + key + "' must be an array of 3 numbers");
  }
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    if (!v[c].is_number()) throw FormatError(std::string("'") + key + "' must hold numbers");
    out[c] = v[c].get<double>();
  }
  return out;
}

}  // namespace

json plan_to_json(const PaintingPlan& plan) {
  json strokes = json::array();
  for (const auto& s : plan.strokes) {
    strokes.push_back({{"x", s.x},
                       {"y", s.y},
                       {"orientation", s.orientation},
                       {"length", s.length},
                       {"bend", s.bend},
                       {"thickness", s.thickness},
                       {"color", rgb_to_json(s.color)},
                       {"opacity", s.opacity}});
  }
  return {{"canvas_width_px", plan.canvas_width_px},
          {"canvas_height_px", plan.canvas_height_px},
          {"background", rgb_to_json(plan.background)},
          {"softness", plan.softness},
          {"strokes", strokes}};
}

PaintingPlan plan_from_json(const json& j) {
  try {
    require_keys(j, {"canvas_width_px", "canvas_height_px", "background", "softness", "strokes"},
                 "plan");
    PaintingPlan plan;
    if (!j.at("canvas_width_px").is_number_integer() ||
        !j.at("canvas_height_px").is_number_integer()) {
      throw FormatError("canvas dimensions must be integers");
    }
    plan.canvas_width_px = j.at("canvas_width_px").get<int>();
    plan.canvas_height_px = j.at("canvas_height_px").get<int>();
    plan.background = rgb_from_json(j, "background");
    plan.softness = number(j, "softness");
    const json& strokes = j.at("strokes");
    if (!strokes.is_array()) throw FormatError("'strokes' must be an array");
    for (const json& js : strokes) {
      require_keys(js, {"x", "y", "orientation", "length", "bend", "thickness", "color", "opacity"},
                   "stroke");
      StrokeParams s;
      s.x = number(js, "x");
      s.y = number(js, "y");
      s.orientation = number(js, "orientation");
      s.length = number(js, "length");
      s.bend = number(js, "bend");
      s.thickness = number(js, "thickness");
      s.color = rgb_from_json(js, "color");
      s.opacity = number(js, "opacity");
      plan.strokes.push_back(s);
    }
    plan.validate();
    return plan;
  } catch (const ParameterError& e) {
    throw FormatError(std::string("invalid plan: ") + e.what());
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid plan JSON: ") + e.what());
  }
}

std::string dump_plan(const PaintingPlan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

void save_plan(const PaintingPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write plan file: " + path.string());
  out << dump_plan(plan);
  if (!out) throw IoError("failed writing plan file: " + path.string());
}

PaintingPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open plan file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw FormatError("malformed plan JSON in " + path.string() + ": " + e.what());
  }
  return plan_from_json(j);
}

}  // namespace synesthesia
