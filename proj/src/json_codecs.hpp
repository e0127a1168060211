#pragma once

// nlohmann/json conversions shared by the file formats and LLM parsers.

#include <string>
#include <string_view>

#include <json.hpp>

#include "layoutforge/geometry.hpp"
#include "layoutforge/relations.hpp"

namespace layoutforge::json_codecs {

using nlohmann::json;

// Parses `text`, converting syntax errors into SchemaError("<what>: line L,
// column C: ...").
json parse_document(std::string_view text, std::string_view what);

// Removes commas that directly precede a closing bracket or brace, outside of
// string literals. Hand-edited corpus files and LLM replies often carry them.
std::string strip_trailing_commas(std::string_view text);

// Typed field access raising SchemaError with a JSON-pointer-like path.
const json& require(const json& obj, std::string_view key, const std::string& path);
double require_number(const json& obj, std::string_view key, const std::string& path);
std::string require_string(const json& obj, std::string_view key, const std::string& path);

json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const json& j, const std::string& path);

json constraint_to_json(const ConstraintSpec& c);
ConstraintSpec constraint_from_json(const json& j, const std::string& path);

json validation_to_json(const ValidationSpec& v);
ValidationSpec validation_from_json(const json& j, const std::string& path);

json relation_to_json(const RelationDef& def);
RelationDef relation_from_json(const json& j, const std::string& path);

json boundary_to_json(const Boundary& b);
Boundary boundary_from_json(const json& j, const std::string& path);

}  // namespace layoutforge::json_codecs
