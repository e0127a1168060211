#include "json_codecs.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "layoutforge/errors.hpp"

namespace layoutforge::json_codecs {

namespace {

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::string join_path(const std::string& path, std::string_view key) {
    return path + "/" + std::string(key);
}

}  // namespace

json parse_document(std::string_view text, std::string_view what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_and_column(text, e.byte);
        std::ostringstream msg;
        msg << what << ": line " << line << ", column " << col << ": ";
        const std::string detail = e.what();
        const auto pos = detail.find("syntax error");
        msg << (pos == std::string::npos ? detail : detail.substr(pos));
        throw SchemaError(msg.str());
    }
}

std::string strip_trailing_commas(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_string = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            out += c;
            if (c == '\\' && i + 1 < text.size()) {
                out += text[++i];
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == ',') {
            std::size_t j = i + 1;
            while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && (text[j] == ']' || text[j] == '}')) continue;
        }
        out += c;
    }
    return out;
}

const json& require(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(join_path(path, key) + ": missing field");
    return *it;
}

double require_number(const json& obj, std::string_view key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number()) throw SchemaError(join_path(path, key) + ": expected a number");
    return v.get<double>();
}

std::string require_string(const json& obj, std::string_view key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) throw SchemaError(join_path(path, key) + ": expected a string");
    return v.get<std::string>();
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3 || !std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); })) {
        throw SchemaError(path + ": expected [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json constraint_to_json(const ConstraintSpec& c) {
    json j;
    j["primary_axis"] = std::string(to_string(c.primary_axis));
    j["min_gap_frac"] = c.min_gap_frac;
    j["max_gap_frac"] = c.max_gap_frac;
    j["overlap_axis"] = std::string(to_string(c.overlap_axis));
    j["require_overlap"] = c.require_overlap;
    j["align_mode"] = std::string(to_string(c.align_mode));
    j["anchor_zone"] = c.anchor_zone ? json(std::string(to_string(*c.anchor_zone))) : json(nullptr);
    j["falloff_frac"] = c.falloff_frac;
    j["align_slack_frac"] = c.align_slack_frac;
    return j;
}

ConstraintSpec constraint_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    ConstraintSpec c;
    auto token = [&](std::string_view key, auto parse, auto& out) {
        if (auto it = j.find(key); it != j.end()) {
            if (!it->is_string()) throw SchemaError(join_path(path, key) + ": expected a string");
            try {
                out = parse(it->template get<std::string>());
            } catch (const SchemaError& e) {
                throw SchemaError(join_path(path, key) + ": " + e.what());
            }
        }
    };
    auto number = [&](std::string_view key, double& out) {
        if (auto it = j.find(key); it != j.end()) {
            if (!it->is_number()) throw SchemaError(join_path(path, key) + ": expected a number");
            out = it->get<double>();
        }
    };
    token("primary_axis", parse_axis, c.primary_axis);
    token("overlap_axis", parse_axis, c.overlap_axis);
    token("align_mode", parse_align_mode, c.align_mode);
    number("min_gap_frac", c.min_gap_frac);
    number("max_gap_frac", c.max_gap_frac);
    number("falloff_frac", c.falloff_frac);
    number("align_slack_frac", c.align_slack_frac);
    if (auto it = j.find("require_overlap"); it != j.end()) {
        if (!it->is_boolean()) throw SchemaError(join_path(path, "require_overlap") + ": expected a boolean");
        c.require_overlap = it->get<bool>();
    }
    if (auto it = j.find("anchor_zone"); it != j.end() && !it->is_null()) {
        AnchorZone zone{};
        token("anchor_zone", parse_anchor_zone, zone);
        c.anchor_zone = zone;
    }
    return c;
}

json validation_to_json(const ValidationSpec& v) {
    return json{{"tolerance_frac", v.tolerance_frac}, {"max_adjustments", v.max_adjustments}};
}

ValidationSpec validation_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    ValidationSpec v;
    if (auto it = j.find("tolerance_frac"); it != j.end()) {
        if (!it->is_number()) throw SchemaError(path + "/tolerance_frac: expected a number");
        v.tolerance_frac = it->get<double>();
    }
    if (auto it = j.find("max_adjustments"); it != j.end()) {
        if (!it->is_number_integer()) throw SchemaError(path + "/max_adjustments: expected an integer");
        v.max_adjustments = it->get<int>();
    }
    return v;
}

json relation_to_json(const RelationDef& def) {
    json j;
    j["name"] = def.name;
    j["arity"] = std::string(to_string(def.arity));
    j["kind"] = std::string(to_string(def.kind));
    j["definition"] = def.definition;
    j["rpc"] = def.rpc ? json::array({(*def.rpc)[0], (*def.rpc)[1], (*def.rpc)[2]}) : json(nullptr);
    j["constraint"] = constraint_to_json(def.constraint);
    j["validation"] = validation_to_json(def.validation);
    j["revision"] = def.revision;
    return j;
}

RelationDef relation_from_json(const json& j, const std::string& path) {
    RelationDef def;
    def.name = require_string(j, "name", path);
    auto token = [&](std::string_view key, auto parse) {
        const std::string text = require_string(j, key, path);
        try {
            return parse(text);
        } catch (const SchemaError& e) {
            throw SchemaError(join_path(path, key) + ": " + e.what());
        }
    };
    def.arity = token("arity", parse_arity);
    def.kind = token("kind", parse_kind);
    def.definition = require_string(j, "definition", path);
    const json& rpc = require(j, "rpc", path);
    if (!rpc.is_null()) {
        if (!rpc.is_array() || rpc.size() != 3 ||
            !std::all_of(rpc.begin(), rpc.end(), [](const json& e) { return e.is_number_integer(); })) {
            throw SchemaError(path + "/rpc: expected three integers or null");
        }
        def.rpc = Rpc{rpc[0].get<int>(), rpc[1].get<int>(), rpc[2].get<int>()};
    }
    def.constraint = constraint_from_json(require(j, "constraint", path), join_path(path, "constraint"));
    def.validation = validation_from_json(require(j, "validation", path), join_path(path, "validation"));
    const json& revision = require(j, "revision", path);
    if (!revision.is_number_integer()) throw SchemaError(path + "/revision: expected an integer");
    def.revision = revision.get<int>();
    try {
        def.check();
    } catch (const InvariantError& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return def;
}

json boundary_to_json(const Boundary& b) {
    return json{{"width", b.width},
                {"depth", b.depth},
                {"surface_z", b.surface_z},
                {"origin_x", b.origin_x},
                {"origin_y", b.origin_y}};
}

Boundary boundary_from_json(const json& j, const std::string& path) {
    Boundary b;
    b.width = require_number(j, "width", path);
    b.depth = require_number(j, "depth", path);
    if (j.contains("surface_z")) b.surface_z = require_number(j, "surface_z", path);
    if (j.contains("origin_x")) b.origin_x = require_number(j, "origin_x", path);
    if (j.contains("origin_y")) b.origin_y = require_number(j, "origin_y", path);
    try {
        b.check();
    } catch (const InvariantError& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return b;
}

}  // namespace layoutforge::json_codecs

namespace layoutforge {

using json_codecs::json;

std::string library_to_json(const RelationLibrary& lib) {
    json doc;
    doc["format_version"] = 1;
    json relations = json::array();
    for (const auto& [name, entry] : lib.entries()) {
        json r = json_codecs::relation_to_json(entry.def);
        r["provenance"] = std::string(to_string(entry.provenance));
        relations.push_back(std::move(r));
    }
    doc["relations"] = std::move(relations);
    return doc.dump(2) + "\n";
}

RelationLibrary library_from_json(const std::string& text) {
    const json doc = json_codecs::parse_document(text, "relation library");
    const json& version = json_codecs::require(doc, "format_version", "");
    if (!version.is_number_integer() || version.get<int>() != 1) {
        throw SchemaError("/format_version: unsupported version " + version.dump());
    }
    const json& relations = json_codecs::require(doc, "relations", "");
    if (!relations.is_array()) throw SchemaError("/relations: expected an array");
    RelationLibrary lib;
    for (std::size_t i = 0; i < relations.size(); ++i) {
        const std::string path = "/relations/" + std::to_string(i);
        RelationDef def = json_codecs::relation_from_json(relations[i], path);
        Provenance prov = Provenance::Builtin;
        try {
            prov = parse_provenance(json_codecs::require_string(relations[i], "provenance", path));
        } catch (const SchemaError& e) {
            throw SchemaError(path + "/provenance: " + e.what());
        }
        try {
            lib.insert(std::move(def), prov);
        } catch (const InvariantError& e) {
            throw SchemaError(path + ": " + e.what());
        }
    }
    return lib;
}

void save_library(const RelationLibrary& lib, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write relation library: " + path.string());
    out << library_to_json(lib);
    if (!out) throw Error("failed writing relation library: " + path.string());
}

RelationLibrary load_library(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot read relation library: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return library_from_json(buf.str());
    } catch (const SchemaError& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

}  // namespace layoutforge
