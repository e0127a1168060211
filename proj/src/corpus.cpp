#include "layoutforge/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "json_codecs.hpp"
#include "layoutforge/assets.hpp"
#include "layoutforge/errors.hpp"

namespace layoutforge {

using json_codecs::json;

namespace {

std::string read_file(const std::filesystem::path& path, std::string_view what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot read " + std::string(what) + ": " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Boundary table_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw SchemaError(path + ": expected [width, depth]");
    }
    Boundary b;
    b.width = j[0].get<double>();
    b.depth = j[1].get<double>();
    try {
        b.check();
    } catch (const InvariantError& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return b;
}

}  // namespace

std::vector<CorpusScenario> parse_corpus(std::string_view text, const std::string& origin) {
    const std::string clean = json_codecs::strip_trailing_commas(text);
    const json doc = json_codecs::parse_document(clean, origin);
    if (!doc.is_object()) throw SchemaError(origin + ": expected an object of scenarios");

    // Scenarios keep their file order.
    std::vector<std::string> keys;
    const nlohmann::ordered_json ordered = nlohmann::ordered_json::parse(clean);
    for (const auto& item : ordered.items()) keys.push_back(item.key());

    std::vector<CorpusScenario> out;
    for (const auto& key : keys) {
        const json& body = doc.at(key);
        const std::string path = origin + ": /" + key;
        CorpusScenario s;
        s.key = key;
        s.scene = json_codecs::require_string(body, "scene", path);
        s.info = json_codecs::require_string(body, "info", path);
        const bool has_case = body.contains("case");
        const bool has_cases = body.contains("cases");
        if (has_case == has_cases) throw SchemaError(path + ": expected exactly one of \"case\" or \"cases\"");
        const json& cases = body.at(has_case ? "case" : "cases");
        const std::string cases_path = path + (has_case ? "/case" : "/cases");
        if (!cases.is_array() || cases.empty()) throw SchemaError(cases_path + ": expected a non-empty array");
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const std::string case_path = cases_path + "/" + std::to_string(i);
            if (!cases[i].is_array() || cases[i].empty()) throw SchemaError(case_path + ": expected a non-empty array");
            std::vector<std::string> names;
            for (std::size_t k = 0; k < cases[i].size(); ++k) {
                if (!cases[i][k].is_string()) {
                    throw SchemaError(case_path + "/" + std::to_string(k) + ": expected a string");
                }
                names.push_back(cases[i][k].get<std::string>());
            }
            s.cases.push_back(std::move(names));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<CorpusScenario> load_corpus(const std::filesystem::path& path) {
    return parse_corpus(read_file(path, "corpus"), path.string());
}

std::vector<CorpusScenario> bundled_corpus() { return parse_corpus(assets::get("corpus.json"), "corpus.json"); }

const CorpusScenario& find_scenario(const std::vector<CorpusScenario>& corpus, std::string_view key) {
    for (const auto& s : corpus) {
        if (s.key == key) return s;
    }
    throw InvariantError("unknown scenario: " + std::string(key));
}

std::string base_category(std::string_view name) {
    const auto dash = name.rfind('-');
    if (dash == std::string_view::npos || dash + 1 == name.size()) return std::string(name);
    for (std::size_t i = dash + 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::string(name);
    }
    return std::string(name.substr(0, dash));
}

SizeCatalog SizeCatalog::parse(std::string_view text, const std::string& origin) {
    const json doc = json_codecs::parse_document(json_codecs::strip_trailing_commas(text), origin);
    SizeCatalog cat;
    const json& categories = json_codecs::require(doc, "categories", origin + ": ");
    if (!categories.is_object()) throw SchemaError(origin + ": /categories: expected an object");
    for (const auto& [name, size] : categories.items()) {
        const std::string path = origin + ": /categories/" + name;
        const Vec3 v = json_codecs::vec3_from_json(size, path);
        if (!(v.x > 0.0 && v.y > 0.0 && v.z > 0.0)) throw SchemaError(path + ": sizes must be positive");
        cat.categories_[name] = v;
    }
    if (doc.contains("default_table")) {
        cat.default_table_ = table_from_json(doc.at("default_table"), origin + ": /default_table");
    }
    if (doc.contains("tables")) {
        for (const auto& [key, t] : doc.at("tables").items()) {
            cat.tables_[key] = table_from_json(t, origin + ": /tables/" + key);
        }
    }
    return cat;
}

SizeCatalog SizeCatalog::load(const std::filesystem::path& path) {
    return parse(read_file(path, "size catalog"), path.string());
}

SizeCatalog SizeCatalog::bundled() { return parse(assets::get("size_catalog.json"), "size_catalog.json"); }

std::optional<Vec3> SizeCatalog::find(std::string_view name) const {
    if (auto it = categories_.find(name); it != categories_.end()) return it->second;
    if (auto it = categories_.find(base_category(name)); it != categories_.end()) return it->second;
    return std::nullopt;
}

Vec3 SizeCatalog::size_of(std::string_view name) const {
    if (auto v = find(name)) return *v;
    throw SchemaError("no size for object category: " + base_category(name));
}

Boundary SizeCatalog::table_for(std::string_view scenario_key) const {
    if (auto it = tables_.find(scenario_key); it != tables_.end()) return it->second;
    return default_table_;
}

SceneSpec make_scene(const CorpusScenario& scenario, std::size_t case_index, const SizeCatalog& catalog,
                     std::uint64_t seed) {
    if (case_index >= scenario.cases.size()) {
        throw InvariantError("scenario " + scenario.key + " has no case " + std::to_string(case_index));
    }
    SceneSpec scene;
    scene.instruction = scenario.info;
    scene.boundary = catalog.table_for(scenario.key);
    scene.rng_seed = seed;
    for (const auto& name : scenario.cases[case_index]) {
        scene.objects.push_back({name, catalog.size_of(name), base_category(name)});
    }
    scene.check();
    return scene;
}

}  // namespace layoutforge
