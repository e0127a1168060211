#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layoutforge/geometry.hpp"

namespace layoutforge {

struct CorpusScenario {
    std::string key;
    std::string scene;
    std::string info;
    std::vector<std::vector<std::string>> cases;
};

// Accepts both "case" and "cases" and tolerates trailing commas.
std::vector<CorpusScenario> parse_corpus(std::string_view text, const std::string& origin = "corpus");
std::vector<CorpusScenario> load_corpus(const std::filesystem::path& path);
std::vector<CorpusScenario> bundled_corpus();

// Throws InvariantError("unknown scenario: <key>").
const CorpusScenario& find_scenario(const std::vector<CorpusScenario>& corpus, std::string_view key);

// "cup saucer-1" -> "cup saucer"; names without a numeric suffix are returned unchanged.
std::string base_category(std::string_view name);

class SizeCatalog {
  public:
    static SizeCatalog parse(std::string_view text, const std::string& origin = "size catalog");
    static SizeCatalog load(const std::filesystem::path& path);
    static SizeCatalog bundled();

    std::optional<Vec3> find(std::string_view name) const;
    // Throws SchemaError naming the category when it is not catalogued.
    Vec3 size_of(std::string_view name) const;

    Boundary table_for(std::string_view scenario_key) const;
    const std::map<std::string, Vec3, std::less<>>& categories() const { return categories_; }

  private:
    std::map<std::string, Vec3, std::less<>> categories_;
    std::map<std::string, Boundary, std::less<>> tables_;
    Boundary default_table_;
};

SceneSpec make_scene(const CorpusScenario& scenario, std::size_t case_index, const SizeCatalog& catalog,
                     std::uint64_t seed);

}  // namespace layoutforge
