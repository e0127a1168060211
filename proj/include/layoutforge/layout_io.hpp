#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layoutforge/geometry.hpp"
#include "layoutforge/metrics.hpp"
#include "layoutforge/validation_loop.hpp"

namespace layoutforge {

// layout.json: { name: { "center": [x,y,z], "size": [x,y,z], "box": { "min": [...], "max": [...] },
// "plane": [u, v] } }. Reading checks that every box matches its center and size.
std::string layout_to_json(const Layout& layout);
Layout layout_from_json(std::string_view text, const std::string& origin = "layout");

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(std::string_view text, const std::string& origin = "metrics");

// What was asked for; stored under "run" in report.json.
struct RunMeta {
    std::string scenario;
    int case_index = 0;
    std::uint64_t seed = 0;
    std::string mode;
    std::vector<std::string> objects;
    Boundary boundary;
};

std::string report_to_json(const RunReport& report, const RunMeta& meta);
// report.json for a run that failed before producing anything.
std::string error_report_json(const std::string& error, const std::optional<RunMeta>& meta);

// The parts of report.json other tools consume.
struct StoredReport {
    bool solved = false;
    int rounds_used = 0;
    std::string error;
    std::optional<RunMeta> meta;
    std::vector<RelationInstance> surviving_relations;
    std::optional<MetricsReport> metrics;
};

StoredReport report_from_json(std::string_view text, const std::string& origin = "report");

std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary file so readers never see partial output.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace layoutforge
