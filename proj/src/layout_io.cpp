#include "layoutforge/layout_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json_codecs.hpp"
#include "layoutforge/errors.hpp"

namespace layoutforge {

using json_codecs::json;

namespace {

json box_to_json(const Aabb& b) {
    return json{{"min", json_codecs::vec3_to_json(b.min)}, {"max", json_codecs::vec3_to_json(b.max)}};
}

json layout_json(const Layout& layout) {
    json out = json::object();
    for (const auto& [name, pose] : layout.poses) {
        const Aabb& box = layout.boxes.at(name);
        const PlanePoint& p = layout.plane_points.at(name);
        out[name] = json{{"center", json_codecs::vec3_to_json(pose.position)},
                         {"size", json_codecs::vec3_to_json(box.extent())},
                         {"box", box_to_json(box)},
                         {"plane", json::array({p.u, p.v})}};
    }
    return out;
}

bool near(const Vec3& a, const Vec3& b) {
    for (int k = 0; k < 3; ++k) {
        if (std::abs(a[k] - b[k]) > 1e-6 * std::max(1.0, std::abs(a[k]))) return false;
    }
    return true;
}

Layout layout_from(const json& doc, const std::string& origin) {
    if (!doc.is_object()) throw SchemaError(origin + ": layout must be an object");
    Layout layout;
    for (const auto& [name, entry] : doc.items()) {
        const std::string path = "/" + name;
        if (!entry.is_object()) throw SchemaError(path + ": expected an object");
        Pose pose;
        pose.position = json_codecs::vec3_from_json(json_codecs::require(entry, "center", path), path + "/center");
        const Vec3 size = json_codecs::vec3_from_json(json_codecs::require(entry, "size", path), path + "/size");
        if (!pose.position.is_finite() || !size.is_finite() || size.x <= 0.0 || size.y <= 0.0 || size.z <= 0.0) {
            throw SchemaError(path + ": center must be finite and size positive");
        }
        PlanePoint point;
        if (entry.contains("plane")) {
            const json& p = entry.at("plane");
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                throw SchemaError(path + "/plane: expected [u, v]");
            }
            point = {p[0].get<double>(), p[1].get<double>()};
        }
        layout.place(name, pose, size, point);
        if (entry.contains("box")) {
            const json& b = entry.at("box");
            if (!b.is_object()) throw SchemaError(path + "/box: expected an object");
            const Vec3 lo = json_codecs::vec3_from_json(json_codecs::require(b, "min", path + "/box"), path + "/box/min");
            const Vec3 hi = json_codecs::vec3_from_json(json_codecs::require(b, "max", path + "/box"), path + "/box/max");
            const Aabb& expected = layout.boxes.at(name);
            if (!near(lo, expected.min) || !near(hi, expected.max)) {
                throw SchemaError(path + "/box: does not match center and size");
            }
        }
    }
    return layout;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const MetricsReport& m) {
    return json{{"cf", m.cf},
                {"ib", m.ib},
                {"ib_violation_ratio", m.ib_violation_ratio},
                {"mean_iou", m.mean_iou},
                {"rho", m.rho},
                {"fc", m.fc},
                {"pos", optional_number(m.pos)},
                {"ali", optional_number(m.ali)},
                {"psf", optional_number(m.psf)}};
}

std::optional<double> read_optional(const json& doc, const char* key, const std::string& origin) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    if (!doc.at(key).is_number()) throw SchemaError(origin + ": /" + key + ": expected a number or null");
    return doc.at(key).get<double>();
}

MetricsReport metrics_from(const json& doc, const std::string& origin) {
    if (!doc.is_object()) throw SchemaError(origin + ": metrics must be an object");
    MetricsReport m;
    m.cf = json_codecs::require_number(doc, "cf", "");
    m.ib = json_codecs::require_number(doc, "ib", "");
    m.fc = json_codecs::require_number(doc, "fc", "");
    m.mean_iou = read_optional(doc, "mean_iou", origin).value_or(0.0);
    m.rho = read_optional(doc, "rho", origin).value_or(0.0);
    m.ib_violation_ratio = read_optional(doc, "ib_violation_ratio", origin).value_or(0.0);
    m.pos = read_optional(doc, "pos", origin);
    m.ali = read_optional(doc, "ali", origin);
    m.psf = read_optional(doc, "psf", origin);
    try {
        m.check();
    } catch (const InvariantError& e) {
        throw SchemaError(origin + ": " + e.what());
    }
    return m;
}

json meta_json(const RunMeta& meta) {
    return json{{"scenario", meta.scenario}, {"case", meta.case_index},         {"seed", meta.seed},
                {"mode", meta.mode},         {"objects", meta.objects},         {"boundary", json_codecs::boundary_to_json(meta.boundary)}};
}

RunMeta meta_from(const json& j) {
    const std::string path = "/run";
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    RunMeta meta;
    meta.scenario = json_codecs::require_string(j, "scenario", path);
    meta.case_index = static_cast<int>(json_codecs::require_number(j, "case", path));
    meta.seed = json_codecs::require(j, "seed", path).get<std::uint64_t>();
    meta.mode = json_codecs::require_string(j, "mode", path);
    const json& objects = json_codecs::require(j, "objects", path);
    if (!objects.is_array()) throw SchemaError(path + "/objects: expected an array");
    for (const auto& o : objects) {
        if (!o.is_string()) throw SchemaError(path + "/objects: expected strings");
        meta.objects.push_back(o.get<std::string>());
    }
    meta.boundary = json_codecs::boundary_from_json(json_codecs::require(j, "boundary", path), path + "/boundary");
    return meta;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string layout_to_json(const Layout& layout) { return dump(layout_json(layout)); }

Layout layout_from_json(std::string_view text, const std::string& origin) {
    return layout_from(json_codecs::parse_document(text, origin), origin);
}

std::string metrics_to_json(const MetricsReport& report) { return dump(metrics_json(report)); }

MetricsReport metrics_from_json(std::string_view text, const std::string& origin) {
    return metrics_from(json_codecs::parse_document(text, origin), origin);
}

std::string report_to_json(const RunReport& report, const RunMeta& meta) {
    json relations = json::array();
    for (const auto& r : report.surviving_relations.relations) relations.push_back(r.to_string());
    json dropped = json::array();
    for (const auto& d : report.surviving_relations.dropped) {
        dropped.push_back(json{{"relation", d.relation.to_string()}, {"reason", d.reason}});
    }
    json adjustments = json::array();
    for (const auto& a : report.adjustments) {
        adjustments.push_back(json{{"round", a.round},
                                   {"relation", a.relation},
                                   {"revision", a.revision},
                                   {"max_gap_frac", {a.old_max_gap_frac, a.new_max_gap_frac}},
                                   {"tolerance_frac", {a.old_tolerance_frac, a.new_tolerance_frac}},
                                   {"evidence", a.evidence}});
    }
    json rounds = json::array();
    for (const auto& r : report.rounds) {
        rounds.push_back(json{{"round", r.round},
                              {"description_iterations", r.description_iterations},
                              {"description_approved", r.description_approved},
                              {"relations", r.relations},
                              {"dropped", r.dropped},
                              {"repaired", r.repaired},
                              {"forced", r.forced},
                              {"groundings", r.groundings},
                              {"failed", r.failed},
                              {"error", r.error.empty() ? json(nullptr) : json(r.error)}});
    }
    json poses = json::object();
    for (const auto& [name, p] : report.coarse_poses.poses) poses[name] = json::array({p[0], p[1], p[2]});

    json doc{{"run", meta_json(meta)},
             {"solved", report.solved},
             {"rounds_used", report.rounds_used},
             {"error", report.error.empty() ? json(nullptr) : json(report.error)},
             {"description", report.description},
             {"coarse_poses", json{{"anchor", report.coarse_poses.anchor}, {"scale", report.coarse_poses.scale}, {"poses", poses}}},
             {"surviving_relations", relations},
             {"dropped_relations", dropped},
             {"synthesized_relations", report.synthesized_relations},
             {"adjustments", adjustments},
             {"rounds", rounds},
             {"metrics", metrics_json(report.metrics)},
             {"final_layout", layout_json(report.final_layout)},
             {"fingerprints", report.fingerprints}};
    return dump(doc);
}

std::string error_report_json(const std::string& error, const std::optional<RunMeta>& meta) {
    json doc{{"solved", false}, {"rounds_used", 0}, {"error", error}};
    if (meta) doc["run"] = meta_json(*meta);
    return dump(doc);
}

StoredReport report_from_json(std::string_view text, const std::string& origin) {
    const json doc = json_codecs::parse_document(text, origin);
    if (!doc.is_object()) throw SchemaError(origin + ": report must be an object");
    StoredReport out;
    const json& solved = json_codecs::require(doc, "solved", "");
    if (!solved.is_boolean()) throw SchemaError(origin + ": /solved: expected a boolean");
    out.solved = solved.get<bool>();
    out.rounds_used = static_cast<int>(json_codecs::require_number(doc, "rounds_used", ""));
    if (doc.contains("error") && doc.at("error").is_string()) out.error = doc.at("error").get<std::string>();
    if (doc.contains("run")) out.meta = meta_from(doc.at("run"));
    if (doc.contains("surviving_relations")) {
        const json& rels = doc.at("surviving_relations");
        if (!rels.is_array()) throw SchemaError(origin + ": /surviving_relations: expected an array");
        std::string lines;
        for (const auto& r : rels) {
            if (!r.is_string()) throw SchemaError(origin + ": /surviving_relations: expected strings");
            lines += r.get<std::string>() + "\n";
        }
        try {
            out.surviving_relations = parse_relation_lines(lines);
        } catch (const ParseError& e) {
            throw SchemaError(origin + ": /surviving_relations: " + e.what());
        }
    }
    if (doc.contains("metrics")) out.metrics = metrics_from(doc.at("metrics"), origin + ": /metrics");
    if (out.solved && !out.error.empty()) throw SchemaError(origin + ": solved report carries an error");
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace layoutforge
