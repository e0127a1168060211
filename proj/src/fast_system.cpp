#include "layoutforge/fast_system.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <sstream>

#include "layoutforge/errors.hpp"
#include "layoutforge/llm.hpp"

namespace layoutforge {

namespace {

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        out.push_back(trim(text.substr(start, end - start)));
        start = end + 1;
    }
    return out;
}

// Drops list decorations such as "- " or "3. " in front of a line.
std::string strip_bullet(const std::string& line) {
    static const std::regex bullet(R"(^(?:[-*]\s+|\d+[.)]\s+))");
    return std::regex_replace(line, bullet, "", std::regex_constants::format_first_only);
}

std::string unquote(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
        s = s.substr(1, s.size() - 2);
    }
    return trim(s);
}

std::string library_listing(const RelationLibrary& lib) {
    std::string out;
    for (const auto& [name, entry] : lib.entries()) {
        out += "- " + name + " (" + std::string(to_string(entry.def.arity)) + "): " + entry.def.definition;
        if (entry.def.rpc) {
            const Rpc& r = *entry.def.rpc;
            out += " RPC [" + std::to_string(r[0]) + ", " + std::to_string(r[1]) + ", " + std::to_string(r[2]) + "]";
        }
        out += "\n";
    }
    return out;
}

std::string pose_listing(const DiscretePoseSet& poses) {
    std::string out;
    for (const auto& [name, p] : poses.poses) {
        out += name + ": [" + std::to_string(p[0]) + ", " + std::to_string(p[1]) + ", " + std::to_string(p[2]) + "]\n";
    }
    return out;
}

bool involves(const RelationInstance& r, const std::string& obj) {
    return std::find(r.args.begin(), r.args.end(), obj) != r.args.end();
}

}  // namespace

bool TopoRelationSet::contains(const RelationInstance& r) const {
    return std::find(relations.begin(), relations.end(), r) != relations.end();
}

bool TopoRelationSet::add(RelationInstance r) {
    if (contains(r)) return false;
    relations.push_back(std::move(r));
    return true;
}

PoseBlock parse_pose_block(std::string_view block, const std::vector<std::string>& objects) {
    static const std::regex line_re(R"(^(.+?)\s*:\s*\[\s*([^,\]]+)\s*,\s*([^,\]]+)\s*,\s*([^,\]]+)\s*\]$)");

    std::vector<std::pair<std::string, std::array<double, 3>>> raw;
    bool fractional = false;
    for (const auto& line : split_lines(block)) {
        if (line.empty()) continue;
        const std::string text = strip_bullet(line);
        std::smatch m;
        if (!std::regex_match(text, m, line_re)) throw ParseError("unparseable pose line: " + line);
        std::array<double, 3> v{};
        for (int i = 0; i < 3; ++i) {
            try {
                std::size_t used = 0;
                const std::string num = trim(m[i + 2].str());
                v[i] = std::stod(num, &used);
                if (used != num.size() || !std::isfinite(v[i])) throw std::invalid_argument(num);
            } catch (const std::exception&) {
                throw ParseError("unparseable pose line: " + line);
            }
            fractional = fractional || v[i] != std::floor(v[i]);
        }
        raw.push_back({unquote(m[1].str()), v});
    }

    PoseBlock out;
    out.poses.scale = fractional ? 2 : 1;
    for (const auto& [name, v] : raw) {
        if (std::find(objects.begin(), objects.end(), name) == objects.end()) {
            out.ignored.push_back(name);
            continue;
        }
        if (out.poses.contains(name)) continue;
        LatticePoint p{};
        for (int i = 0; i < 3; ++i) p[i] = static_cast<int>(std::lround(v[i] * out.poses.scale));
        out.poses.poses[name] = p;
        if (out.poses.anchor.empty() && p == LatticePoint{0, 0, 0}) out.poses.anchor = name;
    }
    if (out.poses.anchor.empty()) throw ParseError("no anchor");
    for (const auto& obj : objects) {
        if (!out.poses.contains(obj)) out.missing.push_back(obj);
    }
    return out;
}

PoseBlock gen_discrete_coords(const SceneDescription& desc, const SceneSpec& scene, Gateway& gateway) {
    const std::string prompt = render_template(
        "fast_poses", {{"object_list", python_list(scene.object_names())}, {"scene_description", desc.text}});
    const std::string reply = gateway.complete(gateway.make_request(prompt, "fast_poses"));
    return parse_pose_block(parse_tagged_block(reply, "</pose>"), scene.object_names());
}

std::vector<RelationInstance> parse_relation_lines(std::string_view block) {
    static const std::regex call_re(R"(^([A-Za-z_][A-Za-z0-9_\-]*)\s*\((.*)\)\s*[,;.]?$)");
    std::vector<RelationInstance> out;
    for (const auto& line : split_lines(block)) {
        if (line.empty()) continue;
        const std::string text = strip_bullet(line);
        std::smatch m;
        if (!std::regex_match(text, m, call_re)) throw ParseError("unparseable relation line: " + line);
        RelationInstance r;
        r.relation = m[1].str();
        std::stringstream args(m[2].str());
        std::string arg;
        while (std::getline(args, arg, ',')) {
            arg = unquote(arg);
            if (arg.empty()) throw ParseError("empty argument in relation line: " + line);
            r.args.push_back(arg);
        }
        if (r.args.empty()) throw ParseError("relation without arguments: " + line);
        out.push_back(std::move(r));
    }
    return out;
}

void accept_relations(const std::vector<RelationInstance>& parsed, const SceneSpec& scene, const std::string& context,
                      RelationLibrary& lib, Gateway& gateway, TopoRelationSet& out) {
    for (const auto& r : parsed) {
        const auto unknown = std::find_if(r.args.begin(), r.args.end(),
                                          [&](const std::string& a) { return scene.find(a) == nullptr; });
        if (unknown != r.args.end()) {
            out.dropped.push_back({r, "unknown object: " + *unknown});
            continue;
        }
        if (!lib.contains(r.relation)) {
            lib.insert(synthesize_relation(r.relation, context, gateway, lib), Provenance::LlmSynthesized);
        }
        try {
            check_arity(r, lib.at(r.relation));
        } catch (const LibraryError& e) {
            out.dropped.push_back({r, e.what()});
            continue;
        }
        std::set<std::string> distinct(r.args.begin(), r.args.end());
        if (distinct.size() != r.args.size()) {
            out.dropped.push_back({r, "repeated argument"});
            continue;
        }
        out.add(r);
    }
}

TopoRelationSet extract_relations(const SceneDescription& desc, const SceneSpec& scene, RelationLibrary& lib,
                                  Gateway& gateway) {
    const std::string prompt = render_template("fast_relations", {{"object_list", python_list(scene.object_names())},
                                                                  {"scene_description", desc.text},
                                                                  {"relationship_library", library_listing(lib)}});
    const std::string reply = gateway.complete(gateway.make_request(prompt, "fast_relations"));
    TopoRelationSet out;
    accept_relations(parse_relation_lines(parse_tagged_block(reply, "</relationships>")), scene, desc.text, lib, gateway,
                     out);
    return out;
}

FilterResult consistency_filter(const DiscretePoseSet& poses, const TopoRelationSet& relations,
                                const RelationLibrary& lib, const std::vector<std::string>& objects) {
    FilterResult result;
    result.relations.dropped = relations.dropped;
    for (const auto& r : relations.relations) {
        const auto absent = std::find_if(r.args.begin(), r.args.end(),
                                         [&](const std::string& a) { return !poses.contains(a); });
        if (absent != r.args.end()) {
            result.relations.dropped.push_back({r, "object missing from coarse poses: " + *absent});
            continue;
        }
        if (!discrete_check(r, poses, lib)) {
            const bool relative = lib.at(r.relation).kind == RelationKind::Relative;
            result.relations.dropped.push_back({r, relative ? "rpc sign mismatch" : "alignment mismatch"});
            continue;
        }
        result.relations.add(r);
    }
    for (const auto& obj : objects) {
        if (!poses.contains(obj)) {
            result.incomplete.insert(obj);
            continue;
        }
        if (obj == poses.anchor) continue;
        const bool related = std::any_of(result.relations.relations.begin(), result.relations.relations.end(),
                                         [&](const RelationInstance& r) { return involves(r, obj); });
        if (!related) result.incomplete.insert(obj);
    }
    return result;
}

LatticePoint nearest_free_cell(const DiscretePoseSet& poses) {
    std::set<std::pair<int, int>> taken;
    for (const auto& [name, p] : poses.poses) taken.insert({p[0], p[1]});
    for (int radius = 1;; ++radius) {
        std::vector<std::pair<int, int>> ring;
        for (int y = -radius; y <= radius; ++y) {
            for (int x = -radius; x <= radius; ++x) {
                if (std::max(std::abs(x), std::abs(y)) == radius && !taken.count({x, y})) ring.push_back({x, y});
            }
        }
        if (ring.empty()) continue;
        // Closest first; behind the anchor before in front of it; then left to right.
        std::sort(ring.begin(), ring.end(), [](const auto& a, const auto& b) {
            const int da = a.first * a.first + a.second * a.second;
            const int db = b.first * b.first + b.second * b.second;
            if (da != db) return da < db;
            if ((a.second < 0) != (b.second < 0)) return a.second >= 0;
            if (std::abs(a.second) != std::abs(b.second)) return std::abs(a.second) < std::abs(b.second);
            return a.first < b.first;
        });
        return {ring.front().first, ring.front().second, 0};
    }
}

RepairResult repair_incomplete(const DiscretePoseSet& poses, const TopoRelationSet& relations,
                               const std::set<std::string>& incomplete, const SceneSpec& scene,
                               const SceneDescription& desc, RelationLibrary& lib, Gateway& gateway, int attempts) {
    if (incomplete.empty()) throw InvariantError("repair needs at least one incomplete object");
    poses.check();

    RepairResult out{poses, relations, {}, {}};
    const std::vector<std::string> objects = scene.object_names();
    for (const auto& obj : objects) {
        if (!incomplete.count(obj)) continue;

        bool fixed = false;
        for (int attempt = 0; attempt < attempts && !fixed; ++attempt) {
            std::string prompt = render_template(
                "fast_poses", {{"object_list", python_list({obj})}, {"scene_description", desc.text}});
            prompt += "\n\nCurrent coarse poses of the placed objects:\n</pose>\n" + pose_listing(out.poses) +
                      "</pose>\nGive the pose of " + obj +
                      " only, in the same lattice units. Also give at least one relationship that links it to a "
                      "placed object, one per line between the tokens </relationships> and </relationships>.\n";
            if (attempt > 0) prompt += "The previous answer did not place " + obj + " consistently. Try again.\n";

            const std::string reply = gateway.complete(gateway.make_request(prompt, "fast_poses"));
            DiscretePoseSet trial_poses = out.poses;
            TopoRelationSet trial_relations = out.relations;
            try {
                const std::string block = parse_tagged_block(reply, "</pose>");
                // parse_pose_block's anchor rule does not apply to a one-object answer.
                static const std::regex line_re(
                    R"(^(.+?)\s*:\s*\[\s*(-?[\d.]+)\s*,\s*(-?[\d.]+)\s*,\s*(-?[\d.]+)\s*\]$)");
                for (const auto& line : split_lines(block)) {
                    std::smatch m;
                    const std::string text = strip_bullet(line);
                    if (!std::regex_match(text, m, line_re) || unquote(m[1].str()) != obj) continue;
                    trial_poses.poses[obj] = {static_cast<int>(std::lround(std::stod(m[2].str()))),
                                              static_cast<int>(std::lround(std::stod(m[3].str()))),
                                              static_cast<int>(std::lround(std::stod(m[4].str())))};
                }
                if (!trial_poses.contains(obj)) continue;
                if (reply.find("</relationships>") != std::string::npos) {
                    accept_relations(parse_relation_lines(parse_tagged_block(reply, "</relationships>")), scene,
                                     desc.text, lib, gateway, trial_relations);
                }
            } catch (const ParseError&) {
                continue;
            }
            const FilterResult check = consistency_filter(trial_poses, trial_relations, lib, objects);
            if (!check.incomplete.count(obj)) {
                out.poses = std::move(trial_poses);
                out.relations = std::move(trial_relations);
                fixed = true;
            }
        }

        if (fixed) {
            out.repaired.push_back(obj);
            continue;
        }
        if (!out.poses.contains(obj)) out.poses.poses[obj] = nearest_free_cell(out.poses);
        out.relations.add({"near_of", {obj, out.poses.anchor}});
        out.forced.push_back(obj);
    }
    return out;
}

}  // namespace layoutforge
