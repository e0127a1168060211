#include "layoutforge/mock_policy.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "layoutforge/errors.hpp"
#include "layoutforge/slow_system.hpp"

namespace layoutforge {

namespace {

struct StackRule {
    const char* top;
    const char* base;
};

constexpr StackRule kStackRules[] = {
    {"cup", "cup saucer"}, {"mug", "cup saucer"}, {"coffee cup", "cup saucer"},
    {"candle", "candleholder"}, {"bowl", "plate"}, {"cake", "plate"},
};

constexpr const char* kAnchorPriority[] = {"plate", "notebook", "monitor", "tray", "mirror", "folder", "paper"};

const std::string kRepairMarker = "Current coarse poses";
const std::string kCorrectionMarker = "Corrections requested";

using Cell = std::pair<int, int>;

Vec3 size_or_default(const SizeCatalog& catalog, const std::string& name) {
    if (auto v = catalog.find(name)) return *v;
    return {10.0, 10.0, 10.0};
}

std::string suffix_of(const std::string& name) {
    const std::string base = base_category(name);
    return name.substr(base.size());
}

// Rest of the line following `label`, or empty when absent.
std::string line_after(const std::string& text, const std::string& label) {
    const auto pos = text.find(label);
    if (pos == std::string::npos) return {};
    const auto start = pos + label.size();
    const auto end = text.find('\n', start);
    return trim(std::string_view(text).substr(start, end == std::string::npos ? std::string::npos : end - start));
}

std::vector<std::string> parse_name_list(const std::string& literal) {
    static const std::regex item(R"('([^']*)')");
    std::vector<std::string> out;
    for (auto it = std::sregex_iterator(literal.begin(), literal.end(), item); it != std::sregex_iterator(); ++it) {
        out.push_back((*it)[1].str());
    }
    return out;
}

std::string point_text(const LatticePoint& p) {
    std::ostringstream out;
    out << '[' << p[0] << ", " << p[1] << ", " << p[2] << ']';
    return out.str();
}

// Relation tying a free cell to an occupied neighbour: the cell in front of
// it, else the cell toward the centre line, else the diagonal one.
std::optional<RelationInstance> relate_to_neighbour(const std::string& obj, Cell cell,
                                                    const std::map<Cell, std::string>& occupied) {
    const auto [x, y] = cell;
    const int toward = x > 0 ? 1 : (x < 0 ? -1 : 0);
    if (auto it = occupied.find({x, y - 1}); it != occupied.end()) {
        return RelationInstance{"above_of", {obj, it->second}};
    }
    if (toward != 0) {
        if (auto it = occupied.find({x - toward, y}); it != occupied.end()) {
            return RelationInstance{toward > 0 ? "right_of" : "left_of", {obj, it->second}};
        }
        if (auto it = occupied.find({x - toward, y - 1}); it != occupied.end()) {
            return RelationInstance{toward > 0 ? "right_above_of" : "left_above_of", {obj, it->second}};
        }
    }
    return std::nullopt;
}

std::string sentence_for(const RelationInstance& r) {
    const auto& a = r.args;
    if (r.relation == "left_of") return "The " + a[0] + " is placed on the left side of the " + a[1] + " (*x* axis).";
    if (r.relation == "right_of") return "The " + a[0] + " is placed on the right side of the " + a[1] + " (*x* axis).";
    if (r.relation == "above_of") {
        return "The " + a[0] + " is placed above the " + a[1] + " on the table plane, farther from the user (*y* axis).";
    }
    if (r.relation == "right_above_of") return "The " + a[0] + " is placed on the top right of the " + a[1] + " (*xy* axis).";
    if (r.relation == "left_above_of") return "The " + a[0] + " is placed on the top left of the " + a[1] + " (*xy* axis).";
    if (r.relation == "on_top_of") return "The " + a[0] + " rests on top of the " + a[1] + " (*z* axis), centered on it.";
    if (r.relation == "aligned_in_x_axis") {
        std::string s = "The ";
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i) s += (i + 1 == a.size()) ? " and the " : ", the ";
            s += a[i];
        }
        return s + " are aligned in the x axis.";
    }
    return {};
}

}  // namespace

std::vector<std::pair<int, int>> slot_sequence(std::size_t count) {
    std::vector<Cell> out;
    for (int k = 1; out.size() < count; ++k) {
        for (int y = 0; y < k; ++y) {
            out.push_back({k, y});
            out.push_back({-k, y});
        }
        out.push_back({0, k});
        for (int x = 1; x <= k; ++x) {
            out.push_back({x, k});
            out.push_back({-x, k});
        }
    }
    out.resize(count);
    return out;
}

std::optional<Rpc> rpc_from_name(const std::string& name) {
    Rpc rpc{0, 0, 0};
    bool any = false;
    std::stringstream words(name);
    std::string w;
    while (std::getline(words, w, '_')) {
        if (w == "left") rpc[0] = -1;
        else if (w == "right") rpc[0] = 1;
        else if (w == "above" || w == "behind" || w == "back") rpc[1] = 1;
        else if (w == "below" || w == "front") rpc[1] = -1;
        else if (w == "top") rpc[2] = 1;
        else if (w == "under" || w == "beneath") rpc[2] = -1;
        else if (w == "near" || w == "beside" || w == "next") { any = true; continue; }
        else continue;
        any = true;
    }
    if (rpc[2] != 0) rpc[1] = 0;
    if (!any) return std::nullopt;
    return rpc;
}

ArrangementPlan plan_arrangement(const std::vector<std::string>& objects, const SizeCatalog& catalog) {
    if (objects.empty()) throw InvariantError("cannot arrange an empty object list");
    auto footprint = [&](const std::string& n) {
        const Vec3 s = size_or_default(catalog, n);
        return s.x * s.y;
    };

    std::map<std::string, std::string> base_of;  // top -> base
    std::set<std::string> bases;
    for (const auto& obj : objects) {
        const std::string cat = base_category(obj);
        for (const auto& rule : kStackRules) {
            if (cat != rule.top) continue;
            const std::string* pick = nullptr;
            for (const auto& cand : objects) {
                if (base_category(cand) != rule.base || bases.count(cand) || base_of.count(cand)) continue;
                if (suffix_of(cand) == suffix_of(obj)) {
                    pick = &cand;
                    break;
                }
                if (!pick) pick = &cand;
            }
            if (pick) {
                base_of[obj] = *pick;
                bases.insert(*pick);
            }
            break;
        }
    }

    std::vector<std::string> grounded;
    for (const auto& obj : objects) {
        if (!base_of.count(obj)) grounded.push_back(obj);
    }

    ArrangementPlan plan;
    for (const char* preferred : kAnchorPriority) {
        for (const auto& obj : grounded) {
            if (base_category(obj) == preferred) {
                plan.anchor = obj;
                break;
            }
        }
        if (!plan.anchor.empty()) break;
    }
    if (plan.anchor.empty()) {
        plan.anchor = *std::max_element(grounded.begin(), grounded.end(), [&](const auto& a, const auto& b) {
            return footprint(a) < footprint(b);
        });
    }

    std::vector<std::string> rest;
    for (const auto& obj : grounded) {
        if (obj != plan.anchor) rest.push_back(obj);
    }
    std::stable_sort(rest.begin(), rest.end(), [&](const auto& a, const auto& b) { return footprint(a) > footprint(b); });

    std::map<Cell, std::string> occupied{{{0, 0}, plan.anchor}};
    plan.poses[plan.anchor] = {0, 0, 0};
    plan.relations.push_back({"central_column", {plan.anchor}});
    plan.relations.push_back({"near_front_edge", {plan.anchor}});
    plan.sentences.push_back({"The " + plan.anchor +
                                  " is the anchor of the layout, centered along the x axis near the front edge "
                                  "of the table.",
                              {plan.anchor}});

    const auto slots = slot_sequence(rest.size());
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const Cell cell = slots[i];
        plan.poses[rest[i]] = {cell.first, cell.second, 0};
        if (auto rel = relate_to_neighbour(rest[i], cell, occupied)) {
            plan.sentences.push_back({sentence_for(*rel), rel->args});
            plan.relations.push_back(std::move(*rel));
        }
        occupied[cell] = rest[i];
    }

    std::vector<std::pair<int, std::string>> row;
    for (const auto& [cell, name] : occupied) {
        if (cell.second == 0) row.push_back({cell.first, name});
    }
    if (row.size() >= 2) {
        RelationInstance align{"aligned_in_x_axis", {}};
        for (const auto& entry : row) align.args.push_back(entry.second);
        plan.sentences.push_back({sentence_for(align), align.args});
        plan.relations.push_back(std::move(align));
    }

    for (const auto& obj : objects) {
        auto it = base_of.find(obj);
        if (it == base_of.end()) continue;
        const LatticePoint& b = plan.poses.at(it->second);
        plan.poses[obj] = {b[0], b[1], b[2] + 1};
        RelationInstance on{"on_top_of", {obj, it->second}};
        plan.sentences.push_back({sentence_for(on), on.args});
        plan.relations.push_back(std::move(on));
        plan.relations.push_back({"align_z-axis_at_center", {obj, it->second}});
    }
    return plan;
}

ScriptedProvider::ScriptedProvider(std::string policy, int judge_pos, int judge_ali, SizeCatalog catalog)
    : policy_(std::move(policy)), judge_pos_(judge_pos), judge_ali_(judge_ali), catalog_(std::move(catalog)) {
    const auto colon = policy_.find(':');
    mode_ = policy_.substr(0, colon);
    if (colon != std::string::npos) target_ = policy_.substr(colon + 1);
    const bool needs_target = mode_ == "omit" || mode_ == "omit_once" || mode_ == "describe_omit";
    const bool plain = mode_ == "arranger" || mode_ == "never_approve" || mode_ == "gibberish";
    if ((needs_target && target_.empty()) || (!needs_target && !plain) || (plain && colon != std::string::npos)) {
        throw InvariantError("unknown mock policy: " + policy_);
    }
    if (judge_pos < 0 || judge_pos > 100 || judge_ali < 0 || judge_ali > 100) {
        throw InvariantError("mock judge scores must lie in [0, 100]");
    }
}

std::string ScriptedProvider::complete(const ChatRequest& request) {
    if (mode_ == "gibberish") return "I would rather talk about the weather today.";
    const std::string& prompt = request.messages.back().text;
    const std::string& p = request.purpose;
    if (p == "rrg_describe") return describe(prompt);
    if (p == "rrg_critique") return critique(prompt);
    if (p == "fast_poses") return prompt.find(kRepairMarker) != std::string::npos ? repair(prompt) : poses(prompt);
    if (p == "fast_relations") return relations(prompt);
    if (p == "arl_define") return define_relation(prompt);
    if (p == "arl_constraint") return constrain_relation(prompt);
    if (p == "arl_validation") return "</validation>\n{\"tolerance_frac\": 1.5, \"max_adjustments\": 3}\n</validation>\n";
    if (p == "judge_pos_ali") {
        return "</scores>\npos: " + std::to_string(judge_pos_) + "\nali: " + std::to_string(judge_ali_) + "\n</scores>\n";
    }
    throw GatewayError("mock provider cannot answer purpose \"" + p + "\"");
}

std::string ScriptedProvider::describe(const std::string& prompt) const {
    const auto objects = parse_name_list(line_after(prompt, "- Object List: "));
    const ArrangementPlan plan = plan_arrangement(objects, catalog_);
    const bool corrected = prompt.find(kCorrectionMarker) != std::string::npos;
    const bool hide = mode_ == "describe_omit" && !corrected;

    std::string text;
    for (const auto& [sentence, named] : plan.sentences) {
        if (sentence.empty()) continue;
        if (hide && std::find(named.begin(), named.end(), target_) != named.end()) continue;
        if (!text.empty()) text += '\n';
        text += sentence;
    }
    const std::string task = line_after(prompt, "- Task Instruction: ");
    return "The layout follows the task: " + task + "\n</Description>\n" + text + "\n</Description>\n";
}

std::string ScriptedProvider::critique(const std::string& prompt) const {
    const auto objects = parse_name_list(line_after(prompt, "- Object List: "));
    const auto begin = prompt.find("- Description: ");
    const auto end = prompt.rfind("\n- Output:");
    const std::string description =
        begin == std::string::npos ? std::string{} : prompt.substr(begin, end == std::string::npos ? end : end - begin);

    std::vector<std::string> issues;
    const auto mentioned = find_mentions(description, objects);
    for (const auto& obj : objects) {
        if (!mentioned.count(obj)) issues.push_back("The `" + obj + "` is not described.");
    }
    if (mode_ == "never_approve") issues.push_back("The arrangement leaves too little free space in front of the user.");

    if (issues.empty()) return "Every object is placed sensibly.\n</output>\nTrue\n</output>\n";
    std::string out = "</issue>\n";
    for (std::size_t i = 0; i < issues.size(); ++i) out += std::to_string(i + 1) + ". " + issues[i] + "\n";
    return out + "</issue>\n</output>\nFalse\n</output>\n";
}

std::string ScriptedProvider::poses(const std::string& prompt) const {
    const auto objects = parse_name_list(line_after(prompt, "- Object List: "));
    const ArrangementPlan plan = plan_arrangement(objects, catalog_);
    const bool omit = mode_ == "omit" || mode_ == "omit_once";
    std::string out = "</pose>\n";
    for (const auto& obj : objects) {
        if (omit && obj == target_) continue;
        out += obj + ": " + point_text(plan.poses.at(obj)) + "\n";
    }
    return out + "</pose>\n";
}

std::string ScriptedProvider::repair(const std::string& prompt) const {
    const auto objects = parse_name_list(line_after(prompt, "- Object List: "));
    const std::string context = prompt.substr(prompt.find(kRepairMarker));
    if (objects.size() != 1) throw GatewayError("mock repair expects exactly one object");
    const std::string& obj = objects.front();
    if (mode_ == "omit" && obj == target_) return "</pose>\n</pose>\n";

    static const std::regex line(R"(^\s*(.+?)\s*:\s*\[\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\]\s*$)");
    std::map<Cell, std::string> occupied;
    std::stringstream block(parse_tagged_block(context, "</pose>"));
    std::string text;
    while (std::getline(block, text)) {
        std::smatch m;
        if (!std::regex_match(text, m, line)) continue;
        if (std::stoi(m[4].str()) != 0) continue;
        occupied[{std::stoi(m[2].str()), std::stoi(m[3].str())}] = m[1].str();
    }
    if (!occupied.count({0, 0})) throw GatewayError("mock repair found no anchor");

    Cell cell{0, 0};
    for (std::size_t n = 1;; ++n) {
        const auto seq = slot_sequence(n);
        if (!occupied.count(seq.back())) {
            cell = seq.back();
            break;
        }
    }
    std::string out = "</pose>\n" + obj + ": " + point_text({cell.first, cell.second, 0}) + "\n</pose>\n";
    if (auto rel = relate_to_neighbour(obj, cell, occupied)) {
        out += "</relationships>\n" + rel->to_string() + "\n</relationships>\n";
    }
    return out;
}

std::string ScriptedProvider::relations(const std::string& prompt) const {
    const auto objects = parse_name_list(line_after(prompt, "- Object List: "));
    const ArrangementPlan plan = plan_arrangement(objects, catalog_);
    std::string out = "</relationships>\n";
    for (const auto& r : plan.relations) out += r.to_string() + "\n";
    return out + "</relationships>\n";
}

std::string ScriptedProvider::define_relation(const std::string& prompt) const {
    const std::string name = line_after(prompt, "incomplete relationship: ");
    nlohmann::json body;
    const bool alignment = name.rfind("align", 0) == 0;
    const bool anchoring = name.rfind("central", 0) == 0 || (name.rfind("near_", 0) == 0 && name.find("edge") != std::string::npos);
    if (alignment) {
        body["type"] = "Nary";
        body["definition"] = "The objects are lined up with their volume centers on a common line.";
    } else if (anchoring) {
        body["type"] = "Unary";
        body["definition"] = "Obj_A is placed in a fixed region of the table surface.";
    } else {
        const Rpc rpc = rpc_from_name(name).value_or(Rpc{0, 0, 0});
        body["type"] = "Binary";
        body["definition"] = "Obj_A is placed next to Obj_B in the direction given by the name, within a small gap.";
        body["RPC"] = {rpc[0], rpc[1], rpc[2]};
    }
    return "</new_relationship>" + nlohmann::json{{name, body}}.dump() + "</new_relationship>\n";
}

std::string ScriptedProvider::constrain_relation(const std::string& prompt) const {
    const std::string name = line_after(prompt, "- relationship name: ");
    nlohmann::json spec{{"min_gap_frac", 0.01}, {"max_gap_frac", 0.06}, {"falloff_frac", 0.05}};
    spec["primary_axis"] = "none";
    spec["overlap_axis"] = "none";
    spec["require_overlap"] = false;
    spec["align_mode"] = "none";
    spec["anchor_zone"] = nullptr;
    if (name.rfind("align", 0) == 0) {
        const bool z = name.find("z-axis") != std::string::npos || name.find("_z") != std::string::npos;
        const bool y = name.find("_y") != std::string::npos;
        spec["align_mode"] = z ? "center_z" : (y ? "center_y" : "center_x");
        spec["falloff_frac"] = 0.02;
    } else if (name.rfind("central", 0) == 0 || name.rfind("near_", 0) == 0) {
        spec["anchor_zone"] = name.rfind("central", 0) == 0 ? "central_column" : name;
    } else if (const auto rpc = rpc_from_name(name)) {
        const bool x = (*rpc)[0] != 0;
        const bool y = (*rpc)[1] != 0;
        if ((*rpc)[2] != 0) {
            spec["primary_axis"] = "z";
            spec["overlap_axis"] = "xy";
            spec["require_overlap"] = true;
        } else if (x && y) {
            spec["primary_axis"] = "xy";
        } else if (x) {
            spec["primary_axis"] = "x";
            spec["overlap_axis"] = "y";
            spec["require_overlap"] = true;
        } else if (y) {
            spec["primary_axis"] = "y";
            spec["overlap_axis"] = "x";
            spec["require_overlap"] = true;
        }
    }
    return "</func>\n" + spec.dump() + "\n</func>\n";
}

}  // namespace layoutforge
