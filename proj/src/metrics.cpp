#include "layoutforge/metrics.hpp"

#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "layoutforge/errors.hpp"
#include "layoutforge/llm.hpp"

namespace layoutforge {

namespace {

constexpr int kJudgeRetries = 2;

void check_percent(double v, const char* what) {
    if (!(v >= 0.0 && v <= 100.0)) throw InvariantError(std::string(what) + " must lie in [0, 100]");
}

}  // namespace

CollisionStats collision_free_score(const Layout& layout, double tau) {
    CollisionStats out;
    std::vector<const Aabb*> boxes;
    for (const auto& [_, box] : layout.boxes) boxes.push_back(&box);
    double iou_sum = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            ++out.pairs;
            const double v = iou(*boxes[i], *boxes[j]);
            if (v > tau) {
                ++out.colliding;
                iou_sum += v;
            }
        }
    }
    if (out.pairs) {
        out.rho = static_cast<double>(out.colliding) / static_cast<double>(out.pairs);
        out.cf = 1.0 - out.rho;
    }
    if (out.colliding) out.mean_iou = iou_sum / static_cast<double>(out.colliding);
    return out;
}

BoundaryStats in_boundary_score(const Layout& layout, const Boundary& boundary) {
    BoundaryStats out;
    std::vector<const Aabb*> boxes;
    for (const auto& [_, box] : layout.boxes) {
        boxes.push_back(&box);
        if (!inside_boundary(box, boundary)) ++out.outside;
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            const Aabb& a = *boxes[i];
            const Aabb& b = *boxes[j];
            if (!is_stacking_pair(a, b)) continue;
            ++out.stacking_pairs;
            const bool a_below = a.max.z <= b.min.z;
            if (!footprint_contains(a_below ? a : b, a_below ? b : a)) ++out.unsupported;
        }
    }
    const std::size_t denom = boxes.size() + out.stacking_pairs;
    if (denom) {
        out.violation_ratio = static_cast<double>(out.outside + out.unsupported) / static_cast<double>(denom);
        out.ib = 1.0 - out.violation_ratio;
    }
    return out;
}

double functional_completeness(const std::vector<std::string>& requested, const Layout& layout) {
    if (requested.empty()) throw InvariantError("requested object list is empty");
    const std::set<std::string> unique(requested.begin(), requested.end());
    std::size_t placed = 0;
    for (const auto& name : unique) placed += layout.contains(name) ? 1 : 0;
    return static_cast<double>(placed) / static_cast<double>(unique.size());
}

double psf(double cf, double ib, double pos, double ali, double fc) {
    check_percent(cf, "cf");
    check_percent(ib, "ib");
    check_percent(pos, "pos");
    check_percent(ali, "ali");
    check_percent(fc, "fc");
    return 0.4 * ((cf + ib) / 2.0) + 0.3 * ((pos + ali) / 2.0) + 0.3 * fc;
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

JudgeScores parse_judge_scores(std::string_view reply) {
    const std::string block = parse_tagged_block(reply, "</scores>");
    static const std::regex line_re(R"(^\s*[-*]?\s*(pos|ali)\.?\s*[:=]\s*(\d{1,3})\s*$)", std::regex::icase);
    std::optional<int> pos, ali;
    std::istringstream in(block);
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_match(line, m, line_re)) continue;
        const int v = std::stoi(m[2].str());
        if (v > 100) throw ParseError("judge score out of range: " + trim(line));
        std::string key = m[1].str();
        for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        (key == "pos" ? pos : ali) = v;
    }
    if (!pos) throw ParseError("judge reply lacks a pos score");
    if (!ali) throw ParseError("judge reply lacks an ali score");
    return {static_cast<double>(*pos), static_cast<double>(*ali)};
}

JudgeScores semantic_scores_llm(const std::string& render, const std::string& instruction, Gateway& gateway) {
    const std::string prompt =
        render_template("judge_pos_ali", {{"task_instruction", instruction}, {"layout_render", render}});
    std::string attempt_prompt = prompt;
    std::string reason;
    for (int attempt = 0; attempt <= kJudgeRetries; ++attempt) {
        const std::string reply = gateway.complete(gateway.make_request(attempt_prompt, "judge_pos_ali"));
        try {
            return parse_judge_scores(reply);
        } catch (const ParseError& e) {
            reason = e.what();
        }
        attempt_prompt = prompt + "\n\nYour previous answer could not be used (" + reason +
                         "). Answer again and follow the output format exactly.\n";
    }
    throw ParseError("judge unparseable: " + reason);
}

void MetricsReport::check() const {
    check_percent(cf, "cf");
    check_percent(ib, "ib");
    check_percent(fc, "fc");
    if (pos) check_percent(*pos, "pos");
    if (ali) check_percent(*ali, "ali");
    if (psf) check_percent(*psf, "psf");
    if (!(mean_iou >= 0.0 && mean_iou <= 1.0)) throw InvariantError("mean_iou must lie in [0, 1]");
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvariantError("rho must lie in [0, 1]");
    if (!(ib_violation_ratio >= 0.0 && ib_violation_ratio <= 1.0)) {
        throw InvariantError("ib_violation_ratio must lie in [0, 1]");
    }
    if (psf && (!pos || !ali)) throw InvariantError("psf requires pos and ali");
}

MetricsReport evaluate_layout(const Layout& layout, const Boundary& boundary, const std::vector<std::string>& requested,
                              double tau) {
    const CollisionStats c = collision_free_score(layout, tau);
    const BoundaryStats b = in_boundary_score(layout, boundary);
    MetricsReport r;
    r.cf = round1(100.0 * c.cf);
    r.rho = c.rho;
    r.mean_iou = c.mean_iou;
    r.ib = round1(100.0 * b.ib);
    r.ib_violation_ratio = b.violation_ratio;
    r.fc = round1(100.0 * functional_completeness(requested, layout));
    return r;
}

void attach_semantic(MetricsReport& report, const JudgeScores& scores) {
    report.pos = round1(scores.pos);
    report.ali = round1(scores.ali);
    report.psf = round1(psf(report.cf, report.ib, *report.pos, *report.ali, report.fc));
}

}  // namespace layoutforge
