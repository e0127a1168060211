#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layoutforge/geometry.hpp"

namespace layoutforge {

class Gateway;

struct CollisionStats {
    double cf = 1.0;  // fraction of pairs not colliding
    double rho = 0.0;
    double mean_iou = 0.0;  // over colliding pairs only
    std::size_t pairs = 0;
    std::size_t colliding = 0;
};

// A pair collides when its IoU exceeds tau.
CollisionStats collision_free_score(const Layout& layout, double tau = 0.01);

struct BoundaryStats {
    double ib = 1.0;
    double violation_ratio = 0.0;
    std::size_t outside = 0;         // objects out of bounds or below the surface
    std::size_t stacking_pairs = 0;
    std::size_t unsupported = 0;     // stacking pairs whose bottom does not hold the top
};

BoundaryStats in_boundary_score(const Layout& layout, const Boundary& boundary);

// Share of requested names present in the layout; extras are ignored.
double functional_completeness(const std::vector<std::string>& requested, const Layout& layout);

// Inputs and result in percent.
double psf(double cf, double ib, double pos, double ali, double fc);

double round1(double value);

struct JudgeScores {
    double pos = 0.0;
    double ali = 0.0;
};

// Reads `pos: N` and `ali: M` (integers 0-100) from the </scores> block.
JudgeScores parse_judge_scores(std::string_view reply);

// Asks the judge template for Pos./Ali.; two retries, then
// ParseError("judge unparseable: ...").
JudgeScores semantic_scores_llm(const std::string& render, const std::string& instruction, Gateway& gateway);

// Percents rounded to one decimal; pos/ali/psf stay empty without a judge.
struct MetricsReport {
    double cf = 100.0;
    double ib = 100.0;
    double ib_violation_ratio = 0.0;
    double mean_iou = 0.0;
    double rho = 0.0;
    double fc = 100.0;
    std::optional<double> pos;
    std::optional<double> ali;
    std::optional<double> psf;

    // Throws InvariantError on out-of-range fields or a psf without pos/ali.
    void check() const;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport evaluate_layout(const Layout& layout, const Boundary& boundary, const std::vector<std::string>& requested,
                              double tau = 0.01);

// Sets pos/ali and the psf that follows from them.
void attach_semantic(MetricsReport& report, const JudgeScores& scores);

}  // namespace layoutforge
