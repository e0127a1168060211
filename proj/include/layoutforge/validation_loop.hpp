#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layoutforge/discrete.hpp"
#include "layoutforge/fast_system.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/grounding.hpp"
#include "layoutforge/metrics.hpp"
#include "layoutforge/relations.hpp"
#include "layoutforge/slow_system.hpp"

namespace layoutforge {

class Gateway;

struct LoopConfig {
    int max_rounds = 5;
    int max_adjustments_per_relation = 3;
    int regrounds_per_round = 2;
    int rrg_iterations = 3;
    int repair_attempts = 2;

    void check() const;
};

struct Adjustment {
    int round = 0;
    std::string relation;
    int revision = 0;  // revision after the change
    double old_max_gap_frac = 0.0;
    double new_max_gap_frac = 0.0;
    double old_tolerance_frac = 0.0;
    double new_tolerance_frac = 0.0;
    std::string evidence;
};

struct RoundSummary {
    int round = 0;
    int description_iterations = 0;
    bool description_approved = false;
    std::size_t relations = 0;
    std::size_t dropped = 0;
    std::vector<std::string> repaired;
    std::vector<std::string> forced;
    int groundings = 0;
    std::vector<std::string> failed;  // relations failing on the round's last grounding
    std::string error;                // set when the round was abandoned
};

struct RunReport {
    bool solved = false;
    int rounds_used = 0;
    Layout final_layout;
    TopoRelationSet surviving_relations;
    DiscretePoseSet coarse_poses;
    std::string description;
    std::vector<Adjustment> adjustments;
    std::vector<std::string> synthesized_relations;
    std::vector<RoundSummary> rounds;
    MetricsReport metrics;
    std::vector<std::string> fingerprints;
    std::string error;  // diagnostic when the run was aborted
    RelationLibrary library;  // the run's working copy, adjustments included
};

struct Stage1Result {
    SceneDescription description;
    DiscretePoseSet poses;
    TopoRelationSet relations;
    std::vector<std::string> repaired;
    std::vector<std::string> forced;
};

// Description, coarse poses, relations, consistency filter and repair.
Stage1Result run_stage1(const SceneSpec& scene, RelationLibrary& lib, Gateway& gateway, const LoopConfig& cfg,
                        std::string_view feedback = {});

// Relations that fail validation, in input order. Missing library entries
// raise LibraryError.
std::vector<RelationInstance> validate_layout(const Layout& layout, const TopoRelationSet& relations,
                                              const RelationLibrary& lib, const Boundary& boundary);

// Works on a private copy of `lib`. Gateway failures end the run early with
// `error` set and the best layout found so far.
RunReport run_closed_loop(const SceneSpec& scene, const RelationLibrary& lib, Gateway& gateway,
                          const LoopConfig& loop_cfg, const GroundingConfig& ground_cfg);

}  // namespace layoutforge
