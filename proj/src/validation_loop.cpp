#include "layoutforge/validation_loop.hpp"

#include <algorithm>
#include <set>

#include "layoutforge/errors.hpp"
#include "layoutforge/llm.hpp"

namespace layoutforge {

namespace {

struct Candidate {
    Layout layout;
    Stage1Result stage1;
    double proxy = -1.0;
    std::size_t failures = 0;
};

// Physical part of PSF: the best-so-far ranking when nothing validates.
double physical_proxy(const MetricsReport& m) { return 0.4 * (m.cf + m.ib) / 2.0 + 0.3 * m.fc; }

bool physically_full(const FitnessBreakdown& f) {
    return f.collision_score == 1.0 && f.boundary_score == 1.0 && f.stability_score == 1.0;
}

std::string round_feedback(const std::vector<RelationInstance>& failed, bool physical) {
    std::string out = "\n\nThe previous layout could not be completed.";
    if (!failed.empty()) {
        out += " These relationships could not be satisfied:\n";
        for (const auto& r : failed) out += "- " + r.to_string() + "\n";
    } else {
        out += "\n";
    }
    if (physical) out += "Objects collided or did not fit on the surface.\n";
    out += "Describe a different arrangement.\n";
    return out;
}

std::uint64_t grounding_seed(std::uint64_t base, int round, int attempt) {
    return base + static_cast<std::uint64_t>(round - 1) * 16u + static_cast<std::uint64_t>(attempt);
}

}  // namespace

void LoopConfig::check() const {
    if (max_rounds < 1 || max_adjustments_per_relation < 1 || regrounds_per_round < 1 || rrg_iterations < 1 ||
        repair_attempts < 1) {
        throw InvariantError("loop limits must be >= 1");
    }
}

Stage1Result run_stage1(const SceneSpec& scene, RelationLibrary& lib, Gateway& gateway, const LoopConfig& cfg,
                        std::string_view feedback) {
    Stage1Result out;
    out.description = rrg(scene, lib, gateway, cfg.rrg_iterations, feedback);
    const PoseBlock block = gen_discrete_coords(out.description, scene, gateway);
    const TopoRelationSet extracted = extract_relations(out.description, scene, lib, gateway);
    const std::vector<std::string> names = scene.object_names();
    FilterResult filtered = consistency_filter(block.poses, extracted, lib, names);
    if (filtered.incomplete.empty()) {
        out.poses = block.poses;
        out.relations = std::move(filtered.relations);
        return out;
    }
    RepairResult repaired = repair_incomplete(block.poses, filtered.relations, filtered.incomplete, scene,
                                              out.description, lib, gateway, cfg.repair_attempts);
    out.poses = std::move(repaired.poses);
    out.relations = std::move(repaired.relations);
    out.repaired = std::move(repaired.repaired);
    out.forced = std::move(repaired.forced);
    return out;
}

std::vector<RelationInstance> validate_layout(const Layout& layout, const TopoRelationSet& relations,
                                              const RelationLibrary& lib, const Boundary& boundary) {
    std::vector<RelationInstance> failed;
    for (const auto& r : relations.relations) {
        if (!validate(r, layout, boundary, lib)) failed.push_back(r);
    }
    return failed;
}

RunReport run_closed_loop(const SceneSpec& scene, const RelationLibrary& lib, Gateway& gateway,
                          const LoopConfig& loop_cfg, const GroundingConfig& ground_cfg) {
    scene.check();
    loop_cfg.check();
    ground_cfg.check();

    RunReport report;
    report.library = lib;
    RelationLibrary& work = report.library;
    const std::vector<std::string> requested = scene.object_names();
    std::optional<Candidate> best;
    std::vector<RelationInstance> last_failed;
    bool last_physical_failure = false;

    auto finish = [&]() -> RunReport& {
        if (best) {
            report.final_layout = best->layout;
            report.surviving_relations = best->stage1.relations;
            report.coarse_poses = best->stage1.poses;
            report.description = best->stage1.description.text;
        }
        report.metrics = evaluate_layout(report.final_layout, scene.boundary, requested);
        for (const auto& name : work.names()) {
            if (!lib.contains(name)) report.synthesized_relations.push_back(name);
        }
        report.fingerprints = gateway.fingerprints_used();
        return report;
    };

    for (int round = 1; round <= loop_cfg.max_rounds; ++round) {
        report.rounds_used = round;
        RoundSummary summary;
        summary.round = round;
        const std::string feedback = round > 1 ? round_feedback(last_failed, last_physical_failure) : std::string{};
        try {
            Stage1Result stage1 = run_stage1(scene, work, gateway, loop_cfg, feedback);
            summary.description_iterations = stage1.description.iterations_used;
            summary.description_approved = stage1.description.approved;
            summary.relations = stage1.relations.relations.size();
            summary.dropped = stage1.relations.dropped.size();
            summary.repaired = stage1.repaired;
            summary.forced = stage1.forced;

            for (int attempt = 0; attempt <= loop_cfg.regrounds_per_round; ++attempt) {
                GroundingConfig cfg = ground_cfg;
                cfg.rng_seed = grounding_seed(ground_cfg.rng_seed, round, attempt);
                GroundingResult grounded = ground(stage1.poses, stage1.relations, work, scene, cfg);
                ++summary.groundings;

                const std::vector<RelationInstance> failed =
                    validate_layout(grounded.layout, stage1.relations, work, scene.boundary);
                const bool physical = physically_full(grounded.evolution.fitness);
                const double proxy = physical_proxy(evaluate_layout(grounded.layout, scene.boundary, requested));
                if (!best || proxy > best->proxy || (proxy == best->proxy && failed.size() < best->failures)) {
                    best = Candidate{grounded.layout, stage1, proxy, failed.size()};
                }
                summary.failed.clear();
                for (const auto& r : failed) summary.failed.push_back(r.to_string());
                last_failed = failed;
                last_physical_failure = !physical;

                if (failed.empty() && physical) {
                    best = Candidate{grounded.layout, stage1, proxy, 0};
                    report.solved = true;
                    break;
                }
                if (attempt == loop_cfg.regrounds_per_round) break;

                std::set<std::string> seen;
                bool exhausted = !failed.empty();
                for (const auto& r : failed) {
                    if (!seen.insert(r.relation).second) continue;
                    const RelationDef& def = work.at(r.relation);
                    if (def.revision >= loop_cfg.max_adjustments_per_relation) continue;
                    try {
                        const FailureEvidence evidence = diagnose_failure(r, grounded.layout, scene.boundary, work);
                        RelationDef next = adjust_parameters(def, evidence);
                        report.adjustments.push_back({round, r.relation, next.revision, def.constraint.max_gap_frac,
                                                      next.constraint.max_gap_frac, def.validation.tolerance_frac,
                                                      next.validation.tolerance_frac, evidence.excerpt});
                        work.replace(std::move(next), Provenance::Adjusted);
                        exhausted = false;
                    } catch (const AdjustmentLimitError&) {
                    }
                }
                if (exhausted) break;
            }
        } catch (const GatewayError& e) {
            summary.error = e.what();
            report.rounds.push_back(std::move(summary));
            report.error = e.what();
            return finish();
        } catch (const ParseError& e) {
            summary.error = e.what();
        } catch (const SynthesisError& e) {
            summary.error = e.what();
        } catch (const GroundingError& e) {
            summary.error = e.what();
        }
        report.rounds.push_back(std::move(summary));
        if (report.solved) break;
    }
    return finish();
}

}  // namespace layoutforge
