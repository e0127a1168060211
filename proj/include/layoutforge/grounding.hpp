#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "layoutforge/discrete.hpp"
#include "layoutforge/fast_system.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/relations.hpp"

namespace layoutforge {

struct GroundingConfig {
    double plane_w = 600.0;
    double plane_h = 300.0;
    int population = 2000;
    int generations = 100;
    double mutation_ratio = 0.3;
    double elite_frac = 0.5;
    double gaussian_sigma_px = 8.0;
    std::uint64_t rng_seed = 0;
    double physical_weight = 1.0;
    double semantic_weight = 1.0;
    // Worker threads for fitness evaluation; results do not depend on it.
    int threads = 1;

    void check() const;
};

// child -> parent edges from stacking relations, with the resulting rest
// height of every object.
struct SupportGraph {
    std::map<std::string, std::string> parent;
    std::map<std::string, double> z_level;

    // True when one object rests, directly or through others, on the other.
    bool same_chain(const std::string& a, const std::string& b) const;
    int depth(const std::string& name) const;
};

SupportGraph build_support_graph(const TopoRelationSet& relations, const SceneSpec& scene,
                                 const RelationLibrary& lib);

// Top-left pixel corner per object, indexed like GroundingProblem::names().
struct Genome {
    std::vector<std::array<int, 2>> corners;

    friend bool operator==(const Genome&, const Genome&) = default;
};

struct FitnessBreakdown {
    double collision_score = 1.0;
    double boundary_score = 1.0;
    double stability_score = 1.0;
    std::map<RelationInstance, double> relation_scores;
    double total = 0.0;
    bool is_full = false;
};

// Everything fitness needs, resolved once: pixel footprints, rest heights,
// compiled relations and the pairs exempt from collision.
class GroundingProblem {
  public:
    GroundingProblem(const SceneSpec& scene, const TopoRelationSet& relations, const RelationLibrary& lib,
                     const SupportGraph& support, const GroundingConfig& cfg);

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    const GroundingConfig& config() const { return cfg_; }
    const SupportGraph& support() const { return support_; }
    const SceneSpec& scene() const { return scene_; }

    // Largest legal corner coordinate for object i.
    std::array<int, 2> upper_bound(std::size_t i) const { return upper_[i]; }
    std::array<double, 2> footprint_px(std::size_t i) const { return footprint_[i]; }

    // Objects resting on object i, directly or through others.
    const std::vector<std::size_t>& descendants(std::size_t i) const { return descendants_[i]; }
    // Bottom object of the stack holding object i.
    std::size_t chain_root(std::size_t i) const { return root_[i]; }

    bool in_bounds(const Genome& g) const;

    // Box of object i in plane pixels, z in cm.
    Aabb plane_box(const Genome& g, std::size_t i) const;

    double full_score() const { return cfg_.physical_weight + cfg_.semantic_weight; }

    // Fast path returning only the total; sets `full` when every component is maximal.
    double evaluate(const Genome& g, bool* full = nullptr) const;
    FitnessBreakdown breakdown(const Genome& g) const;

  private:
    struct CompiledRelation {
        RelationInstance instance;
        const RelationDef* def;
        std::vector<std::size_t> args;
    };

    struct Components {
        double collision;
        double stability;
        double boundary;
        double relations_mean;
        bool relations_full;
    };
    Components components(const Genome& g, std::vector<double>* relation_scores) const;

    SceneSpec scene_;
    RelationLibrary lib_;
    SupportGraph support_;
    GroundingConfig cfg_;
    std::vector<std::string> names_;
    std::vector<std::array<double, 2>> footprint_;
    std::vector<std::array<int, 2>> upper_;
    std::vector<double> z_min_;
    std::vector<double> z_max_;
    std::vector<int> parent_;
    std::vector<std::size_t> root_;
    std::vector<std::vector<std::size_t>> descendants_;
    std::vector<std::pair<std::size_t, std::size_t>> collision_pairs_;
    std::vector<CompiledRelation> relations_;
};

FitnessBreakdown fitness(const Genome& g, const GroundingProblem& problem);

struct Population {
    std::vector<Genome> genomes;
    std::vector<double> fitness;  // totals, parallel to genomes once evaluated
};

// Throws GroundingError("object larger than surface: <name>") when a footprint
// does not fit on the plane.
Population init_population(const DiscretePoseSet& poses, const GroundingProblem& problem);

struct EvolveResult {
    Genome best;
    FitnessBreakdown fitness;
    int generations_used = 0;
    std::vector<double> best_history;  // best-ever total after each generation
};

EvolveResult evolve(Population population, const GroundingProblem& problem);

// Stable content hash used to order equal-fitness genomes.
std::uint64_t genome_hash(const Genome& g);

std::map<std::string, PlanePoint> normalize(const Genome& best, const GroundingProblem& problem);

Layout to_bbox(const std::map<std::string, PlanePoint>& plane_points, const SceneSpec& scene,
               const SupportGraph& support, const GroundingConfig& cfg);

struct GroundingResult {
    EvolveResult evolution;
    Layout layout;
};

// init_population, evolve, normalize and to_bbox in sequence.
GroundingResult ground(const DiscretePoseSet& poses, const TopoRelationSet& relations, const RelationLibrary& lib,
                       const SceneSpec& scene, const GroundingConfig& cfg);

}  // namespace layoutforge
