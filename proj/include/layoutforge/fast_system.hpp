#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "layoutforge/discrete.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/relations.hpp"
#include "layoutforge/slow_system.hpp"

namespace layoutforge {

class Gateway;

struct DroppedRelation {
    RelationInstance relation;
    std::string reason;
};

struct TopoRelationSet {
    std::vector<RelationInstance> relations;
    std::vector<DroppedRelation> dropped;

    bool contains(const RelationInstance& r) const;
    // Appends unless an identical instance is already present.
    bool add(RelationInstance r);
};

struct PoseBlock {
    DiscretePoseSet poses;
    std::vector<std::string> missing;  // scene objects without a pose
    std::vector<std::string> ignored;  // names that are not scene objects
};

// Parses `name: [x, y, z]` lines. Any fractional value doubles the whole
// lattice once; values are then rounded. Throws ParseError naming a bad line,
// or "no anchor" when no object sits at the origin.
PoseBlock parse_pose_block(std::string_view block, const std::vector<std::string>& objects);

PoseBlock gen_discrete_coords(const SceneDescription& desc, const SceneSpec& scene, Gateway& gateway);

// One `name('a', 'b')` instance per line; throws ParseError naming a bad line.
std::vector<RelationInstance> parse_relation_lines(std::string_view block);

// Unknown relation names are synthesized into `lib` before acceptance;
// unknown objects and arity mismatches are dropped with a reason.
void accept_relations(const std::vector<RelationInstance>& parsed, const SceneSpec& scene, const std::string& context,
                      RelationLibrary& lib, Gateway& gateway, TopoRelationSet& out);

TopoRelationSet extract_relations(const SceneDescription& desc, const SceneSpec& scene, RelationLibrary& lib,
                                  Gateway& gateway);

struct FilterResult {
    TopoRelationSet relations;
    std::set<std::string> incomplete;
};

FilterResult consistency_filter(const DiscretePoseSet& poses, const TopoRelationSet& relations,
                                const RelationLibrary& lib, const std::vector<std::string>& objects);

struct RepairResult {
    DiscretePoseSet poses;
    TopoRelationSet relations;
    std::vector<std::string> repaired;  // fixed by the model
    std::vector<std::string> forced;    // placed by the fallback rule
};

// Nearest lattice cell to the anchor whose xy column is empty.
LatticePoint nearest_free_cell(const DiscretePoseSet& poses);

RepairResult repair_incomplete(const DiscretePoseSet& poses, const TopoRelationSet& relations,
                               const std::set<std::string>& incomplete, const SceneSpec& scene,
                               const SceneDescription& desc, RelationLibrary& lib, Gateway& gateway,
                               int attempts = 2);

}  // namespace layoutforge
