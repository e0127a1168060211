#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "layoutforge/corpus.hpp"
#include "layoutforge/discrete.hpp"
#include "layoutforge/llm.hpp"
#include "layoutforge/relations.hpp"

namespace layoutforge {

// The arrangement a scripted provider describes, poses and relates. Built
// around an anchor object: stacked pairs share a lattice cell, everything
// else fills cells ring by ring in front-to-back rows.
struct ArrangementPlan {
    std::string anchor;
    std::map<std::string, LatticePoint> poses;
    std::vector<RelationInstance> relations;
    // One sentence per placement, paired with the objects it names.
    std::vector<std::pair<std::string, std::vector<std::string>>> sentences;
};

ArrangementPlan plan_arrangement(const std::vector<std::string>& objects, const SizeCatalog& catalog);

// Cells around the anchor in fill order: ring k covers x = +-k on rows below
// k, then row k outward from x = 0.
std::vector<std::pair<int, int>> slot_sequence(std::size_t count);

// Axis signs implied by words in a relation name ("left_above_of" -> (-1, 1, 0)).
std::optional<Rpc> rpc_from_name(const std::string& name);

// Deterministic stand-in for a chat model. Policies:
//   arranger              answer every prompt from plan_arrangement
//   omit:<name>           never give <name> a coarse pose, not even in repair
//   omit_once:<name>      leave <name> out of the first coarse poses only
//   describe_omit:<name>  leave <name> out of descriptions until corrected
//   never_approve         reject every description
//   gibberish             reply with text that carries no tagged blocks
class ScriptedProvider : public Provider {
  public:
    explicit ScriptedProvider(std::string policy = "arranger", int judge_pos = 75, int judge_ali = 70,
                              SizeCatalog catalog = SizeCatalog::bundled());

    std::string name() const override { return "mock:" + policy_; }
    std::string complete(const ChatRequest& request) override;

  private:
    std::string describe(const std::string& prompt) const;
    std::string critique(const std::string& prompt) const;
    std::string poses(const std::string& prompt) const;
    std::string repair(const std::string& prompt) const;
    std::string relations(const std::string& prompt) const;
    std::string define_relation(const std::string& prompt) const;
    std::string constrain_relation(const std::string& prompt) const;

    std::string policy_;
    std::string mode_;
    std::string target_;
    int judge_pos_;
    int judge_ali_;
    SizeCatalog catalog_;
};

}  // namespace layoutforge
