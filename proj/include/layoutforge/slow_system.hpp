#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "layoutforge/geometry.hpp"
#include "layoutforge/relations.hpp"

namespace layoutforge {

class Gateway;

struct SceneDescription {
    std::string text;
    std::set<std::string> mentioned_objects;
    int iterations_used = 0;
    bool approved = false;
};

struct CritiqueResult {
    bool approved = false;
    std::vector<std::string> issues;
};

// Names occurring verbatim in `text`. An occurrence inside a longer listed
// name ("cup" within "cup saucer") or glued to other letters or digits
// ("pen" within "open") does not count.
std::set<std::string> find_mentions(std::string_view text, const std::vector<std::string>& names);

// `extra` is appended to the prompt verbatim (corrections, round feedback).
SceneDescription generate_description(const SceneSpec& scene, const RelationLibrary& lib, Gateway& gateway,
                                      std::string_view extra = {});

CritiqueResult parse_critique(std::string_view reply);

CritiqueResult critique_description(const SceneSpec& scene, const SceneDescription& desc, Gateway& gateway);

// Generate/critique loop. Returns the first approved description that covers
// every object, or the last candidate with approved == false.
SceneDescription rrg(const SceneSpec& scene, const RelationLibrary& lib, Gateway& gateway, int max_iters = 3,
                     std::string_view feedback = {});

}  // namespace layoutforge
