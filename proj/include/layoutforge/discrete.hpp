#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace layoutforge {

using LatticePoint = std::array<int, 3>;

// Coarse Stage-1 poses: integer offsets in a right-handed frame whose origin
// is the anchor object. `scale` records how many times the lattice has been
// doubled to absorb half-integer "between" placements.
struct DiscretePoseSet {
    std::map<std::string, LatticePoint> poses;
    std::string anchor;
    int scale = 1;

    bool contains(const std::string& name) const { return poses.count(name) != 0; }
    const LatticePoint& at(const std::string& name) const { return poses.at(name); }

    // Throws InvariantError unless the anchor is present at the origin.
    void check() const;

    friend bool operator==(const DiscretePoseSet&, const DiscretePoseSet&) = default;
};

}  // namespace layoutforge
