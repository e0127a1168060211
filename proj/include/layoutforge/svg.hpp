#pragma once

#include <map>
#include <string>
#include <vector>

#include "layoutforge/geometry.hpp"

namespace layoutforge {

// How many objects each object rests on, read off the boxes: one level per
// lower box whose footprint it overlaps and whose top it does not sink below.
std::map<std::string, int> stack_depths(const Layout& layout);

// Names by ascending stack depth, then by name.
std::vector<std::string> draw_order(const Layout& layout);

// Top-down schematic: the boundary rectangle, then one labeled rectangle per
// object in draw order, stacked objects inset. The near edge of the surface
// is at the bottom. Output depends only on the inputs.
std::string render_svg(const Layout& layout, const Boundary& boundary);

}  // namespace layoutforge
