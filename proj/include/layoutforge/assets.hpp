#pragma once

#include <string_view>
#include <vector>

namespace layoutforge::assets {

// Data files compiled into the library: prompt templates under
// "templates/<id>.txt", the bundled corpus, size catalog and published
// table values. Throws std::out_of_range for unknown ids.
std::string_view get(std::string_view id);

bool contains(std::string_view id);

std::vector<std::string_view> ids();

}  // namespace layoutforge::assets
