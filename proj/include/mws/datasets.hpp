#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mws/io.hpp"

namespace mws {

/// Names of the built-in distance sets (fig5_a ... fig5_l).
std::vector<std::string> bundled_names();

/// Raw text of a built-in set, byte-identical to the file under data/.
std::optional<std::string_view> bundled_text(std::string_view name);

std::optional<DistanceSetRecord> bundled_dataset(std::string_view name);

}  // namespace mws
