#pragma once

#include <functional>
#include <string_view>

namespace homog {

/// Soft-contract warnings (e.g. a p outside the level-2 range). Written to
/// stderr unless a sink is installed.
void warn(std::string_view message);

/// Replace the warning sink; pass an empty function to restore stderr.
void set_warning_sink(std::function<void(std::string_view)> sink);

}  // namespace homog
