#pragma once

#include <string_view>

namespace rdflex {

/// Warnings go to stderr as "warning: [module] msg" unless silenced; the
/// simulation runner silences them for the duration of a study.
void warn(std::string_view module, std::string_view msg);
void set_warnings_enabled(bool on);
bool warnings_enabled();

}  // namespace rdflex
