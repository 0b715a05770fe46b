#pragma once

#include <ostream>
#include <string_view>

namespace slp {

/// Diagnostics sink for non-fatal warnings; nullptr silences them.
void set_warning_stream(std::ostream* os);
void warn(std::string_view message);

}  // namespace slp
