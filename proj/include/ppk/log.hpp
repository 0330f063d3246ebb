// log.hpp: warning sink used for recoverable numerical diagnostics.

#pragma once

#include <functional>
#include <string>

namespace ppk {

using WarningSink = std::function<void(const std::string&)>;

// Default sink writes "ppk warning: ..." to stderr. Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace ppk
