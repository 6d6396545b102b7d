#pragma once

#include <functional>
#include <string>

namespace dpq {

using WarnHook = std::function<void(const std::string&)>;

// Replaces the warning sink (default writes "[warn] ..." to stderr).
// Passing an empty function silences warnings; returns the previous hook.
WarnHook setWarnHook(WarnHook hook);

void warn(const std::string& message);

}  // namespace dpq
