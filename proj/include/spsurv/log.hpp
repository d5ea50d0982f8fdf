#pragma once

#include <functional>
#include <string>

namespace spsurv {

// Non-fatal diagnostics. The default handler prints to stderr; tests install
// their own to capture or silence messages.
using WarningHandler = std::function<void(const std::string&)>;

void warn(const std::string& message);
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace spsurv
