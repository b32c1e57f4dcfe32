#pragma once

#include <functional>
#include <string>

namespace satkit {

// Library warnings go through this hook; default prints to stderr.
// Tests install a collector to assert on warning paths.
using WarnHandler = std::function<void(const std::string&)>;

void set_warn_handler(WarnHandler handler);  // empty = restore default
void warn(const std::string& message);

}  // namespace satkit
