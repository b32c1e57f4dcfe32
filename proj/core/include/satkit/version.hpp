#pragma once

namespace satkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace satkit
