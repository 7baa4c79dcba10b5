#pragma once

namespace gcwp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gcwp
