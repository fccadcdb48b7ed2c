#pragma once

namespace sisrfp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sisrfp
