#pragma once

namespace coilopt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace coilopt
