#pragma once

namespace kar {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kar
