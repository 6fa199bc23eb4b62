#pragma once

namespace tpi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tpi
