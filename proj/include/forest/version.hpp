#pragma once

namespace forest {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace forest
