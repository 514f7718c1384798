#pragma once

namespace mner {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mner
