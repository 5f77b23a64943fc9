#pragma once

namespace omegalab {

inline constexpr const char* kVersion = "0.1.0";

} // namespace omegalab
