#pragma once

namespace face {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace face
