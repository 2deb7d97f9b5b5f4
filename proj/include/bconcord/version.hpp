#pragma once

namespace bconcord {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bconcord
