#pragma once

namespace hsynth {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hsynth
