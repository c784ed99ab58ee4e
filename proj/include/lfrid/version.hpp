#pragma once

namespace lfrid {

inline constexpr const char* k_version = "lfrid 0.1.0";

} // namespace lfrid
