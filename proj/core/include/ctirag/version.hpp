#pragma once

namespace ctirag {

inline constexpr const char* kVersion = "0.1.0";

} // namespace ctirag
