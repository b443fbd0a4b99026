#pragma once

namespace epiforge {

inline constexpr const char* kVersion = "0.1.0";

} // namespace epiforge
