#pragma once

namespace imed {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace imed
