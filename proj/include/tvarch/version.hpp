#pragma once

namespace tvarch {

inline constexpr const char* kVersion = "tvarch 0.1.0";

}  // namespace tvarch
