#pragma once

namespace dendi {
inline constexpr const char* kVersion = "0.1.0";
}
