#pragma once

namespace ssp {
inline constexpr const char* kVersion = "0.1.0";
}
