#pragma once

namespace ips {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ips
