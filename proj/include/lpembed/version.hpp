#pragma once

namespace lpembed {
inline constexpr const char* version = "0.1.0";
}
