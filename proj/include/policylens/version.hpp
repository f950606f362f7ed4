#pragma once

namespace policylens {

inline constexpr const char* kVersion = "0.1.0";

}
