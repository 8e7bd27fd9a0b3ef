#pragma once

namespace minigt {

inline constexpr const char* kVersion = "0.1.0";

}
