#pragma once

namespace minmarkov {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace minmarkov
