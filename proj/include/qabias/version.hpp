#pragma once

#include <string_view>

namespace qabias {
inline constexpr std::string_view kToolkitVersion = "0.1.0";
}
