#pragma once

#include <string_view>

namespace thevest {

inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace thevest
