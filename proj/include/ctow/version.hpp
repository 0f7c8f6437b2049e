#pragma once

namespace ctow {

inline constexpr const char* kToolkitVersion = "0.1.0";

} // namespace ctow
