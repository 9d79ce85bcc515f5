#pragma once

namespace symplift {

inline constexpr const char* kToolName = "symplift";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace symplift
