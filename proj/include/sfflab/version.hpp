#pragma once

namespace sfflab {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace sfflab
