#pragma once

namespace paramine {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace paramine
