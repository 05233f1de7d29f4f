// version.hpp - library version recorded in run manifests.

#pragma once

namespace nfc {
inline constexpr const char* kVersion = "0.1.0";
}
