#pragma once

namespace mvsde {

inline constexpr const char* kVersion = "0.1.0";

// Identifier for the stream-keying convention used by the driver layer.
// Bump whenever the key/counter layout or any draw recipe changes, since
// that silently changes every simulated path for a given master seed.
inline constexpr const char* kKeyingScheme = "mvsde-k1";

}  // namespace mvsde
