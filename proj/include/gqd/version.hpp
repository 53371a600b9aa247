#pragma once

namespace gqd {

inline constexpr const char* version = "0.1.0";

// Version tag written into every emitted file (dataset sidecars, sweep
// tables, manifests). Bump when a schema changes shape.
inline constexpr const char* format_version = "1";

}  // namespace gqd
