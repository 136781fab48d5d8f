#pragma once

namespace sevkit {

// Every parallel kernel has a straightforward serial twin used as the
// reference in tests; both produce bitwise-identical results by ordering
// all floating-point reductions by index, never by thread.
enum class exec_mode { serial, parallel };

} // namespace sevkit
