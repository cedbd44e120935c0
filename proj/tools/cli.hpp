#pragma once

#include <iosfwd>

namespace rgflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `rgflow` tool. Tables go to `out` (or to --out files),
/// diagnostics to `err` as one line: rgflow: error=<class> reason="...".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rgflow::cli
