#pragma once

#include <ostream>

namespace refine::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // property or golden-value failure
inline constexpr int kExitError = 2;    // usage, numeric or I/O failure

/// Entry point of the refine_lab tool. Reports go to `out` unless --out names
/// a file; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace refine::cli
