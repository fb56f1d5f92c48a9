#pragma once

namespace thevest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;       // bad arguments, malformed files
inline constexpr int kExitInfeasible = 3;  // singular circuit, simulation impossible
inline constexpr int kExitEstimation = 4;  // estimation or detection failure

/// Full command-line entry point; main() is a thin wrapper so tests can
/// drive the tool in-process.
int run(int argc, const char* const* argv);

}  // namespace thevest::cli
