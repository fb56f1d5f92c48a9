#pragma once

namespace thevest {

/// Execution policy for the batch kernels. `parallel` distributes independent
/// work items over OpenMP threads when the build enables them; every kernel
/// computes each item with the same code on either path, so results are
/// bit-identical to `serial`.
enum class Exec { serial, parallel };

}  // namespace thevest
