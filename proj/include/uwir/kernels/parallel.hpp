#pragma once
// Parallel dispatch switch. Kernels parallelize over independent output
// elements only and keep every reduction in a fixed serial order, so results
// are bit-identical whether the switch is on or off and for any thread count.

namespace uwir::kernels {

bool parallel_enabled();
void set_parallel(bool on);

}  // namespace uwir::kernels
