#include "uwir/kernels/parallel.hpp"

namespace uwir::kernels {

namespace {
bool g_parallel = true;
}

bool parallel_enabled() { return g_parallel; }
void set_parallel(bool on) { g_parallel = on; }

}  // namespace uwir::kernels
