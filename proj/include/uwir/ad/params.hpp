#pragma once
// Named parameter storage shared by model construction, the optimizer, and
// checkpointing. Registration order drives RNG consumption during init, so
// models must build in a deterministic order; iteration for the optimizer and
// checkpoint layout is map order (sorted by name), also deterministic.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "uwir/ad/tape.hpp"
#include "uwir/core/rng.hpp"
#include "uwir/core/tensor.hpp"

namespace uwir::ad {

struct ParamEntry {
  Tensor v;               // value
  Tensor g;               // gradient accumulator
  Tensor m1, m2;          // optimizer moments, empty until first update
  bool trainable = true;
};

class ParamStore {
 public:
  // Registers a parameter if absent (running init on the fresh tensor) and
  // returns its value. Re-registration with a different shape is an error.
  Tensor& add(const std::string& name, const std::vector<int>& shape,
              const std::function<void(Tensor&)>& init, bool trainable = true);

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  ParamEntry& entry(const std::string& name);
  const ParamEntry& entry(const std::string& name) const;

  // Binds the parameter into a tape as a leaf; gradients accumulate in g.
  Var use(Tape& t, const std::string& name);

  std::size_t total_params() const;
  void zero_grads();
  // L2 norm over trainable gradients, fixed name order.
  double grad_norm() const;
  // Marks every parameter whose name starts with prefix.
  void set_trainable_prefix(const std::string& prefix, bool trainable);

  std::map<std::string, ParamEntry>& entries() { return entries_; }
  const std::map<std::string, ParamEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, ParamEntry> entries_;
};

std::function<void(Tensor&)> init_normal(Rng& rng, double stddev);
std::function<void(Tensor&)> init_zeros();
std::function<void(Tensor&)> init_ones();
std::function<void(Tensor&)> init_const(double v);

}  // namespace uwir::ad
