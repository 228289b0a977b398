#pragma once
// Run configuration. Defaults are the full-scale training recipe; tiny() is
// the desk profile used by the CPU tests. Serialized form is a flat UTF-8
// key=value file; unknown keys are rejected.

#include <cstdint>
#include <string>
#include <vector>

namespace uwir {

struct RunConfig {
  std::vector<int> stage_depths{3, 5, 6, 6};   // restoration blocks per level
  std::vector<int> stage_widths{32, 64, 128, 256};
  int prior_dim = 256;                         // length of the degradation prior vector
  int num_prompts = 5;
  int num_experts = 3;
  int top_k = 2;
  int diffusion_steps = 4;
  double alpha_1 = 0.99;
  double alpha_T = 0.1;
  double lambda1 = 0.1;                        // depth loss weight
  double lambda2 = 0.5;                        // gradient term weight inside the depth loss
  double lr_init = 2e-4;
  double lr_final = 1e-6;
  int batch = 8;
  int crop = 128;
  int iters_stage1 = 50000;
  int iters_stage2 = 200000;
  std::uint64_t seed = 0;

  // Reduced widths so full two-stage training fits a single CPU core.
  static RunConfig tiny() {
    RunConfig c;
    c.stage_depths = {1, 1, 1, 1};
    c.stage_widths = {8, 16, 32, 64};
    c.prior_dim = 64;
    return c;
  }

  // Throws InvalidInput on any violated constraint.
  void validate() const;

  // Flat key=value serialization, one pair per line, keys sorted.
  std::string to_kv() const;
  static RunConfig from_kv(const std::string& text);
  static RunConfig load_file(const std::string& path);
  void save_file(const std::string& path) const;
};

}  // namespace uwir
