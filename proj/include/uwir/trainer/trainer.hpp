#pragma once
// Two-stage optimization. Stage one trains the prior generator and restorer
// against ground-truth-derived priors; stage two freezes the generator,
// trains its degraded-input twin plus the denoiser, and fine-tunes the
// restorer on diffusion-denoised priors. Every step is deterministic given
// the state's rng.

#include <string>
#include <vector>

#include "uwir/ad/params.hpp"
#include "uwir/core/checkpoint.hpp"
#include "uwir/core/config.hpp"
#include "uwir/core/rng.hpp"
#include "uwir/core/tensor.hpp"
#include "uwir/depth/depth.hpp"
#include "uwir/lcdm/lcdm.hpp"
#include "uwir/losses/losses.hpp"

namespace uwir::trainer {

// lr1 + 0.5 (lr0 - lr1)(1 + cos(pi iter / total)); iter past `total` clamps
// to lr1. Throws InvalidInput for negative iter or total < 1.
double cosine_lr(int iter, int total, double lr0, double lr1);

// Mirror across the width axis; [H,W,C].
Tensor hflip(const Tensor& img);

struct SamplePair {
  Tensor lq, gt;
};

// One shared random crop window plus one shared flip decision, so the pair
// stays pixel aligned. Draws: top, left, flip. Throws InvalidInput when the
// images differ in size or are smaller than the crop.
SamplePair augment(const Tensor& lq, const Tensor& gt, int crop, Rng& rng);

// Decoupled-weight-decay adaptive-moment optimizer settings.
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled; default off
  double clip_norm = 1.0;     // global-norm gradient clip
};

// Everything the steps need: one parameter store holding all four networks,
// the run configuration, the diffusion schedule, and the depth provider.
struct Models {
  ad::ParamStore ps;
  RunConfig cfg;
  lcdm::NoiseSchedule sched;
  depth::DepthProviderSpec depth_spec;
  bool stage1_ready = false;  // set after stage-one training or checkpoint load
};

// Registration order is fixed (restorer, generator, twin, denoiser) so a
// seed fully determines the initialization stream.
void build_stage1(Models& m, Rng& rng);
void build_stage2_extras(Models& m, Rng& rng);

struct TrainState {
  int iteration = 0;  // within the current stage
  int stage = 1;
  double lr = 0.0;    // last applied rate, cosine_lr(iteration) exactly
  int opt_step = 0;   // moment bias-correction counter
  AdamConfig opt;
  Rng rng;
};

// One moment update over every trainable parameter whose name starts with
// one of the prefixes. Clips the selected gradients to opt.clip_norm jointly
// and returns the pre-clip global norm. step is 1-based.
double adam_update(ad::ParamStore& ps, const std::vector<std::string>& prefixes, double lr,
                   int step, const AdamConfig& opt);

// One optimizer step on a ready batch of crops. Updates generator and
// restorer; reports pixel and depth components.
losses::LossReport stage1_step(Models& m, TrainState& st, const std::vector<SamplePair>& batch);

// One stage-two step: frozen-generator prior as the diffusion target, full
// noiseless reverse chain for the denoised prior, plus an auxiliary
// noise-matching term at one random timestep (optimized, not reported).
// Updates twin, denoiser, and restorer; never touches the frozen generator.
// Throws StagingError until m.stage1_ready.
losses::LossReport stage2_step(Models& m, TrainState& st, const std::vector<SamplePair>& batch);

// Shuffled epoch sampler over n items; drop-last. next() reshuffles when
// fewer than `batch` items remain. Throws InvalidInput when n < batch.
class EpochSampler {
 public:
  EpochSampler(int n, int batch);
  std::vector<int> next(Rng& rng);

 private:
  int n_, batch_;
  std::size_t pos_;
  std::vector<int> order_;
};

// Training log CSV: header plus one row per iteration. Missing components
// print as 0. Values use max round-trip precision.
std::string log_header();
std::string log_row(int iter, int stage, double lr, const losses::LossReport& rep,
                    double wall_ms);

// Parameter checkpointing: values plus meta; optimizer moments restart on
// load (the serialized state is the paper-visible one).
void save_params(const ad::ParamStore& ps, const CheckpointMeta& meta, const std::string& path);
CheckpointMeta load_params(ad::ParamStore& ps, const std::string& path);

}  // namespace uwir::trainer
