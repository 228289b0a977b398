#include "uwir/backbone/backbone.hpp"

#include <cassert>
#include <cmath>

#include "uwir/core/errors.hpp"
#include "uwir/vssm/vssm.hpp"

namespace uwir::backbone {

namespace {

std::string block_prefix(const std::string& group, int j) {
  return "backbone." + group + ".b" + std::to_string(j) + ".";
}

wmoe::WmoeSpec wmoe_spec(int width, const RunConfig& cfg) {
  return {width, cfg.num_experts, cfg.top_k};
}

}  // namespace

void build_block(ad::ParamStore& ps, const std::string& prefix, int width, const RunConfig& cfg,
                 Rng& rng) {
  ps.add(prefix + "ln1.g", {width}, ad::init_ones());
  ps.add(prefix + "ln1.b", {width}, ad::init_zeros());
  ps.add(prefix + "ln2.g", {width}, ad::init_ones());
  ps.add(prefix + "ln2.b", {width}, ad::init_zeros());
  ps.add(prefix + "mod.scale.w", {cfg.prior_dim, width}, ad::init_normal(rng, 0.02));
  ps.add(prefix + "mod.scale.b", {width}, ad::init_ones());
  ps.add(prefix + "mod.shift.w", {cfg.prior_dim, width}, ad::init_normal(rng, 0.02));
  ps.add(prefix + "mod.shift.b", {width}, ad::init_zeros());
  vssm::build(ps, prefix + "vssm.", {width, 16}, rng);
  ps.add(prefix + "dgate.w", {3, 3, 1, width}, ad::init_normal(rng, std::sqrt(2.0 / 9.0)));
  ps.add(prefix + "dgate.b", {width}, ad::init_zeros());
  wmoe::build(ps, prefix + "wmoe.", wmoe_spec(width, cfg), rng);
}

void build(ad::ParamStore& ps, const RunConfig& cfg, Rng& rng) {
  const auto& w = cfg.stage_widths;
  const auto& d = cfg.stage_depths;
  assert(w.size() == 4 && d.size() == 4);
  double s0 = std::sqrt(2.0 / (9.0 * 3));
  ps.add("backbone.stem.w", {3, 3, 3, w[0]}, ad::init_normal(rng, s0));
  ps.add("backbone.stem.b", {w[0]}, ad::init_zeros());
  for (int lv = 0; lv < 3; ++lv) {
    for (int j = 0; j < d[lv]; ++j)
      build_block(ps, block_prefix("enc" + std::to_string(lv), j), w[lv], cfg, rng);
    ps.add("backbone.down" + std::to_string(lv) + ".w", {3, 3, w[lv], w[lv + 1]},
           ad::init_normal(rng, std::sqrt(2.0 / (9.0 * w[lv]))));
    ps.add("backbone.down" + std::to_string(lv) + ".b", {w[lv + 1]}, ad::init_zeros());
  }
  for (int j = 0; j < d[3]; ++j) build_block(ps, block_prefix("lat", j), w[3], cfg, rng);
  for (int lv = 2; lv >= 0; --lv) {
    std::string s = std::to_string(lv);
    ps.add("backbone.up" + s + ".w", {3, 3, w[lv + 1], w[lv]},
           ad::init_normal(rng, std::sqrt(2.0 / (9.0 * w[lv + 1]))));
    ps.add("backbone.up" + s + ".b", {w[lv]}, ad::init_zeros());
    ps.add("backbone.fuse" + s + ".w", {1, 1, 2 * w[lv], w[lv]},
           ad::init_normal(rng, std::sqrt(2.0 / (2.0 * w[lv]))));
    ps.add("backbone.fuse" + s + ".b", {w[lv]}, ad::init_zeros());
    for (int j = 0; j < d[lv]; ++j)
      build_block(ps, block_prefix("dec" + std::to_string(lv), j), w[lv], cfg, rng);
  }
  ps.add("backbone.head.w", {3, 3, w[0], 3}, ad::init_zeros());
  ps.add("backbone.head.b", {3}, ad::init_zeros());
}

ad::Var prior_modulate(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var x,
                       ad::Var z) {
  const Tensor& wv = ps.entry(prefix + "mod.scale.w").v;
  if (z.val().rank() != 1 || z.val().dim(0) != wv.dim(0))
    throw InvalidInput("prior_modulate: prior length does not match the modulation maps");
  ad::Var s = ad::linear(z, ps.use(t, prefix + "mod.scale.w"), ps.use(t, prefix + "mod.scale.b"));
  ad::Var sh = ad::linear(z, ps.use(t, prefix + "mod.shift.w"), ps.use(t, prefix + "mod.shift.b"));
  return ad::affine_channel(x, s, sh);
}

ad::Var depth_gate(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var f,
                   ad::Var depth) {
  const Tensor& fv = f.val();
  const Tensor& dv = depth.val();
  if (dv.rank() != 3 || dv.dim(0) != fv.dim(0) || dv.dim(1) != fv.dim(1) || dv.dim(2) != 1)
    throw InvalidInput("depth_gate: depth raster size does not match the feature map");
  ad::Var normed = ad::layernorm_channel(f, ps.use(t, prefix + "ln2.g"), ps.use(t, prefix + "ln2.b"));
  ad::Var lifted =
      ad::relu(ad::conv2d(depth, ps.use(t, prefix + "dgate.w"), ps.use(t, prefix + "dgate.b")));
  return ad::mul(normed, ad::softmax_channel(lifted));
}

ad::Var mmoeb_forward(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var f,
                      ad::Var z, ad::Var depth, const RunConfig& cfg, bool train_mode,
                      wmoe::ExpertHistogram* hist) {
  int width = f.val().dim(2);
  ad::Var normed =
      ad::layernorm_channel(f, ps.use(t, prefix + "ln1.g"), ps.use(t, prefix + "ln1.b"));
  ad::Var mixed = vssm::forward(t, ps, prefix + "vssm.",
                                prior_modulate(t, ps, prefix, normed, z), {width, 16});
  ad::Var f_d = ad::add(mixed, f);
  ad::Var gated = depth_gate(t, ps, prefix, f_d, depth);
  wmoe::RouteInfo info;
  ad::Var expert = wmoe::forward(t, ps, prefix + "wmoe.", prior_modulate(t, ps, prefix, gated, z),
                                 wmoe_spec(width, cfg), train_mode, &info);
  if (hist) hist->record(info);
  return ad::add(expert, f_d);
}

ad::Var restore(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var x_lq, ad::Var z,
                ad::Var depth, bool train_mode, wmoe::ExpertHistogram* hist) {
  const Tensor& xv = x_lq.val();
  if (xv.rank() != 3 || xv.dim(2) != 3) throw InvalidInput("restore: input must be [H,W,3]");
  if (xv.dim(0) % 8 != 0 || xv.dim(1) % 8 != 0)
    throw InvalidInput("restore: H and W must be divisible by 8");
  const auto& d = cfg.stage_depths;

  // Depth pyramid, one raster per level.
  ad::Var dep[4];
  dep[0] = depth;
  for (int lv = 1; lv < 4; ++lv) dep[lv] = ad::avgpool2(dep[lv - 1]);

  auto run_group = [&](ad::Var f, const std::string& group, int lv) {
    for (int j = 0; j < d[lv]; ++j)
      f = mmoeb_forward(t, ps, block_prefix(group, j), f, z, dep[lv], cfg, train_mode, hist);
    return f;
  };
  auto conv_p = [&](ad::Var x, const std::string& name, int stride) {
    return ad::conv2d(x, ps.use(t, "backbone." + name + ".w"),
                      ps.use(t, "backbone." + name + ".b"), stride);
  };

  ad::Var f = conv_p(x_lq, "stem", 1);
  ad::Var skips[3];
  for (int lv = 0; lv < 3; ++lv) {
    f = run_group(f, "enc" + std::to_string(lv), lv);
    skips[lv] = f;
    f = conv_p(f, "down" + std::to_string(lv), 2);
  }
  f = run_group(f, "lat", 3);
  for (int lv = 2; lv >= 0; --lv) {
    std::string s = std::to_string(lv);
    f = conv_p(ad::upsample_nearest2(f), "up" + s, 1);
    f = conv_p(ad::concat_c(skips[lv], f), "fuse" + s, 1);
    f = run_group(f, "dec" + std::to_string(lv), lv);
  }
  ad::Var head = conv_p(f, "head", 1);
  return ad::clip01(ad::add(x_lq, head));
}

}  // namespace uwir::backbone
