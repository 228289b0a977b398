#include "uwir/sfpg/sfpg.hpp"

#include <cmath>

#include "uwir/core/errors.hpp"

namespace uwir::sfpg {

namespace {

void build_net(ad::ParamStore& ps, const std::string& p, int in_ch, const RunConfig& cfg,
               Rng& rng) {
  int c = cfg.stage_widths[0];
  auto he = [&](int fan_k, int fan_c) {
    return ad::init_normal(rng, std::sqrt(2.0 / (fan_k * fan_k * fan_c)));
  };
  ps.add(p + "stem1.w", {3, 3, in_ch, c}, he(3, in_ch));
  ps.add(p + "stem1.b", {c}, ad::init_zeros());
  ps.add(p + "stem2.w", {3, 3, c, c}, he(3, c));
  ps.add(p + "stem2.b", {c}, ad::init_zeros());
  for (const char* br : {"amp", "pha"})
    for (int k = 0; k < 3; ++k) {
      std::string bp = p + br + ".r" + std::to_string(k) + ".";
      ps.add(bp + "c1.w", {3, 3, c, c}, he(3, c));
      ps.add(bp + "c1.b", {c}, ad::init_zeros());
      ps.add(bp + "c2.w", {3, 3, c, c}, he(3, c));
      ps.add(bp + "c2.b", {c}, ad::init_zeros());
    }
  for (int k = 0; k < 3; ++k) {
    std::string pp = p + "post" + std::to_string(k) + ".";
    ps.add(pp + "w", {3, 3, c, c}, he(3, c));
    ps.add(pp + "b", {c}, ad::init_zeros());
  }
  ps.add(p + "head.w", {1, 1, c, cfg.num_prompts}, he(1, c));
  ps.add(p + "head.b", {cfg.num_prompts}, ad::init_zeros());
  ps.add(p + "prompts", {cfg.num_prompts, cfg.prior_dim}, ad::init_normal(rng, 0.02));
}

ad::Var residual_stack(ad::Tape& t, ad::ParamStore& ps, const std::string& bp, ad::Var x) {
  for (int k = 0; k < 3; ++k) {
    std::string rp = bp + ".r" + std::to_string(k) + ".";
    ad::Var h = ad::lrelu(ad::conv2d(x, ps.use(t, rp + "c1.w"), ps.use(t, rp + "c1.b")),
                          kLreluSlope);
    x = ad::add(x, ad::conv2d(h, ps.use(t, rp + "c2.w"), ps.use(t, rp + "c2.b")));
  }
  return x;
}

SfpgOut net_forward(ad::Tape& t, ad::ParamStore& ps, const std::string& p, ad::Var x) {
  ad::Var f = ad::lrelu(ad::conv2d(x, ps.use(t, p + "stem1.w"), ps.use(t, p + "stem1.b")),
                        kLreluSlope);
  f = ad::lrelu(ad::conv2d(f, ps.use(t, p + "stem2.w"), ps.use(t, p + "stem2.b")), kLreluSlope);
  auto [amp, pha] = ad::fft_split(f);
  amp = residual_stack(t, ps, p + "amp", amp);
  pha = residual_stack(t, ps, p + "pha", pha);
  ad::Var m = ad::ifft_merge(amp, pha);
  for (int k = 0; k < 3; ++k) {
    std::string pp = p + "post" + std::to_string(k) + ".";
    m = ad::lrelu(ad::conv2d(m, ps.use(t, pp + "w"), ps.use(t, pp + "b")), kLreluSlope);
  }
  ad::Var logits = ad::gap(ad::conv2d(m, ps.use(t, p + "head.w"), ps.use(t, p + "head.b")));
  ad::Var s = ad::softmax_vec(logits);
  ad::Var z = ad::linear(s, ps.use(t, p + "prompts"), {});
  return {z, s};
}

}  // namespace

void build(ad::ParamStore& ps, const RunConfig& cfg, Rng& rng) {
  build_net(ps, "sfpg.", 6 * 16, cfg, rng);
}

void build_star(ad::ParamStore& ps, const RunConfig& cfg, Rng& rng) {
  build_net(ps, "sfpgstar.", 3, cfg, rng);
}

SfpgOut forward(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var x_lq,
                ad::Var x_gt) {
  const Tensor& a = x_lq.val();
  const Tensor& b = x_gt.val();
  if (!a.same_shape(b)) throw InvalidInput("sfpg: paired inputs must have the same shape");
  if (a.rank() != 3 || a.dim(2) != 3) throw InvalidInput("sfpg: inputs must be [H,W,3]");
  if (a.dim(0) % 4 != 0 || a.dim(1) % 4 != 0)
    throw InvalidInput("sfpg: H and W must be divisible by 4");
  (void)cfg;
  ad::Var packed = ad::pixel_unshuffle(ad::concat_c(x_lq, x_gt), 4);
  return net_forward(t, ps, "sfpg.", packed);
}

SfpgOut forward_star(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var x_lq) {
  const Tensor& a = x_lq.val();
  if (a.rank() != 3 || a.dim(2) != 3) throw InvalidInput("sfpg: input must be [H,W,3]");
  (void)cfg;
  return net_forward(t, ps, "sfpgstar.", x_lq);
}

}  // namespace uwir::sfpg
