#include "uwir/vssm/vssm.hpp"

#include <cassert>
#include <cmath>

namespace uwir::vssm {

void build(ad::ParamStore& ps, const std::string& prefix, const VssmSpec& spec, Rng& rng) {
  int c = spec.channels, s = spec.d_state;
  assert(c > 0 && s > 0);
  double proj_std = std::sqrt(2.0 / c);
  for (int d = 0; d < 4; ++d) {
    std::string dp = prefix + "dir" + std::to_string(d) + ".";
    ps.add(dp + "dt.w", {1, 1, c, c}, ad::init_normal(rng, proj_std));
    ps.add(dp + "dt.b", {c}, ad::init_zeros());
    ps.add(dp + "bproj.w", {1, 1, c, s}, ad::init_normal(rng, proj_std));
    ps.add(dp + "cproj.w", {1, 1, c, s}, ad::init_normal(rng, proj_std));
    // A = -exp(a_log) spread over [-1, -1/d_state]: bounded decay, no mode
    // faster than one step or slower than d_state steps at unit delta.
    ps.add(dp + "a_log", {c, s}, [s](Tensor& t) {
      for (int ci = 0; ci < t.dim(0); ++ci)
        for (int si = 0; si < t.dim(1); ++si)
          t.data[static_cast<std::size_t>(ci) * t.dim(1) + si] =
              std::log((si + 1.0) / s);
    });
    ps.add(dp + "d", {c}, ad::init_ones());
  }
  ps.add(prefix + "out.w", {1, 1, c, c}, ad::init_zeros());
  ps.add(prefix + "out.b", {c}, ad::init_zeros());
}

ad::Var forward(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var x,
                const VssmSpec& spec) {
  const Tensor& xv = x.val();
  assert(xv.rank() == 3 && xv.dim(2) == spec.channels);
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  int len = h * w;
  ad::Var acc{};
  for (int d = 0; d < 4; ++d) {
    std::string dp = prefix + "dir" + std::to_string(d) + ".";
    ad::Var seq = ad::reorder_scan(x, d);
    ad::Var seq3 = ad::reshape(seq, {len, 1, c});
    ad::Var delta = ad::reshape(
        ad::softplus(ad::conv2d(seq3, ps.use(t, dp + "dt.w"), ps.use(t, dp + "dt.b"))),
        {len, c});
    ad::Var bs =
        ad::reshape(ad::conv2d(seq3, ps.use(t, dp + "bproj.w"), {}), {len, spec.d_state});
    ad::Var cs =
        ad::reshape(ad::conv2d(seq3, ps.use(t, dp + "cproj.w"), {}), {len, spec.d_state});
    ad::Var a = ad::neg_exp(ps.use(t, dp + "a_log"));
    ad::Var y = ad::selective_scan(seq, delta, bs, cs, a, ps.use(t, dp + "d"));
    ad::Var img = ad::inverse_reorder(y, d, h, w);
    acc = (d == 0) ? img : ad::add(acc, img);
  }
  ad::Var fused = ad::scale(acc, 0.25);
  return ad::conv2d(fused, ps.use(t, prefix + "out.w"), ps.use(t, prefix + "out.b"));
}

}  // namespace uwir::vssm
