#include "uwir/wmoe/wmoe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "uwir/core/errors.hpp"

namespace uwir::wmoe {

void build(ad::ParamStore& ps, const std::string& prefix, const WmoeSpec& spec, Rng& rng) {
  int c = spec.channels, n = spec.num_experts;
  ps.add(prefix + "split.w", {3, 3, c, 2 * c}, ad::init_normal(rng, std::sqrt(2.0 / (9.0 * c))));
  ps.add(prefix + "dw.w", {3, 3, c}, ad::init_normal(rng, std::sqrt(2.0 / 9.0)));
  ps.add(prefix + "router.w1", {c, c}, ad::init_normal(rng, std::sqrt(2.0 / c)));
  ps.add(prefix + "router.b1", {c}, ad::init_zeros());
  ps.add(prefix + "router.w2", {c, n}, ad::init_normal(rng, std::sqrt(2.0 / c)));
  ps.add(prefix + "router.b2", {n}, ad::init_zeros());
  for (int i = 0; i < n; ++i) {
    std::string ep = prefix + "e" + std::to_string(i) + ".";
    int cl = expert_width(i);
    ps.add(ep + "t1.w", {1, 1, c, cl}, ad::init_normal(rng, std::sqrt(2.0 / c)));
    ps.add(ep + "t2.w", {1, 1, c, cl}, ad::init_normal(rng, std::sqrt(2.0 / c)));
    // Zero so a fresh block leaves its residual branch inert.
    ps.add(ep + "t3.w", {1, 1, cl, c}, ad::init_zeros());
  }
}

std::pair<ad::Var, ad::Var> split_views(ad::Tape& t, ad::ParamStore& ps,
                                        const std::string& prefix, ad::Var x,
                                        const WmoeSpec& spec) {
  const Tensor& xv = x.val();
  if (xv.rank() != 3 || xv.dim(2) != spec.channels)
    throw InvalidInput("wmoe: input channels do not match the block width");
  int c = spec.channels;
  ad::Var both = ad::conv2d(x, ps.use(t, prefix + "split.w"), {});
  ad::Var fa = ad::slice_c(both, 0, c);
  ad::Var fb = ad::slice_c(both, c, 2 * c);
  return {fa, ad::dwconv3(fb, ps.use(t, prefix + "dw.w"))};
}

ad::Var route(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var fb_local,
              const WmoeSpec& spec, int k, RouteInfo* info) {
  if (k < 1 || k > spec.num_experts) throw InvalidInput("wmoe: top_k out of range");
  int n = spec.num_experts;
  ad::Var pooled = ad::gap(fb_local);
  ad::Var hidden = ad::relu(
      ad::linear(pooled, ps.use(t, prefix + "router.w1"), ps.use(t, prefix + "router.b1")));
  ad::Var logits =
      ad::linear(hidden, ps.use(t, prefix + "router.w2"), ps.use(t, prefix + "router.b2"));
  ad::Var wts = ad::softmax_vec(logits);

  // Top-k by weight, ties to the lower index; kept ascending so the infer-mode
  // sum visits experts in the same order as train mode.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return wts.val().data[static_cast<std::size_t>(a)] >
           wts.val().data[static_cast<std::size_t>(b)];
  });
  std::vector<int> selected(order.begin(), order.begin() + k);
  std::sort(selected.begin(), selected.end());
  if (info) {
    info->weights = wts.val().data;
    info->selected = std::move(selected);
  }
  return wts;
}

ad::Var expert_forward(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, int i,
                       ad::Var fa, ad::Var fb_local) {
  std::string ep = prefix + "e" + std::to_string(i) + ".";
  ad::Var t1 = ad::conv2d(fa, ps.use(t, ep + "t1.w"), {});
  ad::Var t2 = ad::conv2d(fb_local, ps.use(t, ep + "t2.w"), {});
  return ad::conv2d(ad::mul(t1, t2), ps.use(t, ep + "t3.w"), {});
}

ad::Var forward(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var x,
                const WmoeSpec& spec, bool train_mode, RouteInfo* info) {
  auto [fa, fbl] = split_views(t, ps, prefix, x, spec);
  RouteInfo local;
  ad::Var wts = route(t, ps, prefix, fbl, spec, spec.top_k, &local);

  ad::Var wts3 = ad::reshape(wts, {1, 1, spec.num_experts});
  ad::Var acc{};
  auto run_expert = [&](int i) {
    ad::Var out = expert_forward(t, ps, prefix, i, fa, fbl);
    ad::Var wi = ad::reshape(ad::slice_c(wts3, i, i + 1), {1});
    ad::Var term = ad::scale_by(out, wi);
    acc = acc.valid() ? ad::add(acc, term) : term;
  };
  if (train_mode) {
    for (int i = 0; i < spec.num_experts; ++i) run_expert(i);
  } else {
    for (int i : local.selected) run_expert(i);
  }
  if (info) *info = std::move(local);
  return acc;
}

long long flops(const WmoeSpec& spec, int h, int w, bool train_mode) {
  long long px = static_cast<long long>(h) * w;
  long long c = spec.channels, n = spec.num_experts;
  long long total = px * 9 * c * 2 * c;  // split conv
  total += px * 9 * c;                   // depthwise
  total += c * c + c * n;                // router MLP (once per image)
  auto expert_macs = [&](int i) {
    long long cl = expert_width(i);
    return px * (2 * c * cl + cl + cl * c);
  };
  if (train_mode) {
    for (int i = 0; i < n; ++i) total += expert_macs(i);
  } else {
    // Widths grow with index, so the last top_k experts are the worst case.
    for (int i = spec.num_experts - spec.top_k; i < n; ++i) total += expert_macs(i);
  }
  return total;
}

void ExpertHistogram::record(const RouteInfo& info) {
  for (int i : info.selected) {
    if (i >= static_cast<int>(counts.size())) counts.resize(i + 1, 0);
    ++counts[static_cast<std::size_t>(i)];
  }
}

void ExpertHistogram::write_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "expert_id,count\n");
  for (std::size_t i = 0; i < counts.size(); ++i)
    std::fprintf(f, "%zu,%lld\n", i, counts[i]);
  std::fclose(f);
}

}  // namespace uwir::wmoe
