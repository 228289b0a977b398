#pragma once
// Mixture-of-experts feed-forward block. The input is projected to two views
// (one passed through a depthwise conv for local context), a two-layer router
// softmax-weights N low-rank experts, and the output is the weighted expert
// sum: every expert in train mode, only the top-k (weights unrenormalized) in
// infer mode. Expert i squeezes through 2^(i+1) channels. The whole expert
// path is bias-free, so zero input yields zero output in either mode.

#include <string>
#include <vector>

#include "uwir/ad/ops.hpp"
#include "uwir/ad/params.hpp"
#include "uwir/core/rng.hpp"

namespace uwir::wmoe {

struct WmoeSpec {
  int channels = 0;
  int num_experts = 3;
  int top_k = 2;
};

// Low-rank width of expert i (0-based): 4, 8, 16, ...
inline int expert_width(int i) { return 1 << (i + 2); }

void build(ad::ParamStore& ps, const std::string& prefix, const WmoeSpec& spec, Rng& rng);

struct RouteInfo {
  std::vector<double> weights;  // softmax weights, length num_experts
  std::vector<int> selected;    // top-k indices, ascending
};

// 3x3 conv to 2C, channel split, depthwise conv on the second view. Returns
// (F_a, F_b_local). Throws InvalidInput on channel mismatch.
std::pair<ad::Var, ad::Var> split_views(ad::Tape& t, ad::ParamStore& ps,
                                        const std::string& prefix, ad::Var x,
                                        const WmoeSpec& spec);

// Softmax routing weights from GAP of the local view; fills info with the
// top-k index set (ties to the lower index). Throws InvalidInput when k is
// out of range.
ad::Var route(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var fb_local,
              const WmoeSpec& spec, int k, RouteInfo* info);

// T3(T1(F_a) * T2(F_b_local)) for expert i.
ad::Var expert_forward(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, int i,
                       ad::Var fa, ad::Var fb_local);

// x is [H, W, C]. Throws InvalidInput on channel mismatch or top_k out of
// range. Expert sums run in ascending index order in both modes, so
// top_k == num_experts reproduces train mode bit for bit.
ad::Var forward(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var x,
                const WmoeSpec& spec, bool train_mode, RouteInfo* info = nullptr);

// Analytic multiply-accumulate count of one forward pass at h x w. Infer mode
// charges the k widest experts (the data-independent worst case).
long long flops(const WmoeSpec& spec, int h, int w, bool train_mode);

// Selection counts across forward passes, dumpable as "expert_id,count" CSV.
struct ExpertHistogram {
  std::vector<long long> counts;
  void record(const RouteInfo& info);
  void write_csv(const std::string& path) const;
};

}  // namespace uwir::wmoe
