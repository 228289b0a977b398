#include "uwir/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <utility>

#include "uwir/backbone/backbone.hpp"
#include "uwir/core/errors.hpp"
#include "uwir/sfpg/sfpg.hpp"

namespace uwir::trainer {

double cosine_lr(int iter, int total, double lr0, double lr1) {
  if (total < 1) throw InvalidInput("cosine_lr: total must be positive");
  if (iter < 0) throw InvalidInput("cosine_lr: negative iteration");
  if (iter > total) return lr1;
  double phase = std::numbers::pi * iter / total;
  return lr1 + 0.5 * (lr0 - lr1) * (1.0 + std::cos(phase));
}

Tensor hflip(const Tensor& img) {
  if (img.rank() != 3) throw InvalidInput("hflip expects [H,W,C]");
  int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  Tensor out({h, w, c});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int ch = 0; ch < c; ++ch) out.at3(i, j, ch) = img.at3(i, w - 1 - j, ch);
  return out;
}

SamplePair augment(const Tensor& lq, const Tensor& gt, int crop, Rng& rng) {
  if (lq.rank() != 3 || gt.rank() != 3 || lq.shape != gt.shape)
    throw InvalidInput("augment: paired images must share an [H,W,C] shape");
  int h = lq.dim(0), w = lq.dim(1), c = lq.dim(2);
  if (h < crop || w < crop)
    throw InvalidInput("augment: image " + std::to_string(h) + "x" + std::to_string(w) +
                       " is smaller than the " + std::to_string(crop) +
                       " crop; resize the pair or lower the crop size");
  int top = rng.uniform_int(0, h - crop);
  int left = rng.uniform_int(0, w - crop);
  bool flip = rng.coin();
  auto cut = [&](const Tensor& img) {
    Tensor out({crop, crop, c});
    for (int i = 0; i < crop; ++i)
      for (int j = 0; j < crop; ++j)
        for (int ch = 0; ch < c; ++ch) out.at3(i, j, ch) = img.at3(top + i, left + j, ch);
    return flip ? hflip(out) : out;
  };
  return {cut(lq), cut(gt)};
}

void build_stage1(Models& m, Rng& rng) {
  backbone::build(m.ps, m.cfg, rng);
  sfpg::build(m.ps, m.cfg, rng);
  m.sched = lcdm::make_schedule(m.cfg);
}

void build_stage2_extras(Models& m, Rng& rng) {
  sfpg::build_star(m.ps, m.cfg, rng);
  lcdm::build_denoiser(m.ps, m.cfg, rng);
}

double adam_update(ad::ParamStore& ps, const std::vector<std::string>& prefixes, double lr,
                   int step, const AdamConfig& opt) {
  if (step < 1) throw InvalidInput("adam_update: step is 1-based");
  auto selected = [&](const std::string& name) {
    for (const auto& p : prefixes)
      if (name.rfind(p, 0) == 0) return true;
    return false;
  };
  double norm2 = 0.0;
  for (const auto& [name, e] : ps.entries()) {
    if (!e.trainable || !selected(name)) continue;
    for (double g : e.g.data) norm2 += g * g;
  }
  double norm = std::sqrt(norm2);
  double scale = 1.0;
  if (opt.clip_norm > 0.0 && norm > opt.clip_norm) scale = opt.clip_norm / norm;
  double bc1 = 1.0 - std::pow(opt.beta1, step);
  double bc2 = 1.0 - std::pow(opt.beta2, step);
  for (auto& [name, e] : ps.entries()) {
    if (!e.trainable || !selected(name)) continue;
    if (e.m1.empty()) {
      e.m1 = Tensor(e.v.shape);
      e.m2 = Tensor(e.v.shape);
    }
    for (std::size_t i = 0; i < e.v.numel(); ++i) {
      double g = e.g.data[i] * scale;
      e.m1.data[i] = opt.beta1 * e.m1.data[i] + (1.0 - opt.beta1) * g;
      e.m2.data[i] = opt.beta2 * e.m2.data[i] + (1.0 - opt.beta2) * g * g;
      double mhat = e.m1.data[i] / bc1;
      double vhat = e.m2.data[i] / bc2;
      e.v.data[i] -= lr * (mhat / (std::sqrt(vhat) + opt.eps) + opt.weight_decay * e.v.data[i]);
    }
  }
  return norm;
}

namespace {

Tensor as_hw1(const Tensor& d) { return Tensor({d.dim(0), d.dim(1), 1}, d.data); }

// Depth of a restored image on the training tape: differentiable through the
// stub, a constant raster through an external provider.
ad::Var depth_of(ad::Tape& t, ad::Var img, const depth::DepthProviderSpec& spec) {
  if (spec.mode == depth::DepthProviderSpec::Mode::stub) return depth::predict_depth_stub(t, img);
  Tensor plain = img.val();
  Tensor d = depth::predict_depth(plain, spec);
  return t.constant(as_hw1(d));
}

ad::Var mean_of(const std::vector<ad::Var>& objs) {
  ad::Var acc = objs[0];
  for (std::size_t i = 1; i < objs.size(); ++i) acc = ad::add(acc, objs[i]);
  return ad::scale(acc, 1.0 / static_cast<double>(objs.size()));
}

}  // namespace

losses::LossReport stage1_step(Models& m, TrainState& st, const std::vector<SamplePair>& batch) {
  if (batch.empty()) throw InvalidInput("stage1_step: empty batch");
  st.lr = cosine_lr(st.iteration, m.cfg.iters_stage1, m.cfg.lr_init, m.cfg.lr_final);
  ad::Tape t;
  std::vector<ad::Var> objs;
  double sl1 = 0.0, sdl1 = 0.0, sdg = 0.0;
  for (const auto& s : batch) {
    ad::Var xlq = t.constant(s.lq);
    ad::Var xgt = t.constant(s.gt);
    ad::Var z = sfpg::forward(t, m.ps, m.cfg, xlq, xgt).prior;
    ad::Var d_lq = t.constant(as_hw1(depth::predict_depth(s.lq, m.depth_spec)));
    ad::Var xhat = backbone::restore(t, m.ps, m.cfg, xlq, z, d_lq, true);
    ad::Var d_pseudo = t.constant(as_hw1(depth::predict_depth(s.gt, m.depth_spec)));
    ad::Var d_hq = depth_of(t, xhat, m.depth_spec);
    auto sl = losses::stage1(xhat, xgt, d_pseudo, d_hq, m.cfg.lambda1, m.cfg.lambda2);
    objs.push_back(sl.objective);
    sl1 += sl.report.components.at("l1");
    sdl1 += sl.report.components.at("depth_l1");
    sdg += sl.report.components.at("depth_grad");
  }
  t.backward(mean_of(objs));
  ++st.opt_step;
  adam_update(m.ps, {"sfpg.", "backbone."}, st.lr, st.opt_step, st.opt);
  m.ps.zero_grads();
  ++st.iteration;

  double inv = 1.0 / static_cast<double>(batch.size());
  losses::LossReport rep;
  rep.components["l1"] = sl1 * inv;
  rep.components["depth_l1"] = sdl1 * inv;
  rep.components["depth_grad"] = sdg * inv;
  rep.total = rep.components["l1"] +
              m.cfg.lambda1 * (rep.components["depth_l1"] +
                               m.cfg.lambda2 * rep.components["depth_grad"]);
  return rep;
}

losses::LossReport stage2_step(Models& m, TrainState& st, const std::vector<SamplePair>& batch) {
  if (batch.empty()) throw InvalidInput("stage2_step: empty batch");
  if (!m.stage1_ready)
    throw StagingError("stage two requires stage-one parameters; train stage one or load its "
                       "checkpoint first");
  st.lr = cosine_lr(st.iteration, m.cfg.iters_stage2, m.cfg.lr_init, m.cfg.lr_final);
  int T = m.sched.steps();
  ad::Tape t;
  std::vector<ad::Var> objs;
  double sl1 = 0.0, sdiff = 0.0;
  for (const auto& s : batch) {
    // Frozen-generator prior: evaluated off the training tape, enters as a
    // constant target, so no gradient can reach the generator.
    Tensor z_plain;
    {
      ad::Tape tz;
      ad::Var z = sfpg::forward(tz, m.ps, m.cfg, tz.constant(s.lq), tz.constant(s.gt)).prior;
      z_plain = z.val();
    }
    ad::Var xlq = t.constant(s.lq);
    ad::Var xgt = t.constant(s.gt);
    ad::Var c = sfpg::forward_star(t, m.ps, m.cfg, xlq).prior;

    // Auxiliary noise matching at one random timestep.
    int step_t = st.rng.uniform_int(1, T);
    Tensor eps({m.cfg.prior_dim});
    for (double& v : eps.data) v = st.rng.normal();
    ad::Var z_t = lcdm::q_sample(t.constant(z_plain), step_t, t.constant(eps), m.sched);
    ad::Var eps_hat = lcdm::denoiser_forward(t, m.ps, m.cfg, z_t, c, step_t);
    ad::Var l_eps = losses::l1(eps_hat, t.constant(eps));

    // Denoised prior through the full noiseless reverse chain.
    ad::Var z_hat = lcdm::sample(t, m.ps, m.cfg, c, m.sched, st.rng, nullptr, true);
    ad::Var d_lq = t.constant(as_hw1(depth::predict_depth(s.lq, m.depth_spec)));
    ad::Var xhat = backbone::restore(t, m.ps, m.cfg, xlq, z_hat, d_lq, true);
    auto sl = losses::stage2(xhat, xgt, t.constant(z_plain), z_hat);
    objs.push_back(ad::add(sl.objective, l_eps));
    sl1 += sl.report.components.at("l1");
    sdiff += sl.report.components.at("diff");
  }
  t.backward(mean_of(objs));
  ++st.opt_step;
  adam_update(m.ps, {"sfpgstar.", "denoiser.", "backbone."}, st.lr, st.opt_step, st.opt);
  m.ps.zero_grads();
  ++st.iteration;

  double inv = 1.0 / static_cast<double>(batch.size());
  losses::LossReport rep;
  rep.components["l1"] = sl1 * inv;
  rep.components["diff"] = sdiff * inv;
  rep.total = rep.components["l1"] + rep.components["diff"];
  return rep;
}

EpochSampler::EpochSampler(int n, int batch) : n_(n), batch_(batch), pos_(0) {
  if (batch < 1) throw InvalidInput("EpochSampler: batch must be positive");
  if (n < batch) throw InvalidInput("EpochSampler: dataset smaller than one batch");
  order_.resize(static_cast<std::size_t>(n));
  std::iota(order_.begin(), order_.end(), 0);
  pos_ = order_.size();  // first next() starts a fresh shuffled epoch
}

std::vector<int> EpochSampler::next(Rng& rng) {
  if (pos_ + static_cast<std::size_t>(batch_) > order_.size()) {
    for (int i = n_ - 1; i > 0; --i) {
      int j = rng.uniform_int(0, i);
      std::swap(order_[static_cast<std::size_t>(i)], order_[static_cast<std::size_t>(j)]);
    }
    pos_ = 0;
  }
  std::vector<int> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                       order_.begin() + static_cast<std::ptrdiff_t>(pos_) + batch_);
  pos_ += static_cast<std::size_t>(batch_);
  return out;
}

std::string log_header() { return "iter,stage,lr,l1,depth_l1,depth_grad,diff,wall_ms"; }

std::string log_row(int iter, int stage, double lr, const losses::LossReport& rep,
                    double wall_ms) {
  auto comp = [&](const char* key) {
    auto it = rep.components.find(key);
    return it == rep.components.end() ? 0.0 : it->second;
  };
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f", iter, stage, lr,
                comp("l1"), comp("depth_l1"), comp("depth_grad"), comp("diff"), wall_ms);
  return std::string(buf);
}

void save_params(const ad::ParamStore& ps, const CheckpointMeta& meta, const std::string& path) {
  Checkpoint ck;
  ck.meta = meta;
  for (const auto& [name, e] : ps.entries()) ck.params[name] = e.v;
  save_checkpoint(ck, path);
}

CheckpointMeta load_params(ad::ParamStore& ps, const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  for (const auto& [name, tensor] : ck.params) {
    if (!ps.has(name))
      throw InvalidInput("checkpoint parameter is not part of this model: " + name);
    ad::ParamEntry& e = ps.entry(name);
    if (e.v.shape != tensor.shape) throw InvalidInput("checkpoint shape mismatch for " + name);
    e.v = tensor;
  }
  return ck.meta;
}

}  // namespace uwir::trainer
