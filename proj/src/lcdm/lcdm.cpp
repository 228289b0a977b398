#include "uwir/lcdm/lcdm.hpp"

#include <cmath>

#include "uwir/core/errors.hpp"

namespace uwir::lcdm {

namespace {

void check_step(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.steps())
    throw InvalidInput("diffusion step " + std::to_string(t) + " outside [1, " +
                       std::to_string(sched.steps()) + "]");
}

}  // namespace

NoiseSchedule make_schedule(const RunConfig& cfg) {
  int n = cfg.diffusion_steps;
  if (n < 1) throw InvalidInput("diffusion_steps must be at least 1");
  NoiseSchedule s;
  s.alpha.resize(static_cast<std::size_t>(n));
  // Endpoints are pinned rather than computed: the interpolation arithmetic
  // lands one ulp off the configured terminal value.
  for (int t = 0; t < n; ++t)
    s.alpha[static_cast<std::size_t>(t)] =
        t == 0       ? cfg.alpha_1
        : t == n - 1 ? cfg.alpha_T
                     : cfg.alpha_1 + (cfg.alpha_T - cfg.alpha_1) * t / static_cast<double>(n - 1);
  s.beta.resize(static_cast<std::size_t>(n));
  s.alpha_bar.resize(static_cast<std::size_t>(n));
  double prod = 1.0;
  for (int t = 0; t < n; ++t) {
    s.beta[static_cast<std::size_t>(t)] = 1.0 - s.alpha[static_cast<std::size_t>(t)];
    prod *= s.alpha[static_cast<std::size_t>(t)];
    s.alpha_bar[static_cast<std::size_t>(t)] = prod;
  }
  return s;
}

void build_denoiser(ad::ParamStore& ps, const RunConfig& cfg, Rng& rng) {
  int c = cfg.prior_dim;
  if (c % 2 != 0) throw InvalidInput("prior_dim must be even for the step embedding");
  auto he = [&](int fan) { return ad::init_normal(rng, std::sqrt(2.0 / fan)); };
  ps.add("denoiser.d1.w", {3 * c, 2 * c}, he(3 * c));
  ps.add("denoiser.d1.b", {2 * c}, ad::init_zeros());
  ps.add("denoiser.d2.w", {2 * c, 2 * c}, he(2 * c));
  ps.add("denoiser.d2.b", {2 * c}, ad::init_zeros());
  ps.add("denoiser.d3.w", {2 * c, c}, he(2 * c));
  ps.add("denoiser.d3.b", {c}, ad::init_zeros());
}

Tensor time_embedding(int t, int dim) {
  if (dim % 2 != 0) throw InvalidInput("time embedding dim must be even");
  Tensor e({dim});
  int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    double freq = std::exp(-std::log(10000.0) * i / half);
    e.data[static_cast<std::size_t>(2 * i)] = std::sin(t * freq);
    e.data[static_cast<std::size_t>(2 * i + 1)] = std::cos(t * freq);
  }
  return e;
}

ad::Var denoiser_forward(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var z_t,
                         ad::Var c, int step, int* eval_count) {
  int n = cfg.prior_dim;
  ad::Var emb = t.constant(time_embedding(step, n));
  ad::Var joined = ad::reshape(
      ad::concat_c(ad::concat_c(ad::reshape(z_t, {1, 1, n}), ad::reshape(c, {1, 1, n})),
                   ad::reshape(emb, {1, 1, n})),
      {3 * n});
  ad::Var h = ad::silu(ad::linear(joined, ps.use(t, "denoiser.d1.w"), ps.use(t, "denoiser.d1.b")));
  h = ad::silu(ad::linear(h, ps.use(t, "denoiser.d2.w"), ps.use(t, "denoiser.d2.b")));
  ad::Var out = ad::linear(h, ps.use(t, "denoiser.d3.w"), ps.use(t, "denoiser.d3.b"));
  if (eval_count) ++*eval_count;
  return out;
}

ad::Var q_sample(ad::Var z, int t, ad::Var eps, const NoiseSchedule& sched) {
  check_step(t, sched);
  double ab = sched.ab(t);
  return ad::add(ad::scale(z, std::sqrt(ab)), ad::scale(eps, std::sqrt(1.0 - ab)));
}

ad::Var reverse_update(ad::Var z_t, int t, ad::Var eps_hat, const NoiseSchedule& sched,
                       const Tensor* eta) {
  check_step(t, sched);
  double a = sched.a(t);
  double ab = sched.ab(t);
  double eps_coef = (1.0 - a) / std::sqrt(1.0 - ab);
  ad::Var mean = ad::scale(ad::sub(z_t, ad::scale(eps_hat, eps_coef)), 1.0 / std::sqrt(a));
  if (t >= 2 && eta != nullptr) {
    ad::Tape& tape = *z_t.tape;
    return ad::add(mean, ad::scale(tape.constant(*eta), std::sqrt(1.0 - a)));
  }
  return mean;
}

ad::Var sample(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var c,
               const NoiseSchedule& sched, Rng& rng, int* eval_count, bool noiseless) {
  int n = cfg.prior_dim;
  Tensor init({n});
  for (double& v : init.data) v = rng.normal();
  ad::Var z = t.constant(init);
  for (int step = sched.steps(); step >= 1; --step) {
    ad::Var eps_hat = denoiser_forward(t, ps, cfg, z, c, step, eval_count);
    if (step >= 2 && !noiseless) {
      Tensor eta({n});
      for (double& v : eta.data) v = rng.normal();
      z = reverse_update(z, step, eps_hat, sched, &eta);
    } else {
      z = reverse_update(z, step, eps_hat, sched, nullptr);
    }
  }
  return z;
}

}  // namespace uwir::lcdm
