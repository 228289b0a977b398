#include <cassert>
#include <cmath>

#include "uwir/ad/ops.hpp"
#include "uwir/kernels/dft.hpp"

// Amplitude/phase spectrum ops. Forward transform is the unnormalized DFT;
// the adjoint of a real-input forward transform is the unnormalized inverse
// (real part), with no 1/N factor, and the adjoint of the normalized inverse
// is the forward transform divided by N.

namespace uwir::ad {

std::pair<Var, Var> fft_split(Var x) {
  Tape& t = *x.tape;
  Tensor re, im;
  kernels::dft2_forward(x.val(), re, im);
  Tensor amp(re.shape), pha(re.shape);
  for (std::size_t i = 0; i < re.numel(); ++i) {
    double r = re.data[i], m = im.data[i];
    amp.data[i] = std::hypot(r, m);
    // Exactly-zero bins get phase 0 rather than an arbitrary angle.
    pha.data[i] = (r == 0.0 && m == 0.0) ? 0.0 : std::atan2(m, r);
  }
  Var amp_var = t.make(std::move(amp));
  Var pha_var = t.make(std::move(pha));
  // Joint adjoint lives on the last-created output (reverse order reaches it
  // only after every consumer of either output has run).
  t.set_back(pha_var, [tp = &t, xi = x.i, ai = amp_var.i, pi = pha_var.i,
                       re = std::move(re), im = std::move(im)] {
    const Tensor& gamp = tp->grad(ai);
    const Tensor& gpha = tp->grad(pi);
    Tensor gre(re.shape), gim(re.shape);
    for (std::size_t i = 0; i < re.numel(); ++i) {
      double r = re.data[i], m = im.data[i];
      double a = std::hypot(r, m);
      if (a == 0.0) continue;  // amplitude subgradient 0, phase frozen
      double ga = gamp.data[i], gp = gpha.data[i];
      gre.data[i] = ga * r / a - gp * m / (a * a);
      gim.data[i] = ga * m / a + gp * r / (a * a);
    }
    Tensor outr, outi;
    kernels::dft2_inverse(gre, gim, outr, outi);
    Tensor& gx = tp->grad(xi);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += outr.data[i];
  });
  return {amp_var, pha_var};
}

Var ifft_merge(Var amp, Var pha) {
  Tape& t = *amp.tape;
  const Tensor& av = amp.val();
  const Tensor& pv = pha.val();
  assert(av.shape == pv.shape && av.rank() == 3);
  double inv_n = 1.0 / (static_cast<double>(av.dim(0)) * av.dim(1));
  Tensor re(av.shape), im(av.shape);
  for (std::size_t i = 0; i < av.numel(); ++i) {
    re.data[i] = av.data[i] * std::cos(pv.data[i]);
    im.data[i] = av.data[i] * std::sin(pv.data[i]);
  }
  Tensor outr, outi;
  kernels::dft2_inverse(re, im, outr, outi);
  for (double& v : outr.data) v *= inv_n;
  Var o = t.make(std::move(outr));
  t.set_back(o, [tp = &t, ai = amp.i, pi = pha.i, oi = o.i, inv_n] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av2 = tp->val(ai);
    const Tensor& pv2 = tp->val(pi);
    Tensor gre, gim;
    kernels::dft2_forward(g, gre, gim);
    Tensor& gamp = tp->grad(ai);
    Tensor& gpha = tp->grad(pi);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      double gr = gre.data[i] * inv_n;
      double gi = gim.data[i] * inv_n;
      double cp = std::cos(pv2.data[i]), sp = std::sin(pv2.data[i]);
      gamp.data[i] += gr * cp + gi * sp;
      gpha.data[i] += av2.data[i] * (-gr * sp + gi * cp);
    }
  });
  return o;
}

}  // namespace uwir::ad
