#include <cassert>

#include "uwir/ad/ops.hpp"
#include "uwir/kernels/scan.hpp"

namespace uwir::ad {

Var selective_scan(Var x, Var delta, Var Bseq, Var Cseq, Var A, Var D) {
  Tape& t = *x.tape;
  Tensor y, h;
  kernels::scan_forward(x.val(), delta.val(), Bseq.val(), Cseq.val(), A.val(), D.val(), y, h);
  Var o = t.make(std::move(y));
  // The state history h is captured for the analytic backward sweep.
  t.set_back(o, [tp = &t, xi = x.i, di = delta.i, bi = Bseq.i, ci = Cseq.i, ai = A.i,
                 ddi = D.i, oi = o.i, h = std::move(h)] {
    kernels::scan_backward(tp->val(xi), tp->val(di), tp->val(bi), tp->val(ci), tp->val(ai),
                           tp->val(ddi), h, tp->grad(oi), tp->grad(xi), tp->grad(di),
                           tp->grad(bi), tp->grad(ci), tp->grad(ai), tp->grad(ddi));
  });
  return o;
}

}  // namespace uwir::ad
