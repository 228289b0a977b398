#pragma once
// Finite-difference gradient checking: central differences, step 1e-6 at
// float64, relative tolerance 1e-4 with an absolute floor for near-zero
// entries. The builder constructs the full graph from current tensor values
// on a fresh tape each call and returns the scalar loss Var; it must bind the
// probed tensor through tape.leaf(&value, &grad) (ParamStore::use does this
// for parameters).

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "uwir/ad/tape.hpp"
#include "uwir/core/rng.hpp"
#include "uwir/core/tensor.hpp"

namespace uwir::testsupport {

struct GradCheckResult {
  bool ok = true;
  double worst_rel = 0.0;
  std::string worst_where;
  int checked = 0;
};

inline GradCheckResult grad_check(const std::function<uwir::ad::Var(uwir::ad::Tape&)>& build,
                                  Tensor& value, Tensor& grad, uwir::Rng& rng,
                                  int max_probes = 12, double step = 1e-6,
                                  double rel_tol = 1e-4, double abs_floor = 1e-8) {
  GradCheckResult res;

  grad.zero();
  Tensor analytic;
  {
    uwir::ad::Tape t;
    uwir::ad::Var loss = build(t);
    t.backward(loss);
    analytic = grad;
  }

  auto loss_value = [&build]() {
    uwir::ad::Tape t;
    return build(t).val().data[0];
  };

  std::vector<std::size_t> idx;
  std::size_t n = value.numel();
  if (static_cast<int>(n) <= max_probes) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
  } else {
    for (int k = 0; k < max_probes; ++k)
      idx.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1)));
  }

  for (std::size_t i : idx) {
    double saved = value.data[i];
    value.data[i] = saved + step;
    double fp = loss_value();
    value.data[i] = saved - step;
    double fm = loss_value();
    value.data[i] = saved;
    double fd = (fp - fm) / (2.0 * step);
    double an = analytic.data[i];
    double denom = std::max({std::fabs(fd), std::fabs(an), abs_floor});
    double rel = std::fabs(fd - an) / denom;
    ++res.checked;
    if (rel > res.worst_rel) {
      res.worst_rel = rel;
      res.worst_where = "entry " + std::to_string(i) + " fd=" + std::to_string(fd) +
                        " an=" + std::to_string(an);
    }
    if (rel > rel_tol && std::fabs(fd - an) > abs_floor) res.ok = false;
  }
  return res;
}

}  // namespace uwir::testsupport
