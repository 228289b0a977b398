#include "uwir/ad/params.hpp"

#include <cmath>

#include "uwir/core/errors.hpp"

namespace uwir::ad {

Tensor& ParamStore::add(const std::string& name, const std::vector<int>& shape,
                        const std::function<void(Tensor&)>& init, bool trainable) {
  auto it = entries_.find(name);
  if (it != entries_.end()) {
    if (it->second.v.shape != shape)
      throw InvalidInput("param " + name + " re-registered with a different shape");
    return it->second.v;
  }
  ParamEntry e;
  e.v = Tensor(shape);
  init(e.v);
  e.g = Tensor(shape);
  // m1/m2 stay empty until the optimizer first touches the entry.
  e.trainable = trainable;
  return entries_.emplace(name, std::move(e)).first->second.v;
}

ParamEntry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidInput("unknown parameter " + name);
  return it->second;
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidInput("unknown parameter " + name);
  return it->second;
}

Var ParamStore::use(Tape& t, const std::string& name) {
  ParamEntry& e = entry(name);
  return t.leaf(&e.v, &e.g);
}

std::size_t ParamStore::total_params() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.v.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) e.g.zero();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& [name, e] : entries_) {
    if (!e.trainable) continue;
    for (double v : e.g.data) sq += v * v;
  }
  return std::sqrt(sq);
}

void ParamStore::set_trainable_prefix(const std::string& prefix, bool trainable) {
  for (auto& [name, e] : entries_)
    if (name.rfind(prefix, 0) == 0) e.trainable = trainable;
}

std::function<void(Tensor&)> init_normal(Rng& rng, double stddev) {
  Rng* r = &rng;
  return [r, stddev](Tensor& t) {
    for (double& v : t.data) v = r->normal(0.0, stddev);
  };
}

std::function<void(Tensor&)> init_zeros() {
  return [](Tensor& t) { t.zero(); };
}

std::function<void(Tensor&)> init_ones() {
  return [](Tensor& t) { t.fill(1.0); };
}

std::function<void(Tensor&)> init_const(double v) {
  return [v](Tensor& t) { t.fill(v); };
}

}  // namespace uwir::ad
