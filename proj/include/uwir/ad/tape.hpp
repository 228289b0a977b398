#pragma once
// Reverse-mode autodiff on a linear tape. Each op appends one node holding
// the forward value, a same-shaped gradient buffer, and a backward closure.
// backward(loss) seeds d(loss)=1 and runs closures in reverse creation order;
// closures accumulate (+=) into producer gradients, so fan-out sums correctly.
//
// Vars are cheap handles (tape pointer + index). Closures must capture
// indices, never Tensor references: the node vector reallocates as it grows.
//
// Parameters enter as leaves pointing at external value/grad storage that
// survives clear(); everything else lives on the tape for one step.
//
// Multi-output ops follow one convention: the joint backward closure sits on
// the last-created output node (reverse order reaches it before its siblings,
// after every consumer of any sibling has already run).

#include <cassert>
#include <functional>
#include <vector>

#include "uwir/core/tensor.hpp"

namespace uwir::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  int i = -1;

  bool valid() const { return tape != nullptr && i >= 0; }
  const Tensor& val() const;
  Tensor& grad() const;
};

class Tape {
 public:
  Var constant(Tensor v) { return push(std::move(v), nullptr, nullptr, {}); }

  // Leaf bound to external storage; g must match v's shape and is accumulated
  // into across steps until the caller zeroes it.
  Var leaf(Tensor* v, Tensor* g) {
    assert(v && g && g->shape == v->shape);
    return push(Tensor{}, v, g, {});
  }

  // Ops create the node first, then attach the closure (which needs the
  // result index to read its own gradient).
  Var make(Tensor v) { return push(std::move(v), nullptr, nullptr, {}); }

  void set_back(Var v, std::function<void()> back) {
    assert(v.tape == this);
    nodes_[static_cast<std::size_t>(v.i)].back = std::move(back);
  }

  const Tensor& val(int i) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    return n.vp ? *n.vp : n.v;
  }

  Tensor& grad(int i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    return n.gp ? *n.gp : n.g;
  }

  // Seeds d(loss)/d(loss) = 1 (loss must be a single element) and sweeps the
  // tape from loss back to the start.
  void backward(Var loss) {
    assert(loss.tape == this);
    Tensor& g = grad(loss.i);
    assert(g.numel() == 1);
    g.data[0] = 1.0;
    for (int i = loss.i; i >= 0; --i) {
      auto& back = nodes_[static_cast<std::size_t>(i)].back;
      if (back) back();
    }
  }

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor v;                 // owned value (unused when vp set)
    Tensor g;                 // owned gradient
    Tensor* vp = nullptr;     // external value (parameter leaf)
    Tensor* gp = nullptr;     // external gradient
    std::function<void()> back;
  };

  Var push(Tensor v, Tensor* vp, Tensor* gp, std::function<void()> back) {
    Node n;
    if (vp) {
      n.vp = vp;
      n.gp = gp;
    } else {
      n.g = Tensor(v.shape);  // zero-initialized
      n.v = std::move(v);
    }
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::val() const { return tape->val(i); }
inline Tensor& Var::grad() const { return tape->grad(i); }

}  // namespace uwir::ad
