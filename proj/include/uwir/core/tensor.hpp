#pragma once
// Dense double precision tensor. Row major storage; images are channel-last
// [H, W, C], vectors are [N]. This is a plain value type: copy it freely,
// mutate through at()/data, no views or strides.

#include <cassert>
#include <cstddef>
#include <utility>
#include <vector>

namespace uwir {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), 0.0) {}
  Tensor(std::vector<int> s, double fill_value)
      : shape(std::move(s)), data(numel_of(shape), fill_value) {}
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    assert(data.size() == numel_of(shape));
  }

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      assert(d >= 0);
      n *= static_cast<std::size_t>(d);
    }
    return s.empty() ? 0 : n;
  }

  std::size_t numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool empty() const { return data.empty(); }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(0.0); }

  // [H, W, C] accessors.
  double& at3(int i, int j, int c) {
    assert(rank() == 3);
    return data[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + c];
  }
  double at3(int i, int j, int c) const {
    assert(rank() == 3);
    return data[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + c];
  }

  // [H, W] accessors.
  double& at2(int i, int j) {
    assert(rank() == 2);
    return data[static_cast<std::size_t>(i) * dim(1) + j];
  }
  double at2(int i, int j) const {
    assert(rank() == 2);
    return data[static_cast<std::size_t>(i) * dim(1) + j];
  }

  double& at1(int i) { return data[static_cast<std::size_t>(i)]; }
  double at1(int i) const { return data[static_cast<std::size_t>(i)]; }
};

}  // namespace uwir
