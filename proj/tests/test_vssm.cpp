#include <cmath>
#include <vector>

#include "doctest.h"
#include "support/gradcheck.hpp"
#include "uwir/ad/ops.hpp"
#include "uwir/ad/params.hpp"
#include "uwir/core/rng.hpp"
#include "uwir/kernels/scan.hpp"
#include "uwir/vssm/vssm.hpp"

using namespace uwir;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Direct per-step recurrence: h_t = exp(delta*A) h_{t-1} + (exp(delta*A)-1)/A * B_t x_t,
// y_t = <C_t, h_t> + D x_t.
Tensor naive_scan(const Tensor& x, const Tensor& delta, const Tensor& bs, const Tensor& cs,
                  const Tensor& a, const Tensor& d) {
  int len = x.dim(0), c = x.dim(1), s = a.dim(1);
  Tensor y({len, c});
  for (int ch = 0; ch < c; ++ch) {
    std::vector<double> h(s, 0.0);
    for (int t = 0; t < len; ++t) {
      double dt = delta.at2(t, ch);
      double out = 0.0;
      for (int si = 0; si < s; ++si) {
        double av = a.data[static_cast<std::size_t>(ch) * s + si];
        double ab = std::exp(dt * av);
        double bb = (ab - 1.0) / av * bs.at2(t, si);
        h[si] = ab * h[si] + bb * x.at2(t, ch);
        out += cs.at2(t, si) * h[si];
      }
      y.at2(t, ch) = out + d.at1(ch) * x.at2(t, ch);
    }
  }
  return y;
}

}  // namespace

TEST_SUITE("vssm") {

TEST_CASE("scan paths are permutations and refold inverts") {
  Rng rng(11);
  ad::Tape t;
  SUBCASE("1x1 gives four identical length-1 sequences") {
    Tensor x({1, 1, 3});
    x.data = {0.3, -0.7, 2.0};
    for (int d = 0; d < 4; ++d) {
      ad::Var s = ad::reorder_scan(t.constant(x), d);
      REQUIRE(s.val().shape == std::vector<int>({1, 3}));
      CHECK(s.val().data == x.data);
    }
  }
  SUBCASE("2x2 distinct values, every direction is a bijection") {
    Tensor x({2, 2, 1});
    x.data = {1.0, 2.0, 3.0, 4.0};
    for (int d = 0; d < 4; ++d) {
      std::vector<double> got = ad::reorder_scan(t.constant(x), d).val().data;
      std::sort(got.begin(), got.end());
      CHECK(got == std::vector<double>({1.0, 2.0, 3.0, 4.0}));
    }
  }
  SUBCASE("refold(scan) is the identity on 3x5") {
    Tensor x = random_tensor({3, 5, 2}, rng);
    for (int d = 0; d < 4; ++d) {
      ad::Var back = ad::inverse_reorder(ad::reorder_scan(t.constant(x), d), d, 3, 5);
      CHECK(back.val().data == x.data);
    }
  }
}

TEST_CASE("selective scan matches the sequential recurrence") {
  Rng rng(12);
  SUBCASE("B = 0 never charges the state") {
    int len = 9, c = 3, s = 4;
    Tensor x = random_tensor({len, c}, rng);
    Tensor delta = random_tensor({len, c}, rng, 0.1, 0.9);
    Tensor bs({len, s});
    Tensor cs = random_tensor({len, s}, rng);
    Tensor a = random_tensor({c, s}, rng, -1.0, -0.1);
    Tensor d = random_tensor({c}, rng, 0.5, 1.5);
    ad::Tape t;
    ad::Var y = ad::selective_scan(t.constant(x), t.constant(delta), t.constant(bs),
                                   t.constant(cs), t.constant(a), t.constant(d));
    for (int i = 0; i < len; ++i)
      for (int ch = 0; ch < c; ++ch)
        CHECK(y.val().at2(i, ch) == doctest::Approx(d.at1(ch) * x.at2(i, ch)).epsilon(1e-12));
  }
  SUBCASE("single step equals the closed form") {
    Tensor x({1, 1}), delta({1, 1}), bs({1, 1}), cs({1, 1}), a({1, 1}), d({1});
    x.data = {0.8};
    delta.data = {0.4};
    bs.data = {1.3};
    cs.data = {-0.6};
    a.data = {-0.5};
    d.data = {2.0};
    double ab = std::exp(0.4 * -0.5);
    double expect = -0.6 * ((ab - 1.0) / -0.5 * 1.3) * 0.8 + 2.0 * 0.8;
    ad::Tape t;
    ad::Var y = ad::selective_scan(t.constant(x), t.constant(delta), t.constant(bs),
                                   t.constant(cs), t.constant(a), t.constant(d));
    CHECK(y.val().data[0] == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("random sequences match the loop oracle") {
    for (int len : {16, 64}) {
      int c = 5, s = 4;
      Tensor x = random_tensor({len, c}, rng);
      Tensor delta = random_tensor({len, c}, rng, 0.05, 0.6);
      Tensor bs = random_tensor({len, s}, rng);
      Tensor cs = random_tensor({len, s}, rng);
      Tensor a = random_tensor({c, s}, rng, -1.0, -0.05);
      Tensor d = random_tensor({c}, rng);
      Tensor want = naive_scan(x, delta, bs, cs, a, d);
      ad::Tape t;
      ad::Var y = ad::selective_scan(t.constant(x), t.constant(delta), t.constant(bs),
                                     t.constant(cs), t.constant(a), t.constant(d));
      for (std::size_t i = 0; i < want.numel(); ++i)
        CHECK(y.val().data[i] == doctest::Approx(want.data[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("module forward") {
  Rng rng(13);
  vssm::VssmSpec spec{8, 4};
  ad::ParamStore ps;
  vssm::build(ps, "v.", spec, rng);

  SUBCASE("shape preserved on 4x6x8") {
    Tensor x = random_tensor({4, 6, 8}, rng);
    ad::Tape t;
    ad::Var y = vssm::forward(t, ps, "v.", t.constant(x), spec);
    CHECK(y.val().shape == x.shape);
  }

  SUBCASE("zero B projection with unit D reduces to the output projection") {
    for (int d = 0; d < 4; ++d) {
      ps.entry("v.dir" + std::to_string(d) + ".bproj.w").v.zero();
      ps.entry("v.dir" + std::to_string(d) + ".d").v.fill(1.0);
    }
    Tensor& ow = ps.entry("v.out.w").v;
    for (double& v : ow.data) v = rng.uniform(-0.5, 0.5);
    Tensor x = random_tensor({3, 4, 8}, rng);
    ad::Tape t;
    ad::Var y = vssm::forward(t, ps, "v.", t.constant(x), spec);
    ad::Var want = ad::conv2d(t.constant(x), ps.use(t, "v.out.w"), ps.use(t, "v.out.b"));
    REQUIRE(y.val().numel() == want.val().numel());
    for (std::size_t i = 0; i < y.val().numel(); ++i)
      CHECK(y.val().data[i] == doctest::Approx(want.val().data[i]).epsilon(1e-12));
  }
}

TEST_CASE("a_log gradient matches finite differences on 2x2x2") {
  Rng rng(14);
  vssm::VssmSpec spec{2, 3};
  ad::ParamStore ps;
  vssm::build(ps, "v.", spec, rng);
  for (double& v : ps.entry("v.out.w").v.data) v = rng.uniform(-0.6, 0.6);
  Tensor x = random_tensor({2, 2, 2}, rng);
  Rng wrng(15);
  Tensor wts = random_tensor({2, 2, 2}, wrng);
  auto build = [&](ad::Tape& t) {
    ad::Var y = vssm::forward(t, ps, "v.", t.constant(x), spec);
    return ad::mean_all(ad::mul(y, t.constant(wts)));
  };
  for (int d = 0; d < 4; ++d) {
    auto& e = ps.entry("v.dir" + std::to_string(d) + ".a_log");
    auto res = testsupport::grad_check(build, e.v, e.g, rng);
    INFO("dir ", d, " worst ", res.worst_where);
    CHECK(res.ok);
  }
}

TEST_CASE("directional fusion order does not change the sum") {
  Rng rng(16);
  vssm::VssmSpec spec{4, 4};
  ad::ParamStore ps;
  vssm::build(ps, "v.", spec, rng);
  Tensor x = random_tensor({5, 3, 4}, rng);
  ad::Tape t;
  // Per-direction outputs replicated from the module's internal path.
  std::vector<ad::Var> parts;
  for (int d = 0; d < 4; ++d) {
    std::string dp = "v.dir" + std::to_string(d) + ".";
    ad::Var seq = ad::reorder_scan(t.constant(x), d);
    ad::Var seq3 = ad::reshape(seq, {15, 1, 4});
    ad::Var delta = ad::reshape(
        ad::softplus(ad::conv2d(seq3, ps.use(t, dp + "dt.w"), ps.use(t, dp + "dt.b"))), {15, 4});
    ad::Var bs = ad::reshape(ad::conv2d(seq3, ps.use(t, dp + "bproj.w"), {}), {15, 4});
    ad::Var cs = ad::reshape(ad::conv2d(seq3, ps.use(t, dp + "cproj.w"), {}), {15, 4});
    ad::Var a = ad::neg_exp(ps.use(t, dp + "a_log"));
    ad::Var y = ad::selective_scan(seq, delta, bs, cs, a, ps.use(t, dp + "d"));
    parts.push_back(ad::inverse_reorder(y, d, 5, 3));
  }
  ad::Var inorder = ad::add(ad::add(ad::add(parts[0], parts[1]), parts[2]), parts[3]);
  ad::Var shuffled = ad::add(ad::add(ad::add(parts[3], parts[1]), parts[0]), parts[2]);
  for (std::size_t i = 0; i < inorder.val().numel(); ++i)
    CHECK(std::fabs(inorder.val().data[i] - shuffled.val().data[i]) < 1e-9);
}

TEST_CASE("default init is stable over long sequences") {
  Rng rng(17);
  vssm::VssmSpec spec{6, 16};
  ad::ParamStore ps;
  vssm::build(ps, "v.", spec, rng);
  for (int d = 0; d < 4; ++d) {
    const Tensor& al = ps.entry("v.dir" + std::to_string(d) + ".a_log").v;
    for (double v : al.data) {
      double a = -std::exp(v);
      CHECK(a <= -1e-4);
      CHECK(a >= -1.0);
    }
  }
  for (double& v : ps.entry("v.out.w").v.data) v = rng.uniform(-0.5, 0.5);
  // 16x16 grid: every directional scan runs over 256 steps.
  Tensor x = random_tensor({16, 16, 6}, rng);
  ad::Tape t;
  ad::Var y = vssm::forward(t, ps, "v.", t.constant(x), spec);
  for (double v : y.val().data) {
    CHECK(std::isfinite(v));
    CHECK(std::fabs(v) < 1e4);
  }
}

}  // TEST_SUITE
