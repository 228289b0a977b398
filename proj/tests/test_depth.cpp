#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "support/gradcheck.hpp"
#include "uwir/ad/ops.hpp"
#include "uwir/ad/tape.hpp"
#include "uwir/core/errors.hpp"
#include "uwir/core/image_io.hpp"
#include "uwir/core/rng.hpp"
#include "uwir/depth/depth.hpp"

using namespace uwir;
namespace fs = std::filesystem;

namespace {

Tensor random_image(int h, int w, Rng& rng) {
  Tensor t({h, w, 3});
  for (double& v : t.data) v = rng.uniform(0.0, 1.0);
  return t;
}

// Independent oracle for the whole stub: clipped 5x5 window mean of the
// inverted luminance, borders normalized by the in-bounds count.
Tensor naive_stub(const Tensor& img) {
  int h = img.dim(0), w = img.dim(1);
  Tensor inv({h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      inv.at2(i, j) =
          1.0 - (0.299 * img.at3(i, j, 0) + 0.587 * img.at3(i, j, 1) + 0.114 * img.at3(i, j, 2));
  Tensor out({h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      int cnt = 0;
      for (int di = -2; di <= 2; ++di)
        for (int dj = -2; dj <= 2; ++dj) {
          int ii = i + di, jj = j + dj;
          if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
          s += inv.at2(ii, jj);
          ++cnt;
        }
      out.at2(i, j) = s / cnt;
    }
  return out;
}

// Writes an executable /bin/sh script and returns its path.
fs::path write_script(const std::string& name, const std::string& body) {
  fs::path p = fs::temp_directory_path() / name;
  {
    std::ofstream f(p);
    f << "#!/bin/sh\n" << body;
  }
  fs::permissions(p, fs::perms::owner_all, fs::perm_options::add);
  return p;
}

}  // namespace

TEST_SUITE("depth") {

TEST_CASE("stub raster values") {
  depth::DepthProviderSpec spec;

  SUBCASE("white maps to zero, black to one") {
    Tensor white({4, 6, 3}, 1.0);
    Tensor black({4, 6, 3}, 0.0);
    Tensor dw = depth::predict_depth(white, spec);
    Tensor db = depth::predict_depth(black, spec);
    REQUIRE(dw.shape == std::vector<int>({4, 6}));
    for (double v : dw.data) CHECK(std::abs(v) < 1e-12);
    for (double v : db.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("matches the clipped-window oracle including borders") {
    Rng rng(41);
    std::vector<std::pair<int, int>> sizes{{1, 1}, {3, 3}, {5, 4}, {8, 11}};
    for (auto [h, w] : sizes) {
      Tensor img = random_image(h, w, rng);
      Tensor got = depth::predict_depth(img, spec);
      Tensor want = naive_stub(img);
      REQUIRE(got.shape == want.shape);
      for (std::size_t i = 0; i < got.numel(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
    }
  }

  SUBCASE("outputs stay in range with the input's spatial size") {
    Rng rng(42);
    Tensor img = random_image(9, 7, rng);
    Tensor d = depth::predict_depth(img, spec);
    REQUIRE(d.rank() == 2);
    CHECK(d.dim(0) == 9);
    CHECK(d.dim(1) == 7);
    for (double v : d.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  SUBCASE("repeat calls are bitwise identical") {
    Rng rng(43);
    Tensor img = random_image(6, 6, rng);
    Tensor a = depth::predict_depth(img, spec);
    Tensor b = depth::predict_depth(img, spec);
    CHECK(a.data == b.data);
  }

  SUBCASE("plain path equals the differentiable path bit for bit") {
    Rng rng(44);
    Tensor img = random_image(5, 8, rng);
    Tensor plain = depth::predict_depth(img, spec);
    ad::Tape t;
    ad::Var d = depth::predict_depth_stub(t, t.constant(img));
    REQUIRE(d.val().numel() == plain.numel());
    for (std::size_t i = 0; i < plain.numel(); ++i) CHECK(plain.data[i] == d.val().data[i]);
  }

  SUBCASE("malformed inputs are rejected") {
    CHECK_THROWS_AS(depth::predict_depth(Tensor({4, 4}), spec), InvalidInput);
    CHECK_THROWS_AS(depth::predict_depth(Tensor({4, 4, 1}), spec), InvalidInput);
    ad::Tape t;
    CHECK_THROWS_AS(depth::predict_depth_stub(t, t.constant(Tensor({4, 4, 4}))), InvalidInput);
  }
}

TEST_CASE("stub gradients") {
  Rng rng(1234);
  Tensor img = random_image(6, 5, rng);
  Tensor img_g(img.shape);
  Tensor w({6, 5, 1});
  for (double& v : w.data) v = rng.uniform(-1.0, 1.0);

  auto build = [&](ad::Tape& t) {
    ad::Var x = t.leaf(&img, &img_g);
    ad::Var d = depth::predict_depth_stub(t, x);
    return ad::mean_all(ad::mul(d, t.constant(w)));
  };
  auto res = testsupport::grad_check(build, img, img_g, rng, 5);
  INFO("worst ", res.worst_where, " rel ", res.worst_rel);
  CHECK(res.ok);
  CHECK(res.checked == 5);
}

TEST_CASE("normalization") {
  SUBCASE("affine rescale onto [0,1]") {
    Tensor raw({2, 2}, {2.0, 4.0, 6.0, 8.0});
    Tensor n = depth::normalize_depth(raw);
    CHECK(n.at2(0, 0) == doctest::Approx(0.0));
    CHECK(n.at2(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(n.at2(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(n.at2(1, 1) == doctest::Approx(1.0));
  }

  SUBCASE("a constant raster maps to one half") {
    Tensor raw({3, 4}, 7.25);
    Tensor n = depth::normalize_depth(raw);
    for (double v : n.data) CHECK(v == 0.5);
  }

  SUBCASE("extremes land exactly on the endpoints") {
    Rng rng(7);
    Tensor raw({8, 8});
    for (double& v : raw.data) v = rng.uniform(-3.0, 9.0);
    Tensor n = depth::normalize_depth(raw);
    CHECK(*std::min_element(n.data.begin(), n.data.end()) == 0.0);
    CHECK(*std::max_element(n.data.begin(), n.data.end()) == 1.0);
    for (double v : n.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  SUBCASE("non-finite values are rejected") {
    Tensor raw({2, 2}, {1.0, 2.0, std::nan(""), 4.0});
    CHECK_THROWS_AS(depth::normalize_depth(raw), InvalidInput);
    Tensor inf({2, 2}, {1.0, 2.0, std::numeric_limits<double>::infinity(), 4.0});
    CHECK_THROWS_AS(depth::normalize_depth(inf), InvalidInput);
    CHECK_THROWS_AS(depth::normalize_depth(Tensor({4})), InvalidInput);
  }
}

TEST_CASE("pyramid downsampling") {
  SUBCASE("level zero is the identity") {
    Rng rng(9);
    Tensor d({6, 10});
    for (double& v : d.data) v = rng.uniform(0.0, 1.0);
    Tensor out = depth::downsample_depth(d, 0);
    CHECK(out.shape == d.shape);
    CHECK(out.data == d.data);
  }

  SUBCASE("one level averages each 2x2 block") {
    Tensor d({2, 2}, {0.0, 1.0, 1.0, 0.0});
    Tensor out = depth::downsample_depth(d, 1);
    REQUIRE(out.shape == std::vector<int>({1, 1}));
    CHECK(out.at2(0, 0) == doctest::Approx(0.5));
  }

  SUBCASE("two levels compose from single levels and keep the global mean") {
    Rng rng(10);
    Tensor d({8, 8});
    for (double& v : d.data) v = rng.uniform(0.0, 1.0);
    Tensor two = depth::downsample_depth(d, 2);
    Tensor chained = depth::downsample_depth(depth::downsample_depth(d, 1), 1);
    REQUIRE(two.shape == chained.shape);
    for (std::size_t i = 0; i < two.numel(); ++i)
      CHECK(two.data[i] == doctest::Approx(chained.data[i]).epsilon(1e-15));
    double m0 = 0.0, m2 = 0.0;
    for (double v : d.data) m0 += v;
    for (double v : two.data) m2 += v;
    CHECK(m0 / d.numel() == doctest::Approx(m2 / two.numel()).epsilon(1e-12));
  }

  SUBCASE("size and level bounds are enforced") {
    Tensor d6({6, 6});
    CHECK_NOTHROW(depth::downsample_depth(d6, 1));
    CHECK_THROWS_AS(depth::downsample_depth(d6, 2), InvalidInput);
    Tensor d8({8, 8});
    CHECK_THROWS_AS(depth::downsample_depth(d8, 4), InvalidInput);
    CHECK_THROWS_AS(depth::downsample_depth(d8, -1), InvalidInput);
    CHECK_THROWS_AS(depth::downsample_depth(Tensor({8}), 1), InvalidInput);
  }
}

TEST_CASE("external provider") {
  Rng rng(77);
  Tensor img = random_image(4, 4, rng);

  SUBCASE("round trip through a scripted command") {
    Tensor raster({4, 4});
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) raster.at2(i, j) = (i * 4 + j) / 15.0;
    fs::path premade = fs::temp_directory_path() / "uwir_test_premade.png";
    save_png_gray16(raster, premade.string());
    fs::path script = write_script("uwir_test_provider.sh", "cp \"" + premade.string() + "\" \"$2\"\n");

    depth::DepthProviderSpec spec;
    spec.mode = depth::DepthProviderSpec::Mode::external;
    spec.external_command = script.string();
    spec.differentiable = false;
    Tensor d = depth::predict_depth(img, spec);
    REQUIRE(d.shape == raster.shape);
    // The raster already spans [0,1], so normalization only sees 16-bit
    // quantization error.
    for (std::size_t i = 0; i < d.numel(); ++i)
      CHECK(d.data[i] == doctest::Approx(raster.data[i]).epsilon(1e-4));

    fs::remove(premade);
    fs::remove(script);
  }

  SUBCASE("nonzero exit surfaces the command's diagnostics") {
    fs::path script =
        write_script("uwir_test_failing.sh", "echo scripted provider exploded >&2\nexit 3\n");
    depth::DepthProviderSpec spec;
    spec.mode = depth::DepthProviderSpec::Mode::external;
    spec.external_command = script.string();
    spec.differentiable = false;
    try {
      depth::predict_depth(img, spec);
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      std::string msg = e.what();
      CHECK(msg.find("scripted provider exploded") != std::string::npos);
    }
    fs::remove(script);
  }

  SUBCASE("a raster of the wrong size is rejected") {
    Tensor small({2, 2}, 0.25);
    fs::path premade = fs::temp_directory_path() / "uwir_test_small.png";
    save_png_gray16(small, premade.string());
    fs::path script = write_script("uwir_test_wrongsize.sh", "cp \"" + premade.string() + "\" \"$2\"\n");
    depth::DepthProviderSpec spec;
    spec.mode = depth::DepthProviderSpec::Mode::external;
    spec.external_command = script.string();
    spec.differentiable = false;
    CHECK_THROWS_AS(depth::predict_depth(img, spec), ProviderError);
    fs::remove(premade);
    fs::remove(script);
  }

  SUBCASE("a command that writes no raster is rejected") {
    fs::path script = write_script("uwir_test_noop.sh", "exit 0\n");
    depth::DepthProviderSpec spec;
    spec.mode = depth::DepthProviderSpec::Mode::external;
    spec.external_command = script.string();
    spec.differentiable = false;
    CHECK_THROWS_AS(depth::predict_depth(img, spec), ProviderError);
    fs::remove(script);
  }
}

TEST_CASE("provider spec validation") {
  depth::DepthProviderSpec ok;
  CHECK_NOTHROW(ok.validate());

  depth::DepthProviderSpec no_cmd;
  no_cmd.mode = depth::DepthProviderSpec::Mode::external;
  no_cmd.differentiable = false;
  CHECK_THROWS_AS(no_cmd.validate(), InvalidInput);

  depth::DepthProviderSpec frozen_stub;
  frozen_stub.differentiable = false;
  CHECK_THROWS_AS(frozen_stub.validate(), InvalidInput);

  depth::DepthProviderSpec ext;
  ext.mode = depth::DepthProviderSpec::Mode::external;
  ext.external_command = "true";
  ext.differentiable = false;
  CHECK_NOTHROW(ext.validate());
}

}  // TEST_SUITE
