#include <cmath>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "synesthesia/canvas.hpp"
#include "synesthesia/error.hpp"
#include "synesthesia/rng.hpp"

using namespace synesthesia;

namespace {

Image noise_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

double inner(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

}  // namespace

TEST_SUITE("canvas") {

TEST_CASE("image rejects empty dimensions") {
  CHECK_THROWS_AS(Image(0, 4), ParameterError);
  CHECK_THROWS_AS(Image(4, -1), ParameterError);
  Image img(3, 2, {0.1, 0.2, 0.3});
  CHECK(img.pixel(2, 1) == Rgb{0.1, 0.2, 0.3});
  CHECK(img.data().size() == 18);
}

TEST_CASE("png round trip stays within one quantization step") {
  oracle::TempDir dir("png");
  const Image img = noise_image(17, 9, 1);
  save_png(img, dir / "a.png");
  const Image back = load_png(dir / "a.png");
  REQUIRE(back.same_shape(img));
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    CHECK(std::abs(back.data()[i] - img.data()[i]) <= 1.0 / 255.0 + 1e-12);
  }
  // Quantized images survive bit for bit.
  save_png(back, dir / "b.png");
  CHECK(load_png(dir / "b.png") == back);
}

TEST_CASE("png errors") {
  oracle::TempDir dir("pngerr");
  CHECK_THROWS_AS(load_png(dir / "missing.png"), IoError);
  std::ofstream(dir / "junk.png") << "this is not a png";
  CHECK_THROWS_AS(load_png(dir / "junk.png"), FormatError);
  CHECK_THROWS_AS(save_png(Image(2, 2), dir / "no_such_dir" / "x.png"), IoError);
}

TEST_CASE("bilinear sampling hits pixel centers exactly and clamps at borders") {
  const Image img = noise_image(5, 4, 2);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) CHECK(sample_bilinear(img, x, y) == img.pixel(x, y));
  }
  CHECK(sample_bilinear(img, -3.0, -2.0) == img.pixel(0, 0));
  CHECK(sample_bilinear(img, 10.0, 10.0) == img.pixel(4, 3));
  const Rgb mid = sample_bilinear(img, 1.5, 2.0);
  for (int c = 0; c < 3; ++c) CHECK(mid[c] == doctest::Approx(0.5 * (img.at(1, 2, c) + img.at(2, 2, c))));
}

TEST_CASE("resize to the same size is the identity") {
  const Image img = noise_image(6, 7, 3);
  const Image out = resize_bilinear(img, 6, 7);
  for (std::size_t i = 0; i < img.data().size(); ++i) CHECK(out.data()[i] == doctest::Approx(img.data()[i]));
}

TEST_CASE("downscaling averages every source pixel") {
  const Image img = noise_image(64, 48, 4);
  const SamplingGrid grid = resize_grid(64, 48, 16, 12);
  ImageGradient reach(64, 48);
  grid.apply_vjp(Image(16, 12, {1.0, 1.0, 1.0}), reach);
  for (double v : reach.data()) CHECK(v > 0.0);

  const Image flat = grid.apply(Image(64, 48, {0.2, 0.5, 0.9}));
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) {
      CHECK(flat.at(x, y, 0) == doctest::Approx(0.2));
      CHECK(flat.at(x, y, 2) == doctest::Approx(0.9));
    }
  }

  // Halving uses the 4-tap tent 1/8, 3/8, 3/8, 1/8 per axis away from the border.
  const Image half = resize_bilinear(img, 32, 24);
  const double k[4] = {0.125, 0.375, 0.375, 0.125};
  for (int y = 1; y < 23; y += 5) {
    for (int x = 1; x < 31; x += 7) {
      double expected = 0.0;
      for (int j = 0; j < 4; ++j) {
        for (int i = 0; i < 4; ++i) expected += k[j] * k[i] * img.at(2 * x - 1 + i, 2 * y - 1 + j, 1);
      }
      CHECK(half.at(x, y, 1) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("upscaling reduces to bilinear interpolation") {
  const Image img = noise_image(5, 4, 5);
  const Image up = resize_bilinear(img, 15, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 15; ++x) {
      const Rgb ref = sample_bilinear(img, (x + 0.5) / 3.0 - 0.5, (y + 0.5) / 2.0 - 0.5);
      for (int c = 0; c < 3; ++c) CHECK(up.at(x, y, c) == doctest::Approx(ref[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("resize vjp is the adjoint of the resize") {
  const Image x = noise_image(37, 29, 6);
  const Image u = noise_image(11, 13, 7);
  const SamplingGrid grid = resize_grid(37, 29, 11, 13);
  ImageGradient g(37, 29);
  grid.apply_vjp(u, g);
  CHECK(inner(grid.apply(x), u) == doctest::Approx(inner(x, g)).epsilon(1e-12));
  CHECK_THROWS_AS(grid.apply(Image(36, 29)), ParameterError);
  CHECK_THROWS_AS(resize_grid(0, 3, 2, 2), ParameterError);
}

TEST_CASE("homography maps the unit square corners to the quad") {
  const std::array<std::array<double, 2>, 4> q = {{{1.0, 2.0}, {9.0, 1.5}, {10.0, 8.0}, {0.5, 7.0}}};
  const Homography hmg(q);
  const double corners[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int i = 0; i < 4; ++i) {
    const auto p = hmg(corners[i][0], corners[i][1]);
    CHECK(p[0] == doctest::Approx(q[i][0]));
    CHECK(p[1] == doctest::Approx(q[i][1]));
  }
  const std::array<std::array<double, 2>, 4> degenerate = {{{0, 0}, {1, 1}, {2, 2}, {3, 3}}};
  CHECK_THROWS_AS(Homography{degenerate}, ParameterError);
}

TEST_CASE("augmentation spec validation") {
  AugmentationSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.count = -1;
  CHECK_THROWS_AS(spec.validate(), ParameterError);
  spec = {};
  spec.min_crop_fraction = 1.5;
  CHECK_THROWS_AS(spec.validate(), ParameterError);
  spec = {};
  spec.output_size_px = 4;
  CHECK_THROWS_AS(spec.validate(), ParameterError);
}

TEST_CASE("augmented views: count, size, range, determinism") {
  const Image img = noise_image(40, 30, 4);
  AugmentationSpec spec;
  spec.count = 5;
  spec.output_size_px = 24;
  spec.seed = 11;
  const auto views = augment_views(img, spec);
  REQUIRE(views.size() == 6);
  for (const auto& v : views) {
    CHECK(v.width() == 24);
    CHECK(v.height() == 24);
    CHECK(in_unit_range(v));
  }
  CHECK(views[0] == resize_bilinear(img, 24, 24));
  CHECK(augment_views(img, spec) == views);
  spec.seed = 12;
  CHECK(augment_views(img, spec)[1] != views[1]);
}

TEST_CASE("augmentation of a constant image is constant") {
  const Image img(33, 21, {0.2, 0.4, 0.9});
  AugmentationSpec spec;
  spec.count = 4;
  spec.output_size_px = 16;
  for (const auto& v : augment_views(img, spec)) {
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        for (int c = 0; c < 3; ++c) CHECK(v.at(x, y, c) == doctest::Approx(img.at(0, 0, c)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("augmentation vjp is the adjoint of the linear view map") {
  // augment_views is linear in the pixels, so <vjp(u), x> = sum_k <u_k, view_k(x)>.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image x = noise_image(29, 35, 100 + seed);
    AugmentationSpec spec;
    spec.count = 4;
    spec.output_size_px = 12;
    spec.seed = seed;
    const auto views = augment_views(x, spec);
    std::vector<Image> upstream;
    double rhs = 0.0;
    for (std::size_t k = 0; k < views.size(); ++k) {
      Image u = noise_image(12, 12, 200 + 10 * seed + k);
      for (double& v : u.data()) v -= 0.5;
      rhs += inner(u, views[k]);
      upstream.push_back(std::move(u));
    }
    const Image g = augment_views_vjp(29, 35, spec, upstream);
    CHECK(inner(g, x) == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("crops smaller than two pixels are rejected") {
  AugmentationSpec spec;
  spec.count = 2;
  spec.min_crop_fraction = 0.5;
  CHECK_THROWS_AS(augment_views(Image(1, 1), spec), ParameterError);
  spec.count = 0;
  CHECK(augment_views(Image(1, 1), spec).size() == 1);
}

}  // TEST_SUITE
