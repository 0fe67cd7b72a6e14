#include <doctest.h>

#include "axiscal/dehaze.hpp"
#include "axiscal/optics.hpp"
#include "oracles.hpp"

using namespace axiscal;

TEST_SUITE("dehaze") {

TEST_CASE("guided filter matches per-window regression") {
  std::mt19937_64 rng(21);
  for (Index r : {1, 3, 6}) {
    for (double eps : {1e-4, 1e-2}) {
      const GrayImage guide = oracle::random_image(24, 19, rng);
      const GrayImage input = oracle::random_image(24, 19, rng);
      const GrayImage fast = guided_filter(guide, input, r, eps);
      CHECK((fast - oracle::guided_filter(guide, input, r, eps)).abs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("guided filter: subsample 1 is the exact variant, fast variant stays close") {
  std::mt19937_64 rng(22);
  const GrayImage guide = gaussian_blur(oracle::random_image(64, 64, rng), 3.0);
  const GrayImage exact = guided_filter(guide, guide, 8, 1e-3);
  CHECK((guided_filter(guide, guide, 8, 1e-3, 1) == exact).all());
  const GrayImage fast = guided_filter(guide, guide, 8, 1e-3, 2);
  CHECK(fast.rows() == 64);
  CHECK((fast - exact).abs().mean() < 0.02);
  CHECK_THROWS_AS(guided_filter(guide, guide, 8, 1e-3, 0), Error);
  CHECK_THROWS_AS(guided_filter(guide, GrayImage::Zero(3, 3), 2, 1e-3), Error);
}

TEST_CASE("guided filter of a constant input is that constant") {
  std::mt19937_64 rng(23);
  const GrayImage guide = oracle::random_image(20, 20, rng);
  const GrayImage q = guided_filter(guide, GrayImage::Constant(20, 20, 0.35), 4, 1e-3);
  CHECK((q - 0.35).abs().maxCoeff() < 1e-12);
}

TEST_CASE("atmospheric light averages the brightest fraction") {
  GrayImage img = GrayImage::Zero(10, 10);
  img(0, 0) = 1.0;
  img(5, 5) = 0.5;
  CHECK(estimate_atmospheric_light(img, 0.01) == 1.0);
  CHECK(estimate_atmospheric_light(img, 0.02) == 0.75);
  CHECK(estimate_atmospheric_light(img, 1.0) == doctest::Approx(0.015));
  CHECK(estimate_atmospheric_light(GrayImage::Zero(4, 4), 0.5) > 0.0);
}

TEST_CASE("rough transmission is floored and capped") {
  std::mt19937_64 rng(24);
  const GrayImage img = oracle::random_image(30, 30, rng);
  DehazeParams p;
  p.patch_radius = 2;
  const TransmissionMap t = rough_transmission(img, 0.5, p);
  CHECK(t.values().minCoeff() >= p.t_floor);
  CHECK(t.values().maxCoeff() <= 1.0);
  CHECK(t.floor() == p.t_floor);
  const GrayImage expect = (1.0 - oracle::min_window(img, 2) / 0.5).max(p.t_floor).min(1.0);
  CHECK((t.values() - expect).abs().maxCoeff() < 1e-15);
}

TEST_CASE("recover inverts the constant haze model") {
  std::mt19937_64 rng(25);
  const GrayImage clear = oracle::random_image(16, 16, rng);
  const double t = 0.3, a = 0.8;
  const GrayImage hazy = clear * t + a * (1.0 - t);
  const TransmissionMap map(GrayImage::Constant(16, 16, t), 0.1);
  CHECK((recover_unclamped(hazy, map, a) - clear).abs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(recover(GrayImage::Zero(3, 3), map, a), Error);
}

TEST_CASE("gfa leaves a constant image unchanged") {
  const GrayImage flat = GrayImage::Constant(50, 50, 0.6);
  const GfaResult r = gfa_enhance_detailed(flat);
  CHECK(r.atmospheric == doctest::Approx(0.6));
  CHECK((r.enhanced - 0.6).abs().maxCoeff() < 1e-12);
}

TEST_CASE("gfa sharpens a hazy scene and stays in range") {
  SceneSpec s;
  const GrayImage hazy = degrade(render_crosshair(s).image, DegradeSpec{});
  const GrayImage out = gfa_enhance(hazy);
  CHECK(out.minCoeff() >= 0.0);
  CHECK(out.maxCoeff() <= 1.0);
  CHECK(smd2(out) > 10.0 * smd2(hazy));
  DehazeParams fast;
  fast.subsample_s = 2;
  CHECK(smd2(gfa_enhance(hazy, fast)) > 10.0 * smd2(hazy));
}

TEST_CASE("max-min stretch") {
  GrayImage img(1, 3);
  img << 0.2, 0.4, 0.3;
  const GrayImage s = max_min_stretch(img);
  CHECK(s(0, 0) == 0.0);
  CHECK(s(0, 1) == 1.0);
  CHECK(s(0, 2) == doctest::Approx(0.5));
  CHECK((max_min_stretch(GrayImage::Constant(2, 2, 0.3)) == 0.3).all());
}

TEST_CASE("dehaze parameter validation") {
  CHECK_NOTHROW(DehazeParams{}.validate());
  DehazeParams p;
  p.t_floor = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.gf_eps = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.a_fraction = 1.5;
  CHECK_THROWS_AS(gfa_enhance(GrayImage::Zero(8, 8), p), Error);
}

}
