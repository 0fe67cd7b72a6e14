#include <doctest.h>

#include <sstream>

#include "axiscal/focus.hpp"
#include "axiscal/optics.hpp"
#include "oracles.hpp"

using namespace axiscal;

namespace {

double smd2_naive(const GrayImage& f) {
  double s = 0.0;
  for (Index y = 1; y < f.rows(); ++y)
    for (Index x = 1; x < f.cols(); ++x)
      s += std::abs(f(y, x) - f(y, x - 1)) * std::abs(f(y, x) - f(y - 1, x));
  return 255.0 * s / double(f.size());
}

GrayImage textured_patch(Index rows, Index cols, Roi patch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GrayImage img = GrayImage::Constant(rows, cols, 0.5);
  img.block(patch.y0, patch.x0, patch.height, patch.width) =
      oracle::random_image(patch.height, patch.width, rng);
  return img;
}

}  // namespace

TEST_SUITE("focus") {

TEST_CASE("smd2 on hand-computed inputs") {
  CHECK(smd2(GrayImage::Constant(9, 7, 0.4)) == 0.0);
  GrayImage checker(2, 2);
  checker << 0, 1, 1, 0;
  CHECK(smd2(checker) == doctest::Approx(63.75));
  CHECK_THROWS_AS(smd2(GrayImage::Zero(1, 5)), Error);
}

TEST_CASE("smd2 matches the loop form and its invariances") {
  std::mt19937_64 rng(4);
  const GrayImage img = oracle::random_image(21, 17, rng);
  CHECK(smd2(img) == doctest::Approx(smd2_naive(img)).epsilon(1e-12));
  CHECK(smd2(img + 0.25) == doctest::Approx(smd2(img)).epsilon(1e-12));
  CHECK(smd2(img * 3.0) == doctest::Approx(9.0 * smd2(img)).epsilon(1e-12));
  CHECK(smd2(img.block(2, 3, 8, 8)) == doctest::Approx(smd2_naive(img.block(2, 3, 8, 8))).epsilon(1e-12));
}

TEST_CASE("alternative metrics on simple inputs") {
  const GrayImage flat = GrayImage::Constant(16, 16, 0.5);
  CHECK(focus_metric(flat, MetricKind::Tenengrad) == 0.0);
  CHECK(focus_metric(flat, MetricKind::Entropy) == 0.0);
  CHECK(focus_metric(flat, MetricKind::SMD) == 0.0);
  CHECK(focus_metric(flat, MetricKind::EnergyGradient) == 0.0);

  GrayImage ramp(16, 16);
  for (Index y = 0; y < 16; ++y)
    for (Index x = 0; x < 16; ++x) ramp(y, x) = 0.01 * double(x + 2 * y);
  CHECK(focus_metric(ramp, MetricKind::Laplacian) == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(focus_metric(ramp, MetricKind::Tenengrad) > 0.0);

  std::mt19937_64 rng(9);
  const GrayImage noise = oracle::random_image(32, 32, rng);
  for (MetricKind k : kAllMetrics) CHECK(std::isfinite(focus_metric(noise, k)));
  CHECK(focus_metric(noise, MetricKind::FFTRatio) > focus_metric(ramp.replicate(2, 2), MetricKind::FFTRatio));
  CHECK_THROWS_AS(focus_metric(GrayImage::Zero(2, 2), MetricKind::Tenengrad), Error);
}

TEST_CASE("metric names round trip") {
  for (MetricKind k : kAllMetrics) CHECK(metric_from_string(to_string(k)) == k);
  CHECK_FALSE(metric_from_string("Brenner").has_value());
}

TEST_CASE("differential gradient") {
  const std::vector<double> peak{0.0, 1.0, 0.0};
  CHECK(differential_gradient(peak, 1) == 1.0);
  const std::vector<double> line{0.0, 0.25, 0.5, 0.75};
  CHECK(differential_gradient(line, 2) == doctest::Approx(0.0));
  CHECK_THROWS_AS(differential_gradient(peak, 0), Error);
  CHECK_THROWS_AS(differential_gradient(peak, 2), Error);
}

TEST_CASE("block origins cover the extent") {
  CHECK(block_origins(200, 200, 50) == std::vector<Index>{0});
  CHECK(block_origins(300, 200, 50) == std::vector<Index>{0, 50, 100});
  CHECK(block_origins(320, 200, 50) == std::vector<Index>{0, 50, 100, 120});
}

TEST_CASE("bdma finds the textured patch") {
  const GrayImage img = textured_patch(400, 500, Roi{250, 100, 100, 100}, 3);
  const RankedBlocks ranked = bdma(img, {100, 100, 50});
  CHECK(ranked.size() == 7 * 9);
  CHECK(ranked.head().roi.x0 == 250);
  CHECK(ranked.head().roi.y0 == 100);
  for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked.entries[i - 1].score >= ranked.entries[i].score);
}

TEST_CASE("bdma edge cases") {
  const GrayImage img = textured_patch(100, 100, Roi{0, 0, 100, 100}, 1);
  CHECK(bdma(img, {100, 100, 50}).size() == 1);
  CHECK_THROWS_AS(bdma(GrayImage::Zero(50, 50), {100, 100, 50}), Error);
  CHECK_THROWS_AS(bdma(img, {50, 50, 0}), Error);
}

TEST_CASE("bdma is thread-count independent") {
  const GrayImage img = textured_patch(300, 300, Roi{120, 40, 60, 60}, 8);
  const RankedBlocks a = bdma(img, {60, 60, 20}, 1), b = bdma(img, {60, 60, 20}, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.entries[i].roi == b.entries[i].roi);
    CHECK(a.entries[i].score == b.entries[i].score);
  }
}

TEST_CASE("afa picks the smd2 argmax") {
  std::mt19937_64 rng(6);
  FocusStack stack;
  for (int i = 0; i < 6; ++i) stack.images.push_back(oracle::random_image(40, 40, rng) * (0.2 + 0.1 * ((i * 7) % 6)));
  const Roi roi{5, 5, 30, 30};
  std::size_t expect = 0;
  for (std::size_t i = 0; i < stack.images.size(); ++i)
    if (smd2(crop(stack.images[i], roi)) > smd2(crop(stack.images[expect], roi))) expect = i;
  CHECK(afa_best_focus(stack, roi) == expect);
  CHECK_THROWS_AS(afa_best_focus(FocusStack{}, roi), Error);
  CHECK_THROWS_AS(afa_best_focus(stack, Roi{20, 20, 30, 30}), Error);
}

TEST_CASE("min-max normalization") {
  const std::vector<double> v{2.0, 4.0, 3.0};
  CHECK(min_max_normalize(v) == std::vector<double>{0.0, 1.0, 0.5});
  const std::vector<double> flat{1.0, 1.0};
  CHECK(min_max_normalize(flat) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("rank sensitivity prefers the sharper peak") {
  MetricCurve sharp{MetricKind::Vollath, {}, {0.0, 1.0, 0.0}};
  MetricCurve blunt{MetricKind::SMD2, {}, {0.5, 1.0, 0.5}};
  const SensitivityReport r = rank_sensitivity({blunt, sharp});
  CHECK(r.consensus_index == 1);
  REQUIRE(r.selected.has_value());
  CHECK(*r.selected == MetricKind::Vollath);
  CHECK(*r.curves[0].delta == 0.5);
  CHECK(*r.curves[1].delta == 1.0);

  MetricCurve lone{MetricKind::Entropy, {}, {0.1, 0.9, 0.3}};
  const SensitivityReport single = rank_sensitivity({lone});
  CHECK(single.selected == MetricKind::Entropy);
}

TEST_CASE("rank sensitivity ignores curves that disagree with the consensus") {
  MetricCurve a{MetricKind::SMD, {}, {0.0, 1.0, 0.0, 0.0}};
  MetricCurve b{MetricKind::SMD2, {}, {0.0, 0.8, 1.0, 0.0}};
  MetricCurve c{MetricKind::Tenengrad, {}, {0.2, 1.0, 0.2, 0.0}};
  const SensitivityReport r = rank_sensitivity({a, b, c});
  CHECK(r.consensus_index == 1);
  CHECK_FALSE(r.curves[1].delta.has_value());
  CHECK(r.selected == MetricKind::SMD);
}

TEST_CASE("report CSV ends with the selection row") {
  MetricCurve a{MetricKind::SMD2, {1.0, 3.0, 2.0}, {0.0, 1.0, 0.5}};
  std::ostringstream out;
  write_csv(out, rank_sensitivity({a}));
  const std::string csv = out.str();
  CHECK(csv.rfind("metric,index,raw,normalized\n", 0) == 0);
  CHECK(csv.find("SMD2,1,3,1\n") != std::string::npos);
  CHECK(csv.find("selected,1,SMD2,0.75\n") != std::string::npos);
}

TEST_CASE("simulated focus stack: consensus finds the sharp slice") {
  StackSpec spec;
  spec.scene.image_w = spec.scene.image_h = 160;
  spec.scene.cx = spec.scene.cy = 80.0;
  spec.count = 9;
  spec.sharp_index = 3;
  const FocusStack stack = simulate_focus_stack(spec);
  const Roi roi{30, 30, 100, 100};
  const SensitivityReport r = metric_sensitivity_report(stack, roi);
  CHECK(r.consensus_index == 3);
  REQUIRE(r.selected.has_value());
  CHECK(r.curves.size() == kAllMetrics.size());
  CHECK(afa_best_focus(stack, roi) == 3);
}

}
