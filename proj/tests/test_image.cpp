#include <doctest.h>

#include "axiscal/image.hpp"
#include "oracles.hpp"

using namespace axiscal;

TEST_SUITE("image") {

TEST_CASE("box mean matches the per-window oracle") {
  std::mt19937_64 rng(11);
  for (Index r : {1, 3, 7}) {
    const GrayImage img = oracle::random_image(23, 31, rng);
    CHECK((box_mean_filter(img, r) - oracle::box_mean(img, r)).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("box mean of a constant image is bit-exact") {
  const GrayImage img = GrayImage::Constant(17, 9, 0.3);
  CHECK((box_mean_filter(img, 4) == img).all());
}

TEST_CASE("box mean accepts expressions and float images") {
  std::mt19937_64 rng(2);
  const GrayImage img = oracle::random_image(8, 8, rng);
  const GrayImage viaExpr = box_mean_filter(img * 2.0, 2);
  CHECK((viaExpr - 2.0 * box_mean_filter(img, 2)).abs().maxCoeff() < 1e-12);
  const Image<float> f = img.cast<float>();
  CHECK((box_mean_filter(f, 2).cast<double>() - box_mean_filter(img, 2)).abs().maxCoeff() < 1e-6);
}

TEST_CASE("negative radius is rejected") {
  CHECK_THROWS_AS(box_mean_filter(GrayImage::Zero(3, 3), -1), Error);
  CHECK_THROWS_AS(min_filter(GrayImage::Zero(3, 3), -1), Error);
}

TEST_CASE("min filter matches the per-window oracle") {
  std::mt19937_64 rng(5);
  const GrayImage img = oracle::random_image(19, 14, rng);
  for (Index r : {0, 1, 4, 10}) CHECK((min_filter(img, r) == oracle::min_window(img, r)).all());
}

TEST_CASE("gaussian sigma and kernel") {
  CHECK(gaussian_sigma_for_ksize(17) == doctest::Approx(2.9));
  const Eigen::VectorXd k = gaussian_kernel_1d(17, 2.9);
  CHECK(k.size() == 17);
  CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k[8] == k.maxCoeff());
  CHECK(k[0] == doctest::Approx(k[16]));
}

TEST_CASE("gaussian local mean matches the 2-D renormalized oracle") {
  std::mt19937_64 rng(7);
  const GrayImage img = oracle::random_image(30, 25, rng);
  const GrayImage fast = gaussian_local_mean(img, 17);
  const GrayImage slow = oracle::gaussian_mean(img, 17, 2.9);
  CHECK((fast - slow).abs().maxCoeff() < 1e-12);
}

TEST_CASE("adaptive threshold marks samples above the local mean") {
  std::mt19937_64 rng(8);
  const GrayImage img = oracle::random_image(20, 20, rng);
  const GrayImage mean = oracle::gaussian_mean(img, 17, 2.9);
  const BitMask expect = img > (mean - 0.05);
  CHECK((adaptive_gaussian_threshold(img, {17, 0.05}) == expect).all());
}

TEST_CASE("adaptive threshold: constant image has no foreground, small image throws") {
  CHECK_FALSE(adaptive_gaussian_threshold(GrayImage::Constant(32, 32, 0.7)).any());
  CHECK_THROWS_AS(adaptive_gaussian_threshold(GrayImage::Zero(10, 10)), Error);
}

TEST_CASE("erosion matches the oracle, outside counts as background") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.8);
  BitMask m(16, 21);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng);
  for (int se : {1, 3, 5}) CHECK((erode(m, se) == oracle::erode(m, se)).all());
  CHECK_FALSE(erode(BitMask::Constant(3, 3, true), 5).any());
}

TEST_CASE("largest 8-connected component") {
  BitMask m = BitMask::Constant(8, 8, false);
  m(0, 0) = m(1, 1) = m(2, 2) = true;  // diagonal chain, 3 pixels
  m(5, 5) = m(5, 6) = true;
  const BitMask c = largest_component(m);
  CHECK(c.count() == 3);
  CHECK(c(2, 2));
  CHECK_FALSE(c(5, 5));
  CHECK_FALSE(largest_component(BitMask::Constant(4, 4, false)).any());
}

TEST_CASE("largest component ties go to the first in scan order") {
  BitMask m = BitMask::Constant(5, 5, false);
  m(0, 3) = m(0, 4) = true;
  m(4, 0) = m(4, 1) = true;
  const BitMask c = largest_component(m);
  CHECK(c(0, 3));
  CHECK_FALSE(c(4, 0));
}

TEST_CASE("distance transform matches brute force") {
  std::mt19937_64 rng(13);
  std::bernoulli_distribution coin(0.85);
  BitMask m(17, 12);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng);
  CHECK((squared_distance_transform(m) - oracle::squared_distance(m)).abs().maxCoeff() == 0.0);
}

TEST_CASE("inscribed circle of a full square is half its side") {
  const Circle c = largest_inscribed_circle(BitMask::Constant(5, 5, true));
  CHECK(c.cx == 2.0);
  CHECK(c.cy == 2.0);
  CHECK(c.r == 2.5);
}

TEST_CASE("inscribed circle of a rasterized disk") {
  BitMask m = BitMask::Constant(61, 61, false);
  const double cx = 33.0, cy = 27.0, radius = 12.0;
  for (Index y = 0; y < m.rows(); ++y)
    for (Index x = 0; x < m.cols(); ++x) m(y, x) = std::hypot(x - cx, y - cy) <= radius;
  const Circle c = largest_inscribed_circle(m);
  CHECK(c.cx == cx);
  CHECK(c.cy == cy);
  CHECK(std::abs(c.r - radius) <= 1.0);
}

TEST_CASE("inscribed circle uses the largest component and smallest row/column ties") {
  BitMask m = BitMask::Constant(20, 40, false);
  m.block(2, 2, 5, 5).setConstant(true);     // wider but smaller component
  m.block(10, 5, 3, 30).setConstant(true);   // long bar: biggest component
  const Circle c = largest_inscribed_circle(m);
  CHECK(c.cy == 11.0);
  CHECK(c.cx == 6.0);  // first maximal pixel along the bar
  CHECK(c.r == 1.5);
  CHECK_THROWS_AS(largest_inscribed_circle(BitMask::Constant(4, 4, false)), Error);
}

TEST_CASE("inscribed circle is translation-equivariant") {
  BitMask a = BitMask::Constant(40, 40, false), b = a;
  a.block(5, 7, 9, 11).setConstant(true);
  b.block(5 + 13, 7 + 6, 9, 11).setConstant(true);
  const Circle ca = largest_inscribed_circle(a), cb = largest_inscribed_circle(b);
  CHECK(cb.cx - ca.cx == 6.0);
  CHECK(cb.cy - ca.cy == 13.0);
  CHECK(cb.r == ca.r);
}

TEST_CASE("crop and clamp helpers") {
  GrayImage img(4, 5);
  for (Index i = 0; i < img.size(); ++i) img.data()[i] = double(i);
  const GrayImage c = crop(img, Roi{1, 2, 3, 2});
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 3);
  CHECK(c(0, 0) == img(2, 1));
  CHECK_THROWS_AS(crop(img, Roi{3, 0, 3, 1}), Error);
  const GrayImage k = clamp01(GrayImage::Constant(1, 2, 1.5));
  CHECK(k(0, 1) == 1.0);
  CHECK(Roi{0, 0, 4, 4}.contains(3.0, 0.0));
  CHECK_FALSE(Roi{0, 0, 4, 4}.contains(4.0, 0.0));
}

TEST_CASE("PGM round trip quantizes to 1/255") {
  std::mt19937_64 rng(1);
  const GrayImage img = oracle::random_image(7, 9, rng);
  const GrayImage back = decode_pgm(encode_pgm(img));
  CHECK(back.rows() == 7);
  CHECK(back.cols() == 9);
  CHECK((back - img).abs().maxCoeff() <= 0.5 / 255.0 + 1e-12);
  CHECK((decode_pgm(encode_pgm(back)) == back).all());
}

TEST_CASE("PGM header comments and malformed input") {
  const std::string bytes = std::string("P5\n# comment line\n2 1\n255\n") + char(0) + char(255);
  const GrayImage img = decode_pgm(bytes);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(0, 1) == 1.0);
  CHECK_THROWS_AS(decode_pgm("P2\n2 1\n255\n0 0"), Error);
  CHECK_THROWS_AS(decode_pgm("P5\n2 1\n65535\n"), Error);
  CHECK_THROWS_AS(decode_pgm(std::string("P5\n4 4\n255\n") + "ab"), Error);
  CHECK_THROWS_AS(read_pgm("/nonexistent/file.pgm"), Error);
}

}
