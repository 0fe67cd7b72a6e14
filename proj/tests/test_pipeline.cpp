#include <doctest.h>

#include <sstream>

#include "axiscal/pipeline.hpp"

using namespace axiscal;

namespace {

Scene scene_at(Index side, double cx, double cy) {
  SceneSpec s;
  s.image_w = s.image_h = side;
  s.cx = cx;
  s.cy = cy;
  return render_crosshair(s);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("aea routing thresholds are strict") {
  const double e = 1e-9;
  CHECK(aea_route(0.5 + e) == AeaPath::Direct);
  CHECK(aea_route(0.5) == AeaPath::MdcNet);
  CHECK(aea_route(0.5 - e) == AeaPath::MdcNet);
  CHECK(aea_route(0.1 + e) == AeaPath::MdcNet);
  CHECK(aea_route(0.1) == AeaPath::Gfa);
  CHECK(aea_route(0.0) == AeaPath::Gfa);
  CHECK(aea_route(3.0, 5.0, 2.0) == AeaPath::MdcNet);
  CHECK(std::string(to_string(AeaPath::Gfa)) == "gfa");
}

TEST_CASE("aea config validation") {
  AeaConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.thr_mdc = 0.6;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("aea dispatch per band") {
  // A one-pixel checker is about as sharp as an 8-bit image gets.
  const GrayImage checker = GrayImage::NullaryExpr(64, 64, [](Index y, Index x) { return (x + y) % 2 ? 0.8 : 0.2; });
  REQUIRE(smd2(checker) > 0.5);
  const AeaResult direct = aea_dispatch(checker, AeaConfig{});
  CHECK(direct.path == AeaPath::Direct);
  CHECK((direct.enhanced == checker).all());

  const GrayImage hazy = degrade(scene_at(200, 100, 100).image, DegradeSpec{});
  REQUIRE(smd2(hazy) <= 0.1);
  const AeaResult g = aea_dispatch(hazy, AeaConfig{});
  CHECK(g.path == AeaPath::Gfa);
  CHECK((g.enhanced == gfa_enhance(hazy)).all());

  AeaConfig mid;
  mid.thr_mdc = 1e-6;
  CHECK_THROWS_AS(aea_dispatch(hazy, mid), Error);
  try {
    aea_dispatch(hazy, mid);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingWeights);
  }
  mid.weights = MdcNet::xavier(1);
  const AeaResult m = aea_dispatch(hazy, mid);
  CHECK(m.path == AeaPath::MdcNet);
  CHECK((m.enhanced == mdcnet_enhance(*mid.weights, hazy)).all());
}

TEST_CASE("center extraction on a sharp scene") {
  for (const auto& [cx, cy] : {std::pair{100.0, 100.0}, {87.3, 112.6}, {120.5, 70.2}}) {
    const Scene s = scene_at(200, cx, cy);
    const Point2 c = extract_center(s.image, Roi{0, 0, 200, 200});
    CHECK(std::hypot(c.x() - cx, c.y() - cy) <= 2.0);
  }
}

TEST_CASE("center extraction after degradation and GFA") {
  const Scene s = scene_at(300, 160.4, 141.7);
  DegradeSpec d;
  d.seed = 9;
  const GrayImage hazy = degrade(s.image, d);
  const Roi roi{50, 40, 200, 200};
  const Point2 c = extract_center(gfa_enhance(crop(hazy, roi)), roi);
  CHECK(std::hypot(c.x() - s.cx, c.y() - s.cy) <= 3.0);
}

TEST_CASE("center extraction on a blank ROI fails with NoForeground") {
  try {
    extract_center(GrayImage::Constant(64, 64, 0.4), Roi{0, 0, 64, 64});
    FAIL("blank ROI accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoForeground);
  }
}

TEST_CASE("system init on a single image and on a focus stack") {
  FocusStack one;
  one.images.push_back(scene_at(400, 250, 180).image);
  const SystemInitResult r1 = system_init(one);
  CHECK(r1.best_index == 0);
  CHECK(r1.roi.contains(250, 180));

  StackSpec spec;
  spec.scene.image_w = spec.scene.image_h = 400;
  spec.scene.cx = 230.0;
  spec.scene.cy = 170.0;
  const FocusStack stack = simulate_focus_stack(spec);
  const SystemInitResult par = system_init(stack, {}, true);
  const SystemInitResult seq = system_init(stack, {}, false);
  CHECK(par.roi == seq.roi);
  CHECK(par.best_index == seq.best_index);
  CHECK(par.best_index == spec.sharp_index);
  CHECK(par.roi.contains(230.0, 170.0));

  CHECK_THROWS_AS(system_init(FocusStack{}), Error);
  CHECK_THROWS_AS(system_init(stack, {}, true, 99), Error);
  CHECK_THROWS_AS(system_init(one, {500, 500, 50}, true), Error);
}

TEST_CASE("full-image observer tracks the true center") {
  FullImageSpec spec;
  spec.apply_degrade = false;
  const Point2 axis(1647.5, 1235.5);
  const CenterObserver observe = full_image_observer(spec, axis);
  for (const Point2& offset : {Point2(0, 0), Point2(-120.3, 40.8), Point2(85.1, -150.6)}) {
    const Point2 truth = axis + offset;
    CHECK((observe(truth) - truth).norm() <= 2.0);
  }
  FullImageSpec tiny;
  tiny.frame_w = 100;
  CHECK_THROWS_AS(full_image_observer(tiny, axis), Error);
}

TEST_CASE("full-image observer with degradation is reproducible") {
  FullImageSpec spec;
  const Point2 axis(1647.5, 1235.5), truth(1700.2, 1200.9);
  const CenterObserver a = full_image_observer(spec, axis), b = full_image_observer(spec, axis);
  const Point2 pa = a(truth), pb = b(truth);
  CHECK(pa == pb);
  CHECK((pa - truth).norm() <= 3.0);
}

TEST_CASE("closed loop in full-image mode") {
  RigState s;
  s.ecc_um = Point2(150.0, -220.0);
  VirtualRig rig(s);
  FullImageSpec spec;
  const CorrectionLog log = correction_loop(rig, CorrectionConfig{}, full_image_observer(spec, s.axis_px));
  CHECK(log.converged);
  CHECK(log.final_ecc_um.norm() < 10.0);
}

TEST_CASE("bench corpus and report") {
  const std::vector<GrayImage> corpus = make_bench_corpus({64, 96}, 2, 3);
  REQUIRE(corpus.size() == 4);
  CHECK(corpus[0].cols() == 64);
  CHECK(corpus[3].rows() == 96);
  CHECK(make_bench_corpus({64}, 1, 3)[0].isApprox(corpus[0]));

  BenchOptions opts;
  opts.methods = {BenchMethod::MaxMin, BenchMethod::Gfa};
  opts.repetitions = 1;
  const std::vector<BenchRow> rows = bench_report(corpus, opts);
  CHECK(rows.size() == 8);
  CHECK(rows[0].method == "maxmin");
  CHECK(rows[4].method == "gfa");
  for (const auto& r : rows) CHECK(r.wall_ms >= 0.0);
  CHECK(rows[4].smd2_after > rows[4].smd2_before);
  CHECK(bench_report({}, opts).empty());

  const auto summary = summarize(rows);
  REQUIRE(summary.size() == 4);
  CHECK(summary[0].method == "maxmin");
  CHECK(summary[0].scale == 64);
  CHECK(summary[0].count == 2);
  CHECK(summary[0].mean_smd2_before == doctest::Approx((rows[0].smd2_before + rows[1].smd2_before) / 2));

  std::ostringstream csv;
  write_csv(csv, rows);
  CHECK(csv.str().rfind("method,scale,image,smd2_before,smd2_after,wall_ms\n", 0) == 0);

  opts.methods = {BenchMethod::MdcNet};
  CHECK_THROWS_AS(bench_report(corpus, opts), Error);
  opts.repetitions = 0;
  opts.weights = MdcNet{};
  CHECK_THROWS_AS(bench_report(corpus, opts), Error);
}

}
