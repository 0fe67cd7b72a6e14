#include <doctest.h>

#include <cstdlib>

#include "axiscal/config.hpp"

using namespace axiscal;

TEST_SUITE("config") {

TEST_CASE("missing keys keep defaults") {
  const auto req = parse_config<CorrectRequest>(R"({"rig": {"ecc_um": [10, -20], "seed": 5}})");
  CHECK(req.rig.ecc_um == Point2(10, -20));
  CHECK(req.rig.seed == 5);
  CHECK(req.rig.scale_um_per_px == 1.375);
  CHECK(req.loop.steps_per_rev == 12);
  CHECK_FALSE(req.full_image);
}

TEST_CASE("round trip through JSON") {
  CorrectRequest req;
  req.rig.ecc_um = Point2(1.5, 2.5);
  req.rig.act_noise_um = 5.0;
  req.loop.threshold_um = 7.0;
  req.full_image = true;
  req.full.frame_w = 512;
  req.full.aea.dehaze.gf_radius = 12;
  req.full.scene.arm_gain = 0.6;
  const nlohmann::json j = req;
  const auto back = parse_config<CorrectRequest>(j.dump());
  CHECK(back.rig.ecc_um == req.rig.ecc_um);
  CHECK(back.rig.act_noise_um == 5.0);
  CHECK(back.loop.threshold_um == 7.0);
  CHECK(back.full_image);
  CHECK(back.full.frame_w == 512);
  CHECK(back.full.aea.dehaze.gf_radius == 12);
  CHECK(back.full.scene.arm_gain == 0.6);
  CHECK(nlohmann::json(back) == j);

  TrainConfig t;
  t.epochs = 7;
  CHECK(parse_config<TrainConfig>(nlohmann::json(t).dump()).epochs == 7);
  SimulateRequest sim;
  sim.degrade.seed = 99;
  CHECK(parse_config<SimulateRequest>(nlohmann::json(sim).dump()).degrade.seed == 99);
}

TEST_CASE("unknown keys and bad values are rejected") {
  auto code_of = [](const std::string& text) {
    try {
      parse_config<CorrectRequest>(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of(R"({"rig": {"ecc": [1, 2]}})") == ErrorCode::FormatError);
  CHECK(code_of(R"({"extra": 1})") == ErrorCode::FormatError);
  CHECK(code_of(R"({"rig": {"ecc_um": [1, 2, 3]}})") == ErrorCode::FormatError);
  CHECK(code_of(R"({"loop": {"max_iter": "ten"}})") == ErrorCode::FormatError);
  CHECK(code_of("[1, 2") == ErrorCode::FormatError);
  CHECK(code_of("[]") == ErrorCode::FormatError);
}

TEST_CASE("AXISCAL_SEED override") {
  ::unsetenv("AXISCAL_SEED");
  CHECK_FALSE(seed_override().has_value());
  ::setenv("AXISCAL_SEED", "1234", 1);
  CHECK(seed_override() == 1234u);
  ::setenv("AXISCAL_SEED", "12x", 1);
  CHECK_THROWS_AS(seed_override(), Error);
  ::setenv("AXISCAL_SEED", "-3", 1);
  CHECK_THROWS_AS(seed_override(), Error);
  ::unsetenv("AXISCAL_SEED");
}

TEST_CASE("reading a missing file is an IoError") {
  try {
    read_text_file("/nonexistent/config.json");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

}
