#ifndef AXISCAL_CONFIG_HPP
#define AXISCAL_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "axiscal/correction.hpp"
#include "axiscal/dehaze.hpp"
#include "axiscal/focus.hpp"
#include "axiscal/mdcnet.hpp"
#include "axiscal/optics.hpp"
#include "axiscal/pipeline.hpp"

namespace axiscal {

// JSON mapping for the configuration structs. Missing keys keep their
// defaults; unknown keys are rejected with FormatError.
void to_json(nlohmann::json& j, const SceneSpec& v);
void from_json(const nlohmann::json& j, SceneSpec& v);
void to_json(nlohmann::json& j, const DegradeSpec& v);
void from_json(const nlohmann::json& j, DegradeSpec& v);
void to_json(nlohmann::json& j, const DehazeParams& v);
void from_json(const nlohmann::json& j, DehazeParams& v);
void to_json(nlohmann::json& j, const BlockSearchParams& v);
void from_json(const nlohmann::json& j, BlockSearchParams& v);
void to_json(nlohmann::json& j, const ThresholdParams& v);
void from_json(const nlohmann::json& j, ThresholdParams& v);
void to_json(nlohmann::json& j, const RigState& v);
void from_json(const nlohmann::json& j, RigState& v);
void to_json(nlohmann::json& j, const CorrectionConfig& v);
void from_json(const nlohmann::json& j, CorrectionConfig& v);
void to_json(nlohmann::json& j, const TrainConfig& v);
void from_json(const nlohmann::json& j, TrainConfig& v);
void to_json(nlohmann::json& j, const DatasetSpec& v);
void from_json(const nlohmann::json& j, DatasetSpec& v);

/// Input document of the `correct` command.
struct CorrectRequest {
  RigState rig;
  CorrectionConfig loop;
  bool full_image = false;
  FullImageSpec full;  // used when full_image is set
};

void to_json(nlohmann::json& j, const CorrectRequest& v);
void from_json(const nlohmann::json& j, CorrectRequest& v);

/// Input document of the `simulate` command.
struct SimulateRequest {
  SceneSpec scene;
  DegradeSpec degrade;
  bool apply_degrade = true;
};

void to_json(nlohmann::json& j, const SimulateRequest& v);
void from_json(const nlohmann::json& j, SimulateRequest& v);

/// Parses the text, mapping parser and type errors to FormatError.
template <typename T>
T parse_config(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("config: ") + e.what());
  }
}

std::string read_text_file(const std::string& path);

/// Value of AXISCAL_SEED when set to a valid unsigned integer.
std::optional<std::uint64_t> seed_override();

}  // namespace axiscal

#endif  // AXISCAL_CONFIG_HPP
