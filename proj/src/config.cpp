#include "axiscal/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace axiscal {

using nlohmann::json;

namespace {

// Reads keys present in an object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, const char* what) : j_(j), what_(what) {
    if (!j.is_object()) throw Error(ErrorCode::FormatError, std::string(what) + ": expected a JSON object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw Error(ErrorCode::FormatError, std::string(what_) + ": unknown key '" + item.key() + "'");
  }

  template <typename T>
  Reader& operator()(const char* key, T& field) {
    seen_.insert(key);
    if (j_.contains(key)) j_.at(key).get_to(field);
    return *this;
  }

  Reader& operator()(const char* key, Point2& field) {
    seen_.insert(key);
    if (j_.contains(key)) {
      const auto v = j_.at(key).get<std::vector<double>>();
      if (v.size() != 2) throw Error(ErrorCode::FormatError, std::string(what_) + ": '" + key + "' needs 2 values");
      field = Point2(v[0], v[1]);
    }
    return *this;
  }

 private:
  const json& j_;
  const char* what_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }

  template <typename T>
  Writer& operator()(const char* key, const T& field) {
    j_[key] = field;
    return *this;
  }
  Writer& operator()(const char* key, const Point2& field) {
    j_[key] = {field.x(), field.y()};
    return *this;
  }

 private:
  json& j_;
};

template <typename IO, typename T>
void bind_scene(IO& io, T& v) {
  io("image_w", v.image_w)("image_h", v.image_h)("cx", v.cx)("cy", v.cy)("line_half_width", v.line_half_width)(
      "line_sigma", v.line_sigma)("core_sigma", v.core_sigma)("arm_gain", v.arm_gain)("peak", v.peak)("background", v.background)(
      "falloff_radius", v.falloff_radius);
}

template <typename IO, typename T>
void bind_degrade(IO& io, T& v) {
  io("t_value", v.t_value)("a_value", v.a_value)("psf_sigma", v.psf_sigma)("noise_sigma", v.noise_sigma)(
      "seed", v.seed);
}

template <typename IO, typename T>
void bind_dehaze(IO& io, T& v) {
  io("patch_radius", v.patch_radius)("a_fraction", v.a_fraction)("t_floor", v.t_floor)(
      "gf_radius", v.gf_radius)("gf_eps", v.gf_eps)("subsample_s", v.subsample_s);
}

template <typename IO, typename T>
void bind_blocks(IO& io, T& v) {
  io("block_w", v.block_w)("block_h", v.block_h)("step_t", v.step_t);
}

template <typename IO, typename T>
void bind_threshold(IO& io, T& v) {
  io("ksize", v.ksize)("offset_c", v.offset_c);
}

template <typename IO, typename T>
void bind_rig(IO& io, T& v) {
  io("ecc_um", v.ecc_um)("spin_deg", v.spin_deg)("scale_um_per_px", v.scale_um_per_px)(
      "obs_noise_px", v.obs_noise_px)("act_noise_um", v.act_noise_um)("seed", v.seed)("axis_px", v.axis_px);
}

template <typename IO, typename T>
void bind_loop(IO& io, T& v) {
  io("steps_per_rev", v.steps_per_rev)("step_deg", v.step_deg)("threshold_um", v.threshold_um)(
      "max_iter", v.max_iter);
}

template <typename IO, typename T>
void bind_train(IO& io, T& v) {
  io("epochs", v.epochs)("batch_size", v.batch_size)("lr_start", v.lr_start)("lr_end", v.lr_end)(
      "momentum", v.momentum)("b_const", v.b_const)("seed", v.seed);
}

template <typename IO, typename T>
void bind_dataset(IO& io, T& v) {
  io("scene_scale", v.scene_scale)("t_min", v.t_min)("t_max", v.t_max)("a_min", v.a_min)("a_max", v.a_max)(
      "psf_min", v.psf_min)("psf_max", v.psf_max)("noise_min", v.noise_min)("noise_max", v.noise_max)(
      "line_sigma_min", v.line_sigma_min)("line_sigma_max", v.line_sigma_max)(
      "center_margin", v.center_margin)("seed", v.seed);
}

// Full-image observation settings; weights are loaded separately.
template <typename IO, typename T>
void bind_full(IO& io, T& v) {
  io("frame_w", v.frame_w)("frame_h", v.frame_h)("scene", v.scene)("degrade", v.degrade)(
      "apply_degrade", v.apply_degrade)("blocks", v.blocks)("thr_direct", v.aea.thr_direct)(
      "thr_mdc", v.aea.thr_mdc)("dehaze", v.aea.dehaze)("threshold", v.threshold)("se_size", v.se_size);
}

}  // namespace

#define AXISCAL_JSON_PAIR(Type, binder, label)             \
  void to_json(json& j, const Type& v) {                   \
    Writer w(j);                                           \
    binder(w, v);                                          \
  }                                                        \
  void from_json(const json& j, Type& v) {                 \
    Type parsed = v;                                       \
    {                                                      \
      Reader r(j, label);                                  \
      binder(r, parsed);                                   \
    }                                                      \
    v = parsed;                                            \
  }

AXISCAL_JSON_PAIR(SceneSpec, bind_scene, "scene")
AXISCAL_JSON_PAIR(DegradeSpec, bind_degrade, "degrade")
AXISCAL_JSON_PAIR(DehazeParams, bind_dehaze, "dehaze")
AXISCAL_JSON_PAIR(BlockSearchParams, bind_blocks, "blocks")
AXISCAL_JSON_PAIR(ThresholdParams, bind_threshold, "threshold")
AXISCAL_JSON_PAIR(RigState, bind_rig, "rig")
AXISCAL_JSON_PAIR(CorrectionConfig, bind_loop, "loop")
AXISCAL_JSON_PAIR(TrainConfig, bind_train, "train")
AXISCAL_JSON_PAIR(DatasetSpec, bind_dataset, "dataset")
AXISCAL_JSON_PAIR(FullImageSpec, bind_full, "full_image_spec")

#undef AXISCAL_JSON_PAIR

void to_json(json& j, const CorrectRequest& v) {
  j = json{{"rig", v.rig}, {"loop", v.loop}, {"full_image", v.full_image}, {"full", v.full}};
}

void from_json(const json& j, CorrectRequest& v) {
  CorrectRequest parsed = v;
  {
    Reader r(j, "correct");
    r("rig", parsed.rig)("loop", parsed.loop)("full_image", parsed.full_image)("full", parsed.full);
  }
  v = parsed;
}

void to_json(json& j, const SimulateRequest& v) {
  j = json{{"scene", v.scene}, {"degrade", v.degrade}, {"apply_degrade", v.apply_degrade}};
}

void from_json(const json& j, SimulateRequest& v) {
  SimulateRequest parsed = v;
  {
    Reader r(j, "simulate");
    r("scene", parsed.scene)("degrade", parsed.degrade)("apply_degrade", parsed.apply_degrade);
  }
  v = parsed;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<std::uint64_t> seed_override() {
  const char* raw = std::getenv("AXISCAL_SEED");
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (*end != '\0' || raw[0] == '-')
    throw Error(ErrorCode::InvalidArgument, std::string("AXISCAL_SEED is not an unsigned integer: ") + raw);
  return std::uint64_t(v);
}

}  // namespace axiscal
