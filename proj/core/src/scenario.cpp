#include "maskbot/scenario.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "maskbot/error.hpp"

namespace maskbot {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!value.empty() && value.back() == ',') out.emplace_back();
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Vec>
std::string fmt_list(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

// Parse helpers report failures as ParseError on the offending line.
struct Reader {
  int line;
  const std::string& key;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line, key + ": " + what);
  }

  double number(const std::string& text) const {
    if (text.empty()) fail("expected a number");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
      fail("expected a finite number, got '" + text + "'");
    }
    return v;
  }

  long long integer(const std::string& text) const {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
      fail("expected an integer, got '" + text + "'");
    }
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& text) const {
    if (text.empty() || text.front() == '-') fail("expected a non-negative integer");
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size() || errno == ERANGE) {
      fail("expected a non-negative integer, got '" + text + "'");
    }
    return v;
  }

  bool boolean(const std::string& text) const {
    if (text == "true") return true;
    if (text == "false") return false;
    fail("expected true or false, got '" + text + "'");
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector(const std::string& text) const {
    const auto items = split_list(text);
    if (static_cast<int>(items.size()) != N) {
      fail("expected " + std::to_string(N) + " comma-separated numbers");
    }
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v[i] = number(items[static_cast<std::size_t>(i)]);
    return v;
  }
};

struct Key {
  std::string name;
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const Reader&, const std::string&)> set;
};

Key number_key(std::string name, double ScenarioConfig::*field) {
  return {std::move(name), [field](const ScenarioConfig& c) { return fmt(c.*field); },
          [field](ScenarioConfig& c, const Reader& r, const std::string& v) {
            c.*field = r.number(v);
          }};
}

template <typename Owner, typename Member>
Key nested_number(std::string name, Owner ScenarioConfig::*owner, Member Owner::*field) {
  return {std::move(name),
          [owner, field](const ScenarioConfig& c) { return fmt((c.*owner).*field); },
          [owner, field](ScenarioConfig& c, const Reader& r, const std::string& v) {
            (c.*owner).*field = r.number(v);
          }};
}

template <typename Owner>
Key nested_int(std::string name, Owner ScenarioConfig::*owner, int Owner::*field) {
  return {std::move(name),
          [owner, field](const ScenarioConfig& c) { return std::to_string((c.*owner).*field); },
          [owner, field](ScenarioConfig& c, const Reader& r, const std::string& v) {
            const long long n = r.integer(v);
            if (n < -1000000000LL || n > 1000000000LL) r.fail("integer out of range");
            (c.*owner).*field = static_cast<int>(n);
          }};
}

Key vec3_key(std::string name, Vec3 ScenarioConfig::*field) {
  return {std::move(name), [field](const ScenarioConfig& c) { return fmt_list(c.*field); },
          [field](ScenarioConfig& c, const Reader& r, const std::string& v) {
            c.*field = r.vector<3>(v);
          }};
}

Key bool_key(std::string name, bool ScenarioConfig::*field) {
  return {std::move(name),
          [field](const ScenarioConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [field](ScenarioConfig& c, const Reader& r, const std::string& v) {
            c.*field = r.boolean(v);
          }};
}

Key string_key(std::string name, std::string ScenarioConfig::*field) {
  return {std::move(name), [field](const ScenarioConfig& c) { return c.*field; },
          [field](ScenarioConfig& c, const Reader&, const std::string& v) { c.*field = v; }};
}

Key dh_key(std::string name, double DHRow::*field) {
  return {std::move(name),
          [field](const ScenarioConfig& c) {
            JointVector v;
            for (int i = 0; i < kNumJoints; ++i) v[i] = c.dh.joints[static_cast<std::size_t>(i)].*field;
            return fmt_list(v);
          },
          [field](ScenarioConfig& c, const Reader& r, const std::string& text) {
            const JointVector v = r.vector<kNumJoints>(text);
            for (int i = 0; i < kNumJoints; ++i) c.dh.joints[static_cast<std::size_t>(i)].*field = v[i];
          }};
}

Key joints_key(std::string name, std::function<JointVector&(ScenarioConfig&)> ref) {
  return {std::move(name),
          [ref](const ScenarioConfig& c) { return fmt_list(ref(const_cast<ScenarioConfig&>(c))); },
          [ref](ScenarioConfig& c, const Reader& r, const std::string& v) {
            ref(c) = r.vector<kNumJoints>(v);
          }};
}

TrajectoryKind trajectory_kind_from(const Reader& r, const std::string& v) {
  for (TrajectoryKind k : {TrajectoryKind::kStatic, TrajectoryKind::kSinusoidalYaw,
                           TrajectoryKind::kSinusoidalPitch, TrajectoryKind::kLinearTranslation,
                           TrajectoryKind::kComposite}) {
    if (to_string(k) == v) return k;
  }
  r.fail("expected static, sinusoidal_yaw, sinusoidal_pitch, linear_translation or composite");
}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    for (const auto& [prefix, owner] :
         {std::pair{std::string("camera"), &ScenarioConfig::camera},
          std::pair{std::string("projector"), &ScenarioConfig::projector}}) {
      k.push_back(nested_number(prefix + ".fx", owner, &CameraIntrinsics::fx));
      k.push_back(nested_number(prefix + ".fy", owner, &CameraIntrinsics::fy));
      k.push_back(nested_number(prefix + ".cx", owner, &CameraIntrinsics::cx));
      k.push_back(nested_number(prefix + ".cy", owner, &CameraIntrinsics::cy));
      k.push_back(nested_int(prefix + ".width", owner, &CameraIntrinsics::width));
      k.push_back(nested_int(prefix + ".height", owner, &CameraIntrinsics::height));
    }
    k.push_back(dh_key("robot.dh.a", &DHRow::a));
    k.push_back(dh_key("robot.dh.d", &DHRow::d));
    k.push_back(dh_key("robot.dh.alpha", &DHRow::alpha));
    k.push_back(dh_key("robot.dh.theta_offset", &DHRow::theta_offset));
    k.push_back(joints_key("robot.limits.min", [](ScenarioConfig& c) -> JointVector& { return c.limits.min; }));
    k.push_back(joints_key("robot.limits.max", [](ScenarioConfig& c) -> JointVector& { return c.limits.max; }));
    k.push_back(joints_key("robot.limits.max_speed",
                           [](ScenarioConfig& c) -> JointVector& { return c.limits.max_speed; }));
    k.push_back(joints_key("robot.home", [](ScenarioConfig& c) -> JointVector& { return c.home; }));
    k.push_back(vec3_key("tool.projector_offset", &ScenarioConfig::projector_offset));
    k.push_back(vec3_key("tool.camera_offset", &ScenarioConfig::camera_offset));

    k.push_back(string_key("face.model", &ScenarioConfig::face_model));
    k.push_back(number_key("face.real_width", &ScenarioConfig::face_real_width));
    k.push_back({"face.width_pair",
                 [](const ScenarioConfig& c) {
                   return std::to_string(c.width_pair.first) + ", " +
                          std::to_string(c.width_pair.second);
                 },
                 [](ScenarioConfig& c, const Reader& r, const std::string& v) {
                   const auto items = split_list(v);
                   if (items.size() != 2) r.fail("expected two landmark indices");
                   const long long a = r.integer(items[0]), b = r.integer(items[1]);
                   if (a < 0 || a >= kNumLandmarks || b < 0 || b >= kNumLandmarks) {
                     r.fail("indices must be in [0, 67]");
                   }
                   c.width_pair = {static_cast<int>(a), static_cast<int>(b)};
                 }});

    k.push_back({"trajectory.kind",
                 [](const ScenarioConfig& c) { return std::string(to_string(c.trajectory_kind)); },
                 [](ScenarioConfig& c, const Reader& r, const std::string& v) {
                   c.trajectory_kind = trajectory_kind_from(r, v);
                 }});
    k.push_back(number_key("trajectory.amplitude", &ScenarioConfig::trajectory_amplitude));
    k.push_back(number_key("trajectory.frequency", &ScenarioConfig::trajectory_frequency));
    k.push_back(vec3_key("trajectory.base_position", &ScenarioConfig::head_position));
    k.push_back(vec3_key("trajectory.base_normal", &ScenarioConfig::head_normal));
    k.push_back(vec3_key("trajectory.base_up", &ScenarioConfig::head_up));
    k.push_back(vec3_key("trajectory.direction", &ScenarioConfig::trajectory_direction));
    k.push_back(vec3_key("trajectory.pivot", &ScenarioConfig::trajectory_pivot));
    k.push_back(number_key("trajectory.translation_amplitude",
                           &ScenarioConfig::trajectory_translation_amplitude));

    k.push_back(number_key("noise.sigma_px", &ScenarioConfig::noise_sigma));

    k.push_back(nested_number("servo.standoff", &ScenarioConfig::gains, &ServoGains::standoff));
    k.push_back(nested_number("servo.position_gain", &ScenarioConfig::gains, &ServoGains::position_gain));
    k.push_back(nested_number("servo.orientation_gain", &ScenarioConfig::gains,
                              &ServoGains::orientation_gain));
    k.push_back(nested_number("servo.control_period", &ScenarioConfig::gains,
                              &ServoGains::control_period));
    k.push_back(vec3_key("servo.up_hint", &ScenarioConfig::up_hint));

    k.push_back(nested_number("pipeline.capture_latency", &ScenarioConfig::pipeline,
                              &PipelineConfig::capture_latency));
    k.push_back(nested_number("pipeline.detect_latency", &ScenarioConfig::pipeline,
                              &PipelineConfig::detect_latency));
    k.push_back(nested_number("pipeline.plan_latency", &ScenarioConfig::pipeline,
                              &PipelineConfig::plan_latency));
    k.push_back(nested_number("pipeline.project_latency", &ScenarioConfig::pipeline,
                              &PipelineConfig::project_latency));

    k.push_back(bool_key("predictor.enabled", &ScenarioConfig::predictor_enabled));
    k.push_back(nested_number("predictor.linear_accel", &ScenarioConfig::predictor_noise,
                              &PredictorNoise::linear_accel));
    k.push_back(nested_number("predictor.angular_accel", &ScenarioConfig::predictor_noise,
                              &PredictorNoise::angular_accel));
    k.push_back(nested_number("predictor.position_measurement", &ScenarioConfig::predictor_noise,
                              &PredictorNoise::position_measurement));
    k.push_back(nested_number("predictor.rotation_measurement", &ScenarioConfig::predictor_noise,
                              &PredictorNoise::rotation_measurement));
    k.push_back(nested_number("predictor.initial_velocity", &ScenarioConfig::predictor_noise,
                              &PredictorNoise::initial_velocity));
    k.push_back(nested_number("predictor.initial_angular_velocity",
                              &ScenarioConfig::predictor_noise,
                              &PredictorNoise::initial_angular_velocity));

    k.push_back(number_key("run.duration", &ScenarioConfig::duration));
    k.push_back({"run.seed", [](const ScenarioConfig& c) { return std::to_string(c.seed); },
                 [](ScenarioConfig& c, const Reader& r, const std::string& v) {
                   c.seed = r.unsigned_integer(v);
                 }});

    k.push_back(bool_key("output.dump_frames", &ScenarioConfig::dump_frames));
    k.push_back({"output.frame_stride",
                 [](const ScenarioConfig& c) { return std::to_string(c.frame_stride); },
                 [](ScenarioConfig& c, const Reader& r, const std::string& v) {
                   const long long n = r.integer(v);
                   if (n < -1000000000LL || n > 1000000000LL) r.fail("integer out of range");
                   c.frame_stride = static_cast<int>(n);
                 }});
    k.push_back(bool_key("output.render_every_tick", &ScenarioConfig::render_every_tick));

    k.push_back({"mask.kind", [](const ScenarioConfig& c) { return std::string(to_string(c.mask_kind)); },
                 [](ScenarioConfig& c, const Reader& r, const std::string& v) {
                   try {
                     c.mask_kind = mask_kind_from_string(v);
                   } catch (const ValidationError&) {
                     r.fail("expected beard, glasses, logo, makeup or custom");
                   }
                 }});
    k.push_back(string_key("mask.texture", &ScenarioConfig::mask_texture));
    k.push_back(string_key("mask.anchors", &ScenarioConfig::mask_anchors));
    k.push_back({"mask.sampling",
                 [](const ScenarioConfig& c) {
                   return std::string(c.sampling == Sampling::kNearest ? "nearest" : "bilinear");
                 },
                 [](ScenarioConfig& c, const Reader& r, const std::string& v) {
                   if (v == "nearest") c.sampling = Sampling::kNearest;
                   else if (v == "bilinear") c.sampling = Sampling::kBilinear;
                   else r.fail("expected nearest or bilinear");
                 }});
    return k;
  }();
  return keys;
}

const std::map<std::string, const Key*>& key_index() {
  static const std::map<std::string, const Key*> index = [] {
    std::map<std::string, const Key*> m;
    for (const auto& k : registry()) m[k.name] = &k;
    return m;
  }();
  return index;
}

void require(bool ok, const std::string& field, const std::string& constraint) {
  if (!ok) throw ValidationError(field, constraint);
}

bool finite3(const Vec3& v) { return v.allFinite(); }

}  // namespace

std::string_view to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kStatic: return "static";
    case TrajectoryKind::kSinusoidalYaw: return "sinusoidal_yaw";
    case TrajectoryKind::kSinusoidalPitch: return "sinusoidal_pitch";
    case TrajectoryKind::kLinearTranslation: return "linear_translation";
    case TrajectoryKind::kComposite: return "composite";
  }
  return "unknown";
}

JointVector ScenarioConfig::default_home() {
  JointVector q;
  q << 0.3499428747425225, -3.2383029903669289, 1.9106637208279038, 1.3276392695397616,
      -1.2208534520524825, 0.0;
  return q;
}

ProjectorModel ScenarioConfig::projector_model() const {
  return {projector, Pose::from_translation(projector_offset)};
}

ToolOffset ScenarioConfig::tool() const {
  return {Pose::from_translation(projector_offset), Pose::from_translation(camera_offset)};
}

HeadTrajectory ScenarioConfig::trajectory() const {
  HeadTrajectory t;
  t.kind = trajectory_kind;
  t.amplitude = trajectory_amplitude;
  t.frequency = trajectory_frequency;
  const Vec3 z = head_normal.normalized();
  const Vec3 y = (head_up - head_up.dot(z) * z).normalized();
  t.base_pose.rotation.col(0) = y.cross(z);
  t.base_pose.rotation.col(1) = y;
  t.base_pose.rotation.col(2) = z;
  t.base_pose.translation = head_position;
  t.direction = trajectory_direction;
  t.pivot = trajectory_pivot;
  t.translation_amplitude = trajectory_translation_amplitude;
  return t;
}

std::filesystem::path ScenarioConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

void ScenarioConfig::validate() const {
  camera.validate("camera");
  projector.validate("projector");
  dh.validate("robot.dh");
  limits.validate("robot.limits");
  for (int i = 0; i < kNumJoints; ++i) {
    require(home[i] >= limits.min[i] && home[i] <= limits.max[i], "robot.home",
            "within robot.limits");
  }
  require(finite3(projector_offset), "tool.projector_offset", "finite");
  require(finite3(camera_offset), "tool.camera_offset", "finite");

  require(face_model == "canonical" || std::filesystem::is_regular_file(resolve(face_model)),
          "face.model", "'canonical' or an existing landmark file");
  require(std::isfinite(face_real_width) && face_real_width > 0.0, "face.real_width", "> 0");
  require(width_pair.first != width_pair.second, "face.width_pair", "two distinct indices");

  require(std::isfinite(trajectory_amplitude), "trajectory.amplitude", "finite");
  require(std::isfinite(trajectory_frequency) && trajectory_frequency >= 0.0,
          "trajectory.frequency", ">= 0");
  require(head_normal.norm() > 1e-9, "trajectory.base_normal", "non-zero");
  require(head_up.normalized().cross(head_normal.normalized()).norm() > 1e-6, "trajectory.base_up",
          "not parallel to trajectory.base_normal");
  if (trajectory_kind == TrajectoryKind::kLinearTranslation ||
      trajectory_kind == TrajectoryKind::kComposite) {
    require(trajectory_direction.norm() > 1e-9, "trajectory.direction", "non-zero");
  }
  require(finite3(trajectory_pivot), "trajectory.pivot", "finite");
  require(std::isfinite(trajectory_translation_amplitude), "trajectory.translation_amplitude",
          "finite");

  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise.sigma_px", ">= 0");
  gains.validate("servo");
  require(up_hint.norm() > 1e-9, "servo.up_hint", "non-zero");
  pipeline.validate("pipeline");
  predictor_noise.validate("predictor");

  require(std::isfinite(duration) && duration > 0.0, "run.duration", "> 0");
  require(to_micros(gains.control_period) > 0, "servo.control_period", ">= 1 microsecond");
  require(frame_stride >= 1, "output.frame_stride", ">= 1");

  if (mask_kind == MaskKind::kCustom) {
    require(!mask_texture.empty() && std::filesystem::is_regular_file(resolve(mask_texture)),
            "mask.texture", "an existing PPM/PGM file for custom masks");
    require(!mask_anchors.empty() && std::filesystem::is_regular_file(resolve(mask_anchors)),
            "mask.anchors", "an existing anchor file for custom masks");
  }
}

ScenarioConfig load_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    const auto it = key_index().find(key);
    if (it == key_index().end()) throw ParseError(line_no, "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ParseError(line_no, "duplicate key '" + key + "'");
    it->second->set(cfg, Reader{line_no, key}, value);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str(), path.parent_path());
}

std::vector<std::pair<std::string, std::string>> scenario_entries(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(registry().size());
  for (const auto& k : registry()) out.emplace_back(k.name, k.get(cfg));
  return out;
}

std::string dump_scenario(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : scenario_entries(cfg)) out += key + " = " + value + "\n";
  return out;
}

FaceModel load_face_model(const ScenarioConfig& cfg) {
  const LandmarkPoints3 pts = cfg.face_model == "canonical"
                                  ? canonical_face_points()
                                  : read_landmark_fixture(cfg.resolve(cfg.face_model));
  return FaceModel::from_points({pts.data(), pts.size()}, cfg.face_real_width, cfg.width_pair);
}

MaskTemplate load_mask(const ScenarioConfig& cfg, const FaceModel& face) {
  if (cfg.mask_kind == MaskKind::kCustom) {
    return load_mask_template(cfg.resolve(cfg.mask_texture), cfg.resolve(cfg.mask_anchors));
  }
  return make_mask_template(cfg.mask_kind, face);
}

}  // namespace maskbot
