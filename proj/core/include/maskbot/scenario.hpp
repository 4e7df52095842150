#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maskbot/face_world.hpp"
#include "maskbot/kinematics.hpp"
#include "maskbot/optics.hpp"
#include "maskbot/projection_mapping.hpp"
#include "maskbot/servo.hpp"

namespace maskbot {

/// Everything an episode needs. Angles in radians, lengths in meters, times
/// in seconds. Relative file paths resolve against `base_dir`.
struct ScenarioConfig {
  CameraIntrinsics camera = default_camera_intrinsics();
  CameraIntrinsics projector = default_projector_intrinsics();

  DHParams dh = DHParams::ur3();
  JointLimits limits = JointLimits::ur3();
  JointVector home = default_home();
  Vec3 projector_offset = Vec3(0.04, 0.0, 0.0);  ///< flange frame
  Vec3 camera_offset = Vec3(-0.04, 0.0, 0.0);    ///< flange frame

  std::string face_model = "canonical";  ///< or a landmark fixture path
  double face_real_width = 0.15;
  IndexPair width_pair{0, 16};

  TrajectoryKind trajectory_kind = TrajectoryKind::kSinusoidalYaw;
  double trajectory_amplitude = deg2rad(30.0);
  double trajectory_frequency = 0.2;
  Vec3 head_position = Vec3(0.8, 0.0, 0.25);  ///< face centroid, world
  Vec3 head_normal = Vec3(-1.0, 0.0, 0.0);    ///< face forward axis, world
  Vec3 head_up = Vec3(0.0, 0.0, 1.0);         ///< hint for head +Y, world
  Vec3 trajectory_direction = Vec3::UnitY();
  Vec3 trajectory_pivot = Vec3(0.0, 0.0, -0.09);
  double trajectory_translation_amplitude = 0.0;

  double noise_sigma = 0.5;  ///< pixels

  ServoGains gains;
  Vec3 up_hint = Vec3(0.0, 0.0, 1.0);
  PipelineConfig pipeline;

  bool predictor_enabled = true;
  PredictorNoise predictor_noise;

  double duration = 10.0;
  std::uint64_t seed = 1;

  bool dump_frames = false;
  int frame_stride = 1;
  bool render_every_tick = false;

  MaskKind mask_kind = MaskKind::kBeard;
  std::string mask_texture;  ///< custom masks only
  std::string mask_anchors;
  Sampling sampling = Sampling::kNearest;

  std::filesystem::path base_dir;

  /// Joint vector placing the default projector at (0.30, 0, 0.25) m looking
  /// along world +X.
  static JointVector default_home();

  ProjectorModel projector_model() const;
  ToolOffset tool() const;
  HeadTrajectory trajectory() const;
  std::filesystem::path resolve(const std::string& path) const;

  /// Throws ValidationError for the first violated constraint.
  void validate() const;
};

/// Parses `section.key = value` lines. Blank lines and '#' comments are
/// ignored; vectors are comma separated. Omitted keys keep their defaults;
/// unknown or repeated keys are errors. The result is validated.
/// Throws ParseError(line, message) or ValidationError(field, constraint).
ScenarioConfig load_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

/// Every key with its current value, in canonical order; feeding the lines
/// back through load_scenario reproduces the config exactly.
std::vector<std::pair<std::string, std::string>> scenario_entries(const ScenarioConfig& cfg);
std::string dump_scenario(const ScenarioConfig& cfg);

FaceModel load_face_model(const ScenarioConfig& cfg);
MaskTemplate load_mask(const ScenarioConfig& cfg, const FaceModel& face);

std::string_view to_string(TrajectoryKind kind);

}  // namespace maskbot
