#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "maskbot/face_world.hpp"
#include "maskbot/geometry.hpp"
#include "maskbot/kinematics.hpp"

namespace maskbot {

struct ServoGains {
  double standoff = 0.5;          ///< m
  double position_gain = 6.0;     ///< 1/s
  double orientation_gain = 6.0;  ///< 1/s
  double control_period = 0.033;  ///< s

  void validate(std::string_view field_prefix = "servo") const;
};

/// Per-stage delays from exposure to photons.
struct PipelineConfig {
  double capture_latency = 0.033;
  double detect_latency = 0.020;
  double plan_latency = 0.005;
  double project_latency = 0.016;

  double sensing_latency() const { return capture_latency + detect_latency; }
  double actuation_latency() const { return plan_latency + project_latency; }
  double total() const { return sensing_latency() + actuation_latency(); }

  void validate(std::string_view field_prefix = "pipeline") const;
};

/// Noise model for the constant-velocity head predictor.
struct PredictorNoise {
  double linear_accel = 0.5;       ///< m/s^2 / sqrt(Hz), white acceleration density
  double angular_accel = 4.0;      ///< rad/s^2 / sqrt(Hz)
  double position_measurement = 1e-3;  ///< m, 1 sigma
  double rotation_measurement = 5e-3;  ///< rad, 1 sigma
  double initial_velocity = 0.5;   ///< m/s, prior sigma
  double initial_angular_velocity = 2.0;  ///< rad/s, prior sigma

  void validate(std::string_view field_prefix = "predictor") const;
};

using Covariance12 = Eigen::Matrix<double, 12, 12>;

/// Error-state constant-velocity filter. State order: position, linear
/// velocity, orientation error (rotation vector, world frame), angular
/// velocity. The orientation error is folded into `orientation` after every
/// step, so the filter mean is always (position, velocity, orientation,
/// angular_velocity).
struct PredictorState {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();
  Vec3 angular_velocity = Vec3::Zero();
  Covariance12 covariance = Covariance12::Identity();
  bool initialized = false;
};

struct HeadMeasurement {
  Vec3 position;
  Mat3 orientation;
};

struct PredictorOutput {
  PredictorState state;
  Pose predicted;  ///< head pose at state.time + horizon
};

PredictorState init_predictor(const HeadMeasurement& m, double time, const PredictorNoise& noise);

/// Predict over dt (> 0) with the constant-velocity model, then update if a
/// measurement is present; extrapolates the posterior mean by `horizon`.
PredictorOutput predictor_step(const PredictorState& state,
                               const std::optional<HeadMeasurement>& measurement, double dt,
                               double horizon, const PredictorNoise& noise);

/// Extrapolates the mean without touching the covariance.
Pose predict_pose(const PredictorState& state, double horizon);

/// Projector pose at standoff along the face normal, looking back at the face
/// center, roll fixed by `up_hint`. Propagates Error(kDegenerateAim).
Pose compute_target_pose(const FacePlane& plane, const ServoGains& gains, const Vec3& up_hint);

enum class ControlStatus { kOk, kNotConverged, kUnreachable };

std::string_view to_string(ControlStatus status);

struct ControlStepResult {
  JointVector q;
  ControlStatus status = ControlStatus::kOk;
};

/// One servo step: move the tool a gain-weighted fraction toward `target`,
/// solve IK seeded at q, then rate-limit. On Unreachable q is returned
/// unchanged; on NotConverged the best IK iterate is still followed.
ControlStepResult control_step(const JointVector& q, const Pose& target, const DHParams& dh,
                               const Pose& tool, const JointLimits& limits,
                               const ServoGains& gains);

/// Simulation time in integer microseconds so latency arithmetic is exact.
std::int64_t to_micros(double seconds);

struct PendingMeasurement {
  DetectedLandmarks detection;
  Pose camera_pose;  ///< camera -> world at capture
  std::int64_t captured_at_us = 0;
  std::int64_t deliver_at_us = 0;
  std::uint64_t sequence = 0;
};

/// Tick clock plus the delivery queue between the detector and the
/// controller. Deliveries come out in (deliver_at, capture order) order.
class SimClock {
 public:
  explicit SimClock(std::int64_t period_us) : period_us_(period_us) {}

  std::int64_t now_us() const { return now_us_; }
  double now() const { return static_cast<double>(now_us_) * 1e-6; }
  std::int64_t period_us() const { return period_us_; }
  std::size_t pending() const { return queue_.size(); }

  void schedule(const DetectedLandmarks& detection, const Pose& camera_pose,
                std::int64_t captured_at_us, std::int64_t deliver_at_us);

  /// Removes and returns every measurement with deliver_at <= now.
  std::vector<PendingMeasurement> take_due();

  void advance() { now_us_ += period_us_; }

 private:
  std::int64_t now_us_ = 0;
  std::int64_t period_us_;
  std::uint64_t next_sequence_ = 0;
  std::deque<PendingMeasurement> queue_;
};

}  // namespace maskbot
