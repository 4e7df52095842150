#include "maskbot/servo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskbot/error.hpp"

namespace maskbot {
namespace {

void require_positive(double v, const std::string& field) {
  if (!(std::isfinite(v) && v > 0.0)) throw ValidationError(field, "> 0");
}

void require_nonnegative(double v, const std::string& field) {
  if (!(std::isfinite(v) && v >= 0.0)) throw ValidationError(field, ">= 0");
}

constexpr int kPos = 0, kVel = 3, kRot = 6, kAng = 9;

}  // namespace

void ServoGains::validate(std::string_view field_prefix) const {
  const std::string p(field_prefix);
  require_positive(standoff, p + ".standoff");
  require_positive(position_gain, p + ".position_gain");
  require_positive(orientation_gain, p + ".orientation_gain");
  require_positive(control_period, p + ".control_period");
}

void PipelineConfig::validate(std::string_view field_prefix) const {
  const std::string p(field_prefix);
  require_nonnegative(capture_latency, p + ".capture_latency");
  require_nonnegative(detect_latency, p + ".detect_latency");
  require_nonnegative(plan_latency, p + ".plan_latency");
  require_nonnegative(project_latency, p + ".project_latency");
}

void PredictorNoise::validate(std::string_view field_prefix) const {
  const std::string p(field_prefix);
  require_positive(linear_accel, p + ".linear_accel");
  require_positive(angular_accel, p + ".angular_accel");
  require_positive(position_measurement, p + ".position_measurement");
  require_positive(rotation_measurement, p + ".rotation_measurement");
  require_positive(initial_velocity, p + ".initial_velocity");
  require_positive(initial_angular_velocity, p + ".initial_angular_velocity");
}

PredictorState init_predictor(const HeadMeasurement& m, double time, const PredictorNoise& noise) {
  PredictorState s;
  s.time = time;
  s.position = m.position;
  s.orientation = m.orientation;
  s.covariance.setZero();
  const auto sq = [](double x) { return x * x; };
  s.covariance.block<3, 3>(kPos, kPos).diagonal().setConstant(sq(noise.position_measurement));
  s.covariance.block<3, 3>(kVel, kVel).diagonal().setConstant(sq(noise.initial_velocity));
  s.covariance.block<3, 3>(kRot, kRot).diagonal().setConstant(sq(noise.rotation_measurement));
  s.covariance.block<3, 3>(kAng, kAng).diagonal().setConstant(
      sq(noise.initial_angular_velocity));
  s.initialized = true;
  return s;
}

Pose predict_pose(const PredictorState& state, double horizon) {
  Pose p;
  p.translation = state.position + horizon * state.velocity;
  p.rotation = exp_so3(horizon * state.angular_velocity) * state.orientation;
  return p;
}

PredictorOutput predictor_step(const PredictorState& state,
                               const std::optional<HeadMeasurement>& measurement, double dt,
                               double horizon, const PredictorNoise& noise) {
  PredictorState s = state;

  // Predict.
  s.time += dt;
  s.position += dt * s.velocity;
  s.orientation = exp_so3(dt * s.angular_velocity) * s.orientation;
  Covariance12 f = Covariance12::Identity();
  f.block<3, 3>(kPos, kVel).diagonal().setConstant(dt);
  f.block<3, 3>(kRot, kAng).diagonal().setConstant(dt);
  Covariance12 q = Covariance12::Zero();
  const double dt2 = dt * dt, dt3 = dt2 * dt;
  for (const auto& [offset, density] :
       {std::pair{kPos, noise.linear_accel}, std::pair{kRot, noise.angular_accel}}) {
    const double qc = density * density;
    for (int a = 0; a < 3; ++a) {
      q(offset + a, offset + a) = qc * dt3 / 3.0;
      q(offset + a, offset + 3 + a) = qc * dt2 / 2.0;
      q(offset + 3 + a, offset + a) = qc * dt2 / 2.0;
      q(offset + 3 + a, offset + 3 + a) = qc * dt;
    }
  }
  s.covariance = f * s.covariance * f.transpose() + q;

  // Update.
  if (measurement) {
    Eigen::Matrix<double, 6, 12> h = Eigen::Matrix<double, 6, 12>::Zero();
    h.block<3, 3>(0, kPos).setIdentity();
    h.block<3, 3>(3, kRot).setIdentity();
    Eigen::Matrix<double, 6, 6> r = Eigen::Matrix<double, 6, 6>::Zero();
    r.diagonal().head<3>().setConstant(noise.position_measurement * noise.position_measurement);
    r.diagonal().tail<3>().setConstant(noise.rotation_measurement * noise.rotation_measurement);

    Eigen::Matrix<double, 6, 1> innovation;
    innovation.head<3>() = measurement->position - s.position;
    innovation.tail<3>() = log_so3(measurement->orientation * s.orientation.transpose());

    const Eigen::Matrix<double, 6, 6> innov_cov = h * s.covariance * h.transpose() + r;
    const Eigen::Matrix<double, 12, 6> gain =
        s.covariance * h.transpose() * innov_cov.inverse();
    const Eigen::Matrix<double, 12, 1> dx = gain * innovation;

    s.position += dx.segment<3>(kPos);
    s.velocity += dx.segment<3>(kVel);
    s.orientation = exp_so3(dx.segment<3>(kRot)) * s.orientation;
    s.angular_velocity += dx.segment<3>(kAng);

    // Joseph form keeps the covariance symmetric positive semidefinite.
    const Covariance12 ikh = Covariance12::Identity() - gain * h;
    s.covariance = ikh * s.covariance * ikh.transpose() + gain * r * gain.transpose();
  }
  s.covariance = (0.5 * (s.covariance + s.covariance.transpose())).eval();
  if (orthonormality_drift(s.orientation) > 1e-9) s.orientation = orthonormalize(s.orientation);

  return {s, predict_pose(s, horizon)};
}

Pose compute_target_pose(const FacePlane& plane, const ServoGains& gains, const Vec3& up_hint) {
  const Vec3 position = plane.center + gains.standoff * plane.normal;
  return look_at_pose(position, plane.center, up_hint);
}

std::string_view to_string(ControlStatus status) {
  switch (status) {
    case ControlStatus::kOk: return "ok";
    case ControlStatus::kNotConverged: return "not_converged";
    case ControlStatus::kUnreachable: return "unreachable";
  }
  return "unknown";
}

ControlStepResult control_step(const JointVector& q, const Pose& target, const DHParams& dh,
                               const Pose& tool, const JointLimits& limits,
                               const ServoGains& gains) {
  const Pose current = forward_kinematics(dh, q, tool);
  const Pose waypoint = interpolate(current, target, gains.position_gain * gains.control_period,
                                    gains.orientation_gain * gains.control_period);
  IkOptions options;
  options.max_iterations = 50;
  IkResult ik;
  try {
    ik = solve_ik(dh, waypoint, q, tool, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUnreachable) throw;
    return {q, ControlStatus::kUnreachable};
  }
  return {clamp_step(q, ik.q, gains.control_period, limits),
          ik.converged ? ControlStatus::kOk : ControlStatus::kNotConverged};
}

std::int64_t to_micros(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds * 1e6));
}

void SimClock::schedule(const DetectedLandmarks& detection, const Pose& camera_pose,
                        std::int64_t captured_at_us, std::int64_t deliver_at_us) {
  PendingMeasurement m{detection, camera_pose, captured_at_us, deliver_at_us, next_sequence_++};
  const auto pos = std::upper_bound(
      queue_.begin(), queue_.end(), m, [](const PendingMeasurement& a, const PendingMeasurement& b) {
        return a.deliver_at_us < b.deliver_at_us ||
               (a.deliver_at_us == b.deliver_at_us && a.sequence < b.sequence);
      });
  queue_.insert(pos, std::move(m));
}

std::vector<PendingMeasurement> SimClock::take_due() {
  std::vector<PendingMeasurement> due;
  while (!queue_.empty() && queue_.front().deliver_at_us <= now_us_) {
    due.push_back(std::move(queue_.front()));
    queue_.pop_front();
  }
  return due;
}

}  // namespace maskbot
