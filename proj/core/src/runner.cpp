#include "maskbot/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "maskbot/error.hpp"
#include "maskbot/rng.hpp"

namespace maskbot {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kCapture: return "capture";
    case EventKind::kDeliver: return "deliver";
    case EventKind::kEstimate: return "estimate";
    case EventKind::kFault: return "fault";
    case EventKind::kCommand: return "command";
    case EventKind::kFreeze: return "freeze";
    case EventKind::kEmit: return "emit";
  }
  return "unknown";
}

std::string printf_string(const char* format, double a, double b = 0.0) {
  char buf[96];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace

std::string format_event(const TickEvent& event) {
  std::string out = std::to_string(event.time_us) + " " + std::string(to_string(event.kind)) +
                    " frame=" + std::to_string(event.frame);
  if (!event.detail.empty()) out += " " + event.detail;
  return out;
}

Simulation::Simulation(ScenarioConfig cfg)
    : cfg_(std::move(cfg)),
      face_(load_face_model(cfg_)),
      trajectory_(cfg_.trajectory()),
      tool_(cfg_.tool()),
      clock_(to_micros(cfg_.gains.control_period)),
      total_ticks_(to_micros(cfg_.duration) / to_micros(cfg_.gains.control_period)),
      q_(cfg_.home) {
  cfg_.validate();
}

std::optional<Simulation::Estimate> Simulation::consume(const PendingMeasurement& m,
                                                        std::vector<TickEvent>& events) {
  const std::int64_t frame = m.captured_at_us / clock_.period_us();
  events.push_back({clock_.now_us(), EventKind::kDeliver, frame,
                    m.detection.valid ? "valid" : "invalid"});
  if (!m.detection.valid) return std::nullopt;

  const double retry_rms = std::max(1.0, 3.0 * cfg_.noise_sigma);
  std::optional<HeadPoseEstimate> best;
  const auto attempt = [&](const Pose& seed) {
    try {
      HeadPoseEstimate e = estimate_head_pose(m.detection, face_, cfg_.camera, seed);
      if (!best || e.rms_residual_px < best->rms_residual_px) best = e;
    } catch (const Error&) {
    }
  };
  if (last_estimate_) attempt(invert(m.camera_pose) * last_estimate_->head);
  if (!best || best->rms_residual_px > retry_rms) {
    attempt(initial_head_pose_guess(m.detection, face_, cfg_.camera));
  }
  if (!best || !(best->pose.translation.z() > 0.0)) {
    events.push_back({clock_.now_us(), EventKind::kFault, frame, "pose_not_converged"});
    return std::nullopt;
  }
  events.push_back({clock_.now_us(), EventKind::kEstimate, frame,
                    printf_string("rms_px=%.3g iterations=%.0f", best->rms_residual_px,
                                  static_cast<double>(best->iterations))});

  Estimate est{m.camera_pose * best->pose, static_cast<double>(m.captured_at_us) * 1e-6};
  if (cfg_.predictor_enabled) {
    const HeadMeasurement meas{est.head.translation, est.head.rotation};
    if (!predictor_.initialized) {
      predictor_ = init_predictor(meas, est.capture_time, cfg_.predictor_noise);
    } else if (est.capture_time > predictor_.time) {
      predictor_ = predictor_step(predictor_, meas, est.capture_time - predictor_.time, 0.0,
                                  cfg_.predictor_noise)
                       .state;
    }
  }
  return est;
}

void Simulation::check_limits(const JointVector& before, const JointVector& after) const {
  const double dt = cfg_.gains.control_period;
  for (int i = 0; i < kNumJoints; ++i) {
    const double bound = cfg_.limits.max_speed[i] * dt;
    if (after[i] < cfg_.limits.min[i] || after[i] > cfg_.limits.max[i] ||
        std::abs(after[i] - before[i]) > bound * (1.0 + 1e-12) + 1e-15) {
      throw std::logic_error("joint " + std::to_string(i + 1) + " violated its limits at tick " +
                             std::to_string(tick_));
    }
  }
}

TickResult Simulation::pipeline_tick(bool render) {
  TickResult out;
  auto& events = out.events;
  MetricsRow& row = out.row;
  const std::int64_t now = clock_.now_us();
  const double t = static_cast<double>(now) * 1e-6;
  const std::int64_t sensing =
      to_micros(cfg_.pipeline.capture_latency) + to_micros(cfg_.pipeline.detect_latency);
  const std::int64_t actuation =
      to_micros(cfg_.pipeline.plan_latency) + to_micros(cfg_.pipeline.project_latency);

  // Capture.
  const Pose camera_pose = forward_kinematics(cfg_.dh, q_, tool_.camera_mount);
  const Pose head_now = head_pose_at(trajectory_, t);
  const DetectedLandmarks det =
      observe_landmarks(face_, head_now, cfg_.camera, camera_pose, cfg_.noise_sigma,
                        mix_seed(cfg_.seed, static_cast<std::uint64_t>(tick_)), t);
  clock_.schedule(det, camera_pose, now, now + sensing);
  events.push_back({now, EventKind::kCapture, tick_, det.valid ? "valid" : "invalid"});

  row.t = t;
  row.q = q_;
  row.detection_valid = det.valid;
  row.predictor_on = cfg_.predictor_enabled;
  row.est_distance_m = kNaN;
  if (det.valid) {
    const CenterWidth cw = face_center_and_width(det, face_.width_pair());
    if (cw.width > 0.0) {
      row.est_distance_m = distance_from_face_width(cfg_.camera.fx, face_.real_width(), cw.width);
    }
  }
  const auto& pts = face_.points();
  const Vec3 width_mid = 0.5 * (pts[static_cast<std::size_t>(face_.width_pair().first)] +
                                pts[static_cast<std::size_t>(face_.width_pair().second)]);
  row.true_distance_m = (invert(camera_pose) * head_now).apply(width_mid).z();

  // Deliveries due by now.
  bool fresh = false;
  for (const auto& m : clock_.take_due()) {
    if (auto e = consume(m, events)) {
      last_estimate_ = e;
      fresh = true;
    }
  }
  ticks_since_valid_ = fresh ? 0 : ticks_since_valid_ + 1;

  // Head estimate for the moment this tick's frame is emitted.
  const std::int64_t emit_us = now + actuation;
  const double t_emit = static_cast<double>(emit_us) * 1e-6;
  std::optional<Pose> head_estimate;
  if (last_estimate_ && ticks_since_valid_ <= kLossOfTrackGraceTicks) {
    head_estimate = cfg_.predictor_enabled ? predict_pose(predictor_, t_emit - predictor_.time)
                                           : last_estimate_->head;
    if (frozen_) events.push_back({now, EventKind::kFreeze, -1, "released"});
    frozen_ = false;
  } else if (!frozen_) {
    frozen_ = true;
    events.push_back({now, EventKind::kFreeze, -1, last_estimate_ ? "track_lost" : "no_track"});
  }

  if (fresh && head_estimate) {
    try {
      target_ = compute_target_pose(fit_face_plane(*head_estimate, face_), cfg_.gains, cfg_.up_hint);
    } catch (const Error& e) {
      events.push_back({now, EventKind::kFault, -1, std::string(to_string(e.code()))});
    }
  }

  JointVector q_next = q_;
  if (!frozen_ && target_) {
    const ControlStepResult step =
        control_step(q_, *target_, cfg_.dh, tool_.projector_mount, cfg_.limits, cfg_.gains);
    q_next = step.q;
    events.push_back({now, EventKind::kCommand, -1, std::string(to_string(step.status))});
  }
  check_limits(q_, q_next);

  const Pose emit_pose = forward_kinematics(
      cfg_.dh, emit_us >= now + clock_.period_us() ? q_next : q_, tool_.projector_mount);

  if (render && head_estimate) {
    if (!mapper_) mapper_.emplace(face_, load_mask(cfg_, face_), cfg_.sampling);
    try {
      out.frame = mapper_->render(*head_estimate, cfg_.projector, emit_pose);
    } catch (const Error& e) {
      events.push_back({now, EventKind::kFault, -1, std::string(to_string(e.code()))});
    }
  }

  // Metrics against the truth at emission.
  const Pose truth = head_pose_at(trajectory_, t_emit);
  const FacePlane true_plane = fit_face_plane(truth, face_);
  row.alignment_error_deg = rad2deg(angle_between(emit_pose.axis(), -true_plane.normal));
  row.standoff_error_mm =
      1000.0 * ((emit_pose.translation - true_plane.center).dot(true_plane.normal) -
                cfg_.gains.standoff);
  row.onface_mean_mm = row.onface_max_mm = kNaN;
  if (head_estimate) {
    static const std::vector<int> anchors = all_anchor_indices();
    const OnFaceError err = onface_error({*head_estimate, emit_pose, emit_pose, cfg_.projector},
                                         truth, face_, anchors);
    row.onface_mean_mm = err.mean_mm;
    row.onface_max_mm = err.max_mm;
  }
  events.push_back({emit_us, EventKind::kEmit, tick_, head_estimate ? "lit" : "dark"});

  q_ = q_next;
  clock_.advance();
  ++tick_;
  return out;
}

RunResult run_scenario(const ScenarioConfig& cfg, const FrameSink& sink) {
  Simulation sim(cfg);
  RunResult result;
  result.log.rows.reserve(static_cast<std::size_t>(sim.total_ticks()));
  while (!sim.done()) {
    const std::int64_t tick = sim.tick_index();
    const bool dump = cfg.dump_frames && tick % cfg.frame_stride == 0;
    TickResult r = sim.pipeline_tick(dump || cfg.render_every_tick);
    result.log.rows.push_back(r.row);
    for (const auto& e : r.events) result.events.push_back(format_event(e));
    if (dump && r.frame && sink) sink(tick, *r.frame);
  }
  return result;
}

std::string frame_file_name(std::int64_t tick, const Frame& frame) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "frame_%06lld.%s", static_cast<long long>(tick),
                frame.channels == 1 ? "pgm" : "ppm");
  return buf;
}

FrameSink frame_writer(const std::filesystem::path& out_dir) {
  return [out_dir](std::int64_t tick, const Frame& frame) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    write_pnm(out_dir / frame_file_name(tick, frame), frame);
  };
}

void write_outputs(const RunResult& result, const ScenarioConfig& cfg,
                   const std::filesystem::path& out_dir,
                   const std::vector<std::pair<std::int64_t, Frame>>& frames) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string());
  }
  write_metrics_csv(out_dir / "metrics.csv", result.log);

  {
    std::ofstream events(out_dir / "events.log", std::ios::binary);
    if (!events) throw Error(ErrorCode::kIoError, "cannot write events.log");
    for (const auto& e : result.events) events << e << '\n';
    if (!events) throw Error(ErrorCode::kIoError, "write failed for events.log");
  }

  const MetricsSummary s = summarize(result.log);
  nlohmann::ordered_json summary;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : scenario_entries(cfg)) config[key] = value;
  summary["config"] = config;
  summary["ticks"] = s.ticks;
  summary["valid_detections"] = s.valid_detections;
  summary["onface_samples"] = s.onface_samples;
  summary["onface_mean_mm"] = s.onface_mean_mm;
  summary["onface_p95_mm"] = s.onface_p95_mm;
  summary["onface_max_mm"] = s.onface_max_mm;
  summary["alignment_mean_deg"] = s.alignment_mean_deg;
  summary["final_alignment_deg"] = s.final_alignment_deg;
  summary["final_standoff_error_mm"] = s.final_standoff_error_mm;
  {
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write summary.json");
    out << summary.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "write failed for summary.json");
  }

  for (const auto& [tick, frame] : frames) write_pnm(out_dir / frame_file_name(tick, frame), frame);
}

}  // namespace maskbot
