#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maskbot/frame.hpp"
#include "maskbot/metrics.hpp"
#include "maskbot/projection_mapping.hpp"
#include "maskbot/scenario.hpp"
#include "maskbot/servo.hpp"

namespace maskbot {

enum class EventKind { kCapture, kDeliver, kEstimate, kFault, kCommand, kFreeze, kEmit };

struct TickEvent {
  std::int64_t time_us = 0;
  EventKind kind = EventKind::kCapture;
  std::int64_t frame = -1;  ///< capture tick the event refers to, or -1
  std::string detail;

  bool operator==(const TickEvent&) const = default;
};

/// `<time_us> <kind> frame=<n> <detail>`
std::string format_event(const TickEvent& event);

struct TickResult {
  MetricsRow row;
  std::vector<TickEvent> events;
  std::optional<Frame> frame;  ///< present when rendering was requested and possible
};

/// Ticks after the last valid measurement during which the controller keeps
/// its last target and extrapolates the head for rendering; then it freezes.
inline constexpr int kLossOfTrackGraceTicks = 10;

/// Deterministic closed-loop episode: capture, delayed delivery, pose
/// estimation, prediction, servoing, rendering and metrics.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);

  const ScenarioConfig& config() const { return cfg_; }
  const FaceModel& face() const { return face_; }
  const SimClock& clock() const { return clock_; }
  const JointVector& q() const { return q_; }
  bool frozen() const { return frozen_; }
  std::int64_t tick_index() const { return tick_; }
  /// floor(duration / control_period).
  std::int64_t total_ticks() const { return total_ticks_; }
  bool done() const { return tick_ >= total_ticks_; }

  /// Overrides the joint state, e.g. to start from a chosen posture.
  void set_joints(const JointVector& q) { q_ = q; }

  /// Advances one control period. The frame is rendered when `render` is set
  /// and a head estimate is available.
  TickResult pipeline_tick(bool render = false);

 private:
  struct Estimate {
    Pose head;  ///< head -> world
    double capture_time = 0.0;
  };

  std::optional<Estimate> consume(const PendingMeasurement& m, std::vector<TickEvent>& events);
  void check_limits(const JointVector& before, const JointVector& after) const;

  ScenarioConfig cfg_;
  FaceModel face_;
  HeadTrajectory trajectory_;
  ToolOffset tool_;
  std::optional<ProjectionMapper> mapper_;
  SimClock clock_;
  std::int64_t total_ticks_;
  std::int64_t tick_ = 0;
  JointVector q_;
  PredictorState predictor_;
  std::optional<Estimate> last_estimate_;
  std::optional<Pose> target_;
  int ticks_since_valid_ = 0;
  bool frozen_ = false;
};

struct RunResult {
  MetricsLog log;
  std::vector<std::string> events;
};

/// Receives dumped frames as they are produced, so an episode never holds
/// more than one frame in memory.
using FrameSink = std::function<void(std::int64_t tick, const Frame& frame)>;

/// Runs every tick of the episode. Frames are rendered on ticks that are a
/// multiple of output.frame_stride when output.dump_frames is set, and passed
/// to `sink`; output.render_every_tick renders without dumping.
RunResult run_scenario(const ScenarioConfig& cfg, const FrameSink& sink = {});

/// `frame_%06d.ppm`, or `.pgm` for single-channel frames.
std::string frame_file_name(std::int64_t tick, const Frame& frame);

/// Sink writing each frame into `out_dir` under frame_file_name().
FrameSink frame_writer(const std::filesystem::path& out_dir);

/// Writes metrics.csv, events.log and summary.json (config entries plus
/// aggregate statistics) into `out_dir`, creating it if needed, followed by
/// any `frames`. Throws Error(kIoError).
void write_outputs(const RunResult& result, const ScenarioConfig& cfg,
                   const std::filesystem::path& out_dir,
                   const std::vector<std::pair<std::int64_t, Frame>>& frames = {});

}  // namespace maskbot
