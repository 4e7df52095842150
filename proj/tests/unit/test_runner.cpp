#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "maskbot/error.hpp"
#include "maskbot/runner.hpp"
#include "test_support.hpp"

namespace maskbot {
namespace {

std::string csv_of(const MetricsLog& log) {
  std::ostringstream out;
  write_metrics_csv(out, log);
  return out.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig short_run(double duration = 1.0) {
  ScenarioConfig cfg;
  cfg.duration = duration;
  return cfg;
}

bool contains(const std::vector<std::string>& events, const std::string& needle) {
  return std::any_of(events.begin(), events.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

TEST(Runner, RowCountAndTimeline) {
  const ScenarioConfig cfg = short_run(2.0);
  const RunResult r = run_scenario(cfg);
  const double expected = cfg.duration / cfg.gains.control_period;
  EXPECT_LE(std::abs(static_cast<double>(r.log.rows.size()) - expected), 1.0);
  for (std::size_t i = 1; i < r.log.rows.size(); ++i) EXPECT_GT(r.log.rows[i].t, r.log.rows[i - 1].t);
  EXPECT_EQ(r.log.rows.front().t, 0.0);
  EXPECT_EQ(r.log.rows.front().q, cfg.home);
}

TEST(Runner, SameSeedIsByteIdentical) {
  const ScenarioConfig cfg = short_run(1.5);
  const RunResult a = run_scenario(cfg), b = run_scenario(cfg);
  EXPECT_EQ(csv_of(a.log), csv_of(b.log));
  EXPECT_EQ(a.events, b.events);
  ScenarioConfig other = cfg;
  other.seed = 2;
  EXPECT_NE(csv_of(run_scenario(other).log), csv_of(a.log));
}

TEST(Runner, StaticNoiselessZeroLatencyConverges) {
  ScenarioConfig cfg = short_run(5.0);
  cfg.trajectory_kind = TrajectoryKind::kStatic;
  cfg.noise_sigma = 0.0;
  cfg.pipeline = PipelineConfig{0, 0, 0, 0};
  cfg.head_position = Vec3(0.85, 0.05, 0.3);
  cfg.head_normal = Vec3(-1, 0.2, -0.1);
  const RunResult r = run_scenario(cfg);
  const MetricsRow& last = r.log.rows.back();
  EXPECT_LT(last.alignment_error_deg, 1.0);
  EXPECT_LT(std::abs(last.standoff_error_mm), 5.0);
  EXPECT_LT(last.onface_mean_mm, 1.0);
  // With zero latency the very first frame is already lit.
  EXPECT_TRUE(std::isfinite(r.log.rows.front().onface_mean_mm));
}

TEST(Runner, SensingLatencyDelaysFirstEstimateByTwoTicks) {
  const ScenarioConfig cfg = short_run(0.5);  // 53 ms sensing, 33 ms period
  const RunResult r = run_scenario(cfg);
  EXPECT_TRUE(std::isnan(r.log.rows[0].onface_mean_mm));
  EXPECT_TRUE(std::isnan(r.log.rows[1].onface_mean_mm));
  EXPECT_TRUE(std::isfinite(r.log.rows[2].onface_mean_mm));
  EXPECT_TRUE(contains(r.events, "66000 deliver frame=0 valid"));
  EXPECT_TRUE(contains(r.events, "99000 deliver frame=1 valid"));
  // Emission happens plan + project = 21 ms after the tick.
  EXPECT_TRUE(contains(r.events, "87000 emit frame=2 lit"));
}

TEST(Runner, FaceBehindCameraNeverTracks) {
  ScenarioConfig cfg = short_run(1.0);
  cfg.head_position = Vec3(0.0, 0.0, 0.25);  // behind the camera at x = 0.3 looking +X
  cfg.head_normal = Vec3(-1, 0, 0);
  const RunResult r = run_scenario(cfg);
  for (const auto& row : r.log.rows) {
    EXPECT_FALSE(row.detection_valid);
    EXPECT_EQ(row.q, cfg.home);
    EXPECT_TRUE(std::isnan(row.onface_mean_mm));
  }
  EXPECT_TRUE(contains(r.events, "freeze frame=-1 no_track"));
}

TEST(Runner, LosingTheFaceFreezesAfterGracePeriod) {
  // The head slides sideways faster than the slowed arm can follow, so it
  // leaves the camera's field of view.
  ScenarioConfig cfg = short_run(3.0);
  cfg.trajectory_kind = TrajectoryKind::kLinearTranslation;
  cfg.trajectory_amplitude = 0.5;  // m/s
  cfg.trajectory_frequency = 0.0;
  cfg.trajectory_direction = Vec3::UnitY();
  cfg.limits.max_speed.setConstant(0.02);
  Simulation sim(cfg);
  std::vector<MetricsRow> rows;
  while (!sim.done()) rows.push_back(sim.pipeline_tick().row);

  int first_invalid = -1;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    if (!rows[i].detection_valid) {
      first_invalid = i;
      break;
    }
  ASSERT_GT(first_invalid, 0);
  for (int i = first_invalid; i < static_cast<int>(rows.size()); ++i) EXPECT_FALSE(rows[i].detection_valid);

  // The last capture is delivered two ticks later; the grace period counts
  // from that delivery.
  const int freeze_tick = first_invalid + 1 + kLossOfTrackGraceTicks + 1;
  ASSERT_LT(freeze_tick + 5, static_cast<int>(rows.size()));
  EXPECT_TRUE(std::isfinite(rows[freeze_tick - 1].onface_mean_mm));
  for (int i = freeze_tick; i < static_cast<int>(rows.size()); ++i) {
    EXPECT_TRUE(std::isnan(rows[i].onface_mean_mm)) << "tick " << i;
    EXPECT_EQ(rows[i].q, rows[freeze_tick + 1].q) << "tick " << i;
  }
  EXPECT_TRUE(sim.frozen());
}

TEST(Runner, JointLimitsHoldEveryTick) {
  ScenarioConfig cfg = short_run(4.0);
  cfg.trajectory_kind = TrajectoryKind::kComposite;
  cfg.trajectory_translation_amplitude = 0.05;
  const RunResult r = run_scenario(cfg);
  for (std::size_t i = 1; i < r.log.rows.size(); ++i) {
    const JointVector dq = r.log.rows[i].q - r.log.rows[i - 1].q;
    for (int j = 0; j < kNumJoints; ++j) {
      EXPECT_LE(std::abs(dq[j]), cfg.limits.max_speed[j] * cfg.gains.control_period * (1 + 1e-9));
      EXPECT_LE(r.log.rows[i].q[j], cfg.limits.max[j]);
      EXPECT_GE(r.log.rows[i].q[j], cfg.limits.min[j]);
    }
  }
}

TEST(Runner, PredictorHelpsOnConstantVelocityMotion) {
  ScenarioConfig cfg = short_run(4.0);
  cfg.trajectory_kind = TrajectoryKind::kLinearTranslation;
  cfg.trajectory_amplitude = 0.05;
  cfg.trajectory_frequency = 0.0;
  cfg.trajectory_direction = Vec3::UnitY();
  const MetricsSummary on = summarize(run_scenario(cfg).log);
  cfg.predictor_enabled = false;
  const MetricsSummary off = summarize(run_scenario(cfg).log);
  EXPECT_LT(on.onface_mean_mm, off.onface_mean_mm);
}

TEST(Runner, RenderedFramesMatchStandaloneRenderer) {
  ScenarioConfig cfg = short_run(0.2);
  cfg.dump_frames = true;
  cfg.frame_stride = 2;
  std::vector<std::int64_t> ticks;
  const RunResult r = run_scenario(cfg, [&](std::int64_t tick, const Frame& f) {
    ticks.push_back(tick);
    EXPECT_EQ(f.width, cfg.projector.width);
    EXPECT_EQ(f.height, cfg.projector.height);
  });
  // Frames exist once the first estimate arrives (tick 2) on even ticks.
  EXPECT_EQ(ticks, (std::vector<std::int64_t>{2, 4}));
  // Rendering does not change the metrics.
  cfg.dump_frames = false;
  EXPECT_EQ(csv_of(run_scenario(cfg).log), csv_of(r.log));
}

TEST(Outputs, EmptyLogWritesHeaderOnly) {
  const auto dir = testing::scratch_dir("out");
  write_outputs(RunResult{}, ScenarioConfig{}, dir);
  EXPECT_EQ(slurp(dir / "metrics.csv"), std::string(kMetricsHeader) + "\n");
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "events.log"));
}

TEST(Outputs, FilesAreDeterministicAndComplete) {
  const auto dir = testing::scratch_dir("out");
  ScenarioConfig cfg = short_run(10 * 0.033 + 1e-9);
  const RunResult r = run_scenario(cfg);
  ASSERT_EQ(r.log.rows.size(), 10u);
  Frame f(4, 2, 1, 200);
  write_outputs(r, cfg, dir / "a", {{3, f}});
  write_outputs(r, cfg, dir / "b", {{3, f}});
  const std::string csv = slurp(dir / "a" / "metrics.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
  for (const char* name : {"metrics.csv", "events.log", "summary.json", "frame_000003.pgm"}) {
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
  }
  EXPECT_EQ(read_pnm(dir / "a" / "frame_000003.pgm"), f);

  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  EXPECT_EQ(summary.at("ticks").get<int>(), 10);
  EXPECT_TRUE(summary.contains("onface_p95_mm"));
  EXPECT_EQ(summary.at("config").at("run.seed").get<std::string>(), "1");
}

TEST(Outputs, UnwritableDirectory) {
  const auto dir = testing::scratch_dir("out");
  { std::ofstream(dir / "file") << "x"; }
  try {
    write_outputs(RunResult{}, ScenarioConfig{}, dir / "file" / "sub");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST(Outputs, FrameNames) {
  EXPECT_EQ(frame_file_name(7, Frame(1, 1, 3)), "frame_000007.ppm");
  EXPECT_EQ(frame_file_name(123456, Frame(1, 1, 1)), "frame_123456.pgm");
  EXPECT_EQ(format_event({1500, EventKind::kEmit, 4, "lit"}), "1500 emit frame=4 lit");
}

TEST(GoldenScenario, ReproducesCommittedMetrics) {
  const std::filesystem::path golden(MASKBOT_GOLDEN_DIR);
  const ScenarioConfig cfg = load_scenario_file(golden / "scenario.cfg");
  EXPECT_EQ(csv_of(run_scenario(cfg).log), slurp(golden / "metrics.csv"));
}

}  // namespace
}  // namespace maskbot
