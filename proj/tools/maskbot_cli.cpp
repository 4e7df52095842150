// maskbot: run scenarios, validate configs and poke at the kinematics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "maskbot/error.hpp"
#include "maskbot/face_world.hpp"
#include "maskbot/kinematics.hpp"
#include "maskbot/metrics.hpp"
#include "maskbot/projection_mapping.hpp"
#include "maskbot/runner.hpp"
#include "maskbot/scenario.hpp"

namespace {

using namespace maskbot;

constexpr int kExitConfig = 2;

template <int N>
Eigen::Matrix<double, N, 1> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(what, "a comma-separated list of numbers");
    }
  }
  if (static_cast<int>(values.size()) != N) {
    throw ValidationError(what, std::to_string(N) + " comma-separated numbers");
  }
  return Eigen::Map<Eigen::Matrix<double, N, 1>>(values.data());
}

ScenarioConfig config_or_default(const std::string& path) {
  return path.empty() ? ScenarioConfig{} : load_scenario_file(path);
}

void print_pose(const Pose& p) {
  const Vec3 rv = log_so3(p.rotation);
  std::printf("position  %.9f %.9f %.9f\n", p.translation.x(), p.translation.y(),
              p.translation.z());
  std::printf("axis      %.9f %.9f %.9f\n", p.axis().x(), p.axis().y(), p.axis().z());
  std::printf("rotvec    %.9f %.9f %.9f\n", rv.x(), rv.y(), rv.z());
  for (int r = 0; r < 3; ++r) {
    std::printf("  [% .9f % .9f % .9f % .9f]\n", p.rotation(r, 0), p.rotation(r, 1),
                p.rotation(r, 2), p.translation[r]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MaskBot robotic projection-mapping simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  bool no_predictor = false, dump_frames = false;
  auto* run = app.add_subcommand("run", "Run an episode and write metrics.csv, events.log, summary.json");
  run->add_option("--config", config_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--duration", duration, "Override run.duration (s)");
  run->add_flag("--no-predictor", no_predictor, "Disable the head-motion predictor");
  run->add_flag("--dump-frames", dump_frames, "Write projector frames");

  bool print_config = false;
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario file");
  validate->add_option("--config", config_path, "Scenario file")->required();
  validate->add_flag("--print", print_config, "Print the fully resolved configuration");

  std::string joints, seed_joints, position, look_at, up = "0,0,1";
  bool camera_tool = false;
  auto* fk = app.add_subcommand("fk", "Forward kinematics of the projector (or camera) tool");
  fk->add_option("--joints", joints, "q1,...,q6 in radians")->required();
  fk->add_option("--config", config_path, "Scenario file for robot and tool parameters");
  fk->add_flag("--camera", camera_tool, "Report the camera instead of the projector");

  auto* ik = app.add_subcommand("ik", "Joint vector placing the projector at a pose");
  ik->add_option("--position", position, "x,y,z of the projector (m)")->required();
  ik->add_option("--look-at", look_at, "x,y,z point the projector aims at (m)")->required();
  ik->add_option("--up", up, "x,y,z up hint");
  ik->add_option("--seed-joints", seed_joints, "q1,...,q6 initial guess (default: robot.home)");
  ik->add_option("--config", config_path, "Scenario file for robot and tool parameters");

  std::string mask_kind = "beard";
  auto* mask = app.add_subcommand("mask", "Write a procedural mask texture and its anchors");
  mask->add_option("--kind", mask_kind, "beard, glasses, logo or makeup");
  mask->add_option("--out", out_dir, "Output directory")->required();

  std::string fixture_path;
  auto* fixture = app.add_subcommand("face-fixture", "Write the canonical 68-point face");
  fixture->add_option("--out", fixture_path, "Output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig cfg = load_scenario_file(config_path);
      if (seed) cfg.seed = *seed;
      if (duration) cfg.duration = *duration;
      if (no_predictor) cfg.predictor_enabled = false;
      if (dump_frames) cfg.dump_frames = true;
      cfg.validate();
      const RunResult result = run_scenario(cfg, frame_writer(out_dir));
      write_outputs(result, cfg, out_dir);
      const MetricsSummary s = summarize(result.log);
      std::printf("ticks %zu  valid detections %zu  on-face mean %.3f mm  p95 %.3f mm\n", s.ticks,
                  s.valid_detections, s.onface_mean_mm, s.onface_p95_mm);
      return 0;
    }
    if (*validate) {
      const ScenarioConfig cfg = load_scenario_file(config_path);
      if (print_config) std::cout << dump_scenario(cfg);
      else std::printf("%s: ok\n", config_path.c_str());
      return 0;
    }
    if (*fk) {
      const ScenarioConfig cfg = config_or_default(config_path);
      const JointVector q = parse_list<kNumJoints>(joints, "--joints");
      const ToolOffset tool = cfg.tool();
      print_pose(forward_kinematics(cfg.dh, q, camera_tool ? tool.camera_mount : tool.projector_mount));
      return 0;
    }
    if (*ik) {
      const ScenarioConfig cfg = config_or_default(config_path);
      const Pose target = look_at_pose(parse_list<3>(position, "--position"),
                                       parse_list<3>(look_at, "--look-at"), parse_list<3>(up, "--up"));
      const JointVector seed_q =
          seed_joints.empty() ? cfg.home : parse_list<kNumJoints>(seed_joints, "--seed-joints");
      const IkResult r = solve_ik(cfg.dh, target, seed_q, cfg.tool().projector_mount);
      std::printf("q %.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n", r.q[0], r.q[1], r.q[2], r.q[3], r.q[4], r.q[5]);
      std::printf("residual %.3e m %.3e rad  iterations %d  %s\n", r.residual.position,
                  r.residual.rotation, r.iterations, r.converged ? "converged" : "NOT converged");
      return r.converged ? 0 : 1;
    }
    if (*mask) {
      const MaskTemplate m = make_mask_template(mask_kind_from_string(mask_kind, "--kind"),
                                                FaceModel::canonical());
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path dir(out_dir);
      write_pnm(dir / (mask_kind + ".ppm"), m.texture);
      write_anchor_file(dir / (mask_kind + ".anchors"), m.anchors);
      std::printf("wrote %s and %s\n", (dir / (mask_kind + ".ppm")).c_str(),
                  (dir / (mask_kind + ".anchors")).c_str());
      return 0;
    }
    if (*fixture) {
      write_landmark_fixture(fixture_path, canonical_face_points());
      return 0;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
