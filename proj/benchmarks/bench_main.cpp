#include <benchmark/benchmark.h>

#include "maskbot/face_world.hpp"
#include "maskbot/kinematics.hpp"
#include "maskbot/projection_mapping.hpp"
#include "maskbot/runner.hpp"

namespace {

using namespace maskbot;

JointVector sample_q() {
  JointVector q;
  q << 0.3, -1.1, 1.4, -0.2, 0.6, -0.4;
  return q;
}

Pose frontal_head(double distance) {
  return Pose{Vec3(1.0, -1.0, -1.0).asDiagonal(), Vec3(0, 0, distance)};
}

void BM_ForwardKinematics(benchmark::State& state) {
  const DHParams dh = DHParams::ur3();
  const JointVector q = sample_q();
  for (auto _ : state) benchmark::DoNotOptimize(forward_kinematics(dh, q));
}
BENCHMARK(BM_ForwardKinematics);

void BM_Jacobian(benchmark::State& state) {
  const DHParams dh = DHParams::ur3();
  const JointVector q = sample_q();
  for (auto _ : state) benchmark::DoNotOptimize(jacobian(dh, q));
}
BENCHMARK(BM_Jacobian);

void BM_InverseKinematics(benchmark::State& state) {
  const DHParams dh = DHParams::ur3();
  const JointVector q = sample_q();
  const Pose target = forward_kinematics(dh, q);
  JointVector seed = q;
  seed.array() += 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(solve_ik(dh, target, seed));
}
BENCHMARK(BM_InverseKinematics);

void BM_HeadPoseEstimate(benchmark::State& state) {
  const FaceModel face = FaceModel::canonical();
  const CameraIntrinsics k = default_camera_intrinsics();
  const auto det = observe_landmarks(face, frontal_head(0.6), k, Pose::identity(), 0.5, 1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_head_pose(det, face, k, initial_head_pose_guess(det, face, k)));
}
BENCHMARK(BM_HeadPoseEstimate);

void BM_Render(benchmark::State& state) {
  const FaceModel face = FaceModel::canonical();
  const ProjectionMapper mapper(face, make_mask_template(MaskKind::kBeard, face),
                                state.range(0) ? Sampling::kBilinear : Sampling::kNearest);
  const CameraIntrinsics projector = default_projector_intrinsics();
  for (auto _ : state) benchmark::DoNotOptimize(mapper.render(frontal_head(0.5), projector, Pose{}));
}
BENCHMARK(BM_Render)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FullTick(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.duration = 1e6;
  Simulation sim(cfg);
  const bool render = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim.pipeline_tick(render));
}
BENCHMARK(BM_FullTick)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
