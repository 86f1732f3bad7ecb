#include <benchmark/benchmark.h>

#include <random>

#include "arti/contact.hpp"
#include "arti/scene.hpp"
#include "arti/timeline.hpp"

using namespace arti;

namespace {

RobotModel chain(int n) {
  RobotModel model;
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    LinkSpec link;
    link.parent = i - 1;
    link.joint.kind = JointKind::revolute;
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    link.joint.axis = axis / axis.norm();
    link.joint.parent_to_joint = SpatialTransform(Mat3::Identity(), Vec3(0.05, 0, -0.35));
    link.mass = 1.0;
    link.com = Vec3(0.02, 0, -0.15);
    link.inertia = Mat3::Identity() * 0.02;
    model.links.push_back(link);
  }
  model.finalize();
  return model;
}

SystemState excited_state(const RobotModel& model) {
  SystemState s = default_state(model);
  for (int i = 0; i < model.n_q; ++i) s.q[i] = 0.3 - 0.01 * i;
  for (int i = 0; i < model.n_v; ++i) s.qdot[i] = 0.1 * (i % 3 - 1);
  return s;
}

void BM_aba_forward(benchmark::State& state) {
  const RobotModel model = chain(static_cast<int>(state.range(0)));
  const SystemState s = excited_state(model);
  const ControlInput u{VecX::Zero(model.n_u)};
  AbaTape tape;
  for (auto _ : state) benchmark::DoNotOptimize(aba_forward(model, s, u, tape));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_aba_forward)->RangeMultiplier(2)->Range(1, 64)->Complexity(benchmark::oN);

void BM_aba_adjoint(benchmark::State& state) {
  const RobotModel model = chain(static_cast<int>(state.range(0)));
  const SystemState s = excited_state(model);
  const ControlInput u{VecX::Zero(model.n_u)};
  AbaTape tape;
  aba_forward(model, s, u, tape);
  const VecX seed = VecX::Ones(model.n_v);
  for (auto _ : state) benchmark::DoNotOptimize(aba_adjoint(model, s, u, tape, seed));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_aba_adjoint)->RangeMultiplier(2)->Range(1, 64)->Complexity(benchmark::oN);

void BM_pgs_solve(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatX B(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) B(r, c) = normal(rng);
  MlcpProblem P;
  P.A = B * B.transpose() + m * MatX::Identity(m, m);
  P.b = VecX::Random(m);
  P.c_minus = VecX::Zero(m);
  P.c_plus = VecX::Constant(m, std::numeric_limits<double>::infinity());
  P.rows.assign(m, {0, 0, -1, 0.0});
  for (auto _ : state) benchmark::DoNotOptimize(pgs_solve(P, 50));
}
BENCHMARK(BM_pgs_solve)->Arg(3)->Arg(12)->Arg(24);

void BM_step_forward_quadruped(benchmark::State& state) {
  const Scene scene = load_scene_file(std::string(ARTI_SCENE_DIR) + "/quadruped.scene");
  const StepConfig cfg = StepConfig::from(scene.sim);
  const ControlInput u{VecX::Zero(scene.model.n_u)};
  StepTape tape;
  for (auto _ : state)
    benchmark::DoNotOptimize(step_forward(scene.model, scene.x0, u, cfg, tape));
}
BENCHMARK(BM_step_forward_quadruped);

void BM_step_adjoint_quadruped(benchmark::State& state) {
  const Scene scene = load_scene_file(std::string(ARTI_SCENE_DIR) + "/quadruped.scene");
  const StepConfig cfg = StepConfig::from(scene.sim);
  StepTape tape;
  step_forward(scene.model, scene.x0, ControlInput{VecX::Zero(scene.model.n_u)}, cfg, tape);
  const VecX qb = VecX::Ones(scene.model.n_q);
  const VecX vb = VecX::Ones(scene.model.n_v);
  for (auto _ : state) benchmark::DoNotOptimize(step_adjoint(scene.model, tape, qb, vb));
}
BENCHMARK(BM_step_adjoint_quadruped);

}  // namespace

BENCHMARK_MAIN();
