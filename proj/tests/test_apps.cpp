#include <doctest.h>

#include "arti/apps.hpp"
#include "arti/oracle.hpp"
#include "test_util.hpp"

using namespace arti;
using namespace arti::testutil;

namespace {

Scene slider_scene() {
  Scene scene;
  LinkSpec link;
  link.parent = -1;
  link.joint.kind = JointKind::prismatic;
  link.joint.axis = Vec3::UnitX();
  link.mass = 1.0;
  link.com = Vec3::Zero();
  link.inertia = Mat3::Identity() * 0.01;
  scene.model.links.push_back(link);
  scene.model.gravity = Vec3::Zero();
  scene.model.finalize();
  scene.x0 = default_state(scene.model);
  scene.sim.dt = 0.02;
  scene.sim.steps = 40;
  scene.sim.integrator = Integrator::explicit_euler;
  ObjectiveConfig oc;
  oc.kind = "ee_target";
  oc.link = 0;
  oc.point = Vec3::Zero();
  oc.target = Vec3(1.0, 0, 0);
  oc.axis_mask = Vec3(1, 0, 0);
  scene.objective = oc;
  return scene;
}

}  // namespace

TEST_CASE("relevance weight") {
  VecX a(3), b(3);
  a << 1, 2, 3;
  b = a;
  CHECK(relevance_weight(a, a) == 1.0);
  b[0] += 1.0;
  CHECK(relevance_weight(a, b) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  // monotone in distance
  std::mt19937_64 rng(71);
  for (int t = 0; t < 30; ++t) {
    const VecX d1 = random_vec(rng, 3);
    const VecX d2 = d1 * 1.7;
    CHECK(relevance_weight(a, a + d2) < relevance_weight(a, a + d1));
  }
  CHECK_THROWS_AS(relevance_weight(a, VecX::Zero(2)), ShapeMismatch);
}

TEST_CASE("enhance_samples: zero perturbation returns the sample") {
  TransitionSample s;
  s.s = VecX::Zero(2);
  s.a0 = VecX::Ones(2);
  s.s0_next = VecX::Constant(3, 2.0);
  s.r0 = 0.5;
  s.ds_da = MatX::Random(3, 2);
  s.dr_da = VecX::Random(2);
  const auto out = enhance_samples(s, {VecX::Zero(2)});
  REQUIRE(out.size() == 1);
  CHECK((out[0].a - s.a0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out[0].s_next - s.s0_next).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out[0].r == s.r0);
}

TEST_CASE("enhance_samples is exact on linear dynamics and linear in da") {
  std::mt19937_64 rng(72);
  const MatX M = MatX::Random(4, 3);
  const VecX r_coef = VecX::Random(3);
  const VecX a0 = random_vec(rng, 3);
  TransitionSample s;
  s.a0 = a0;
  s.s0_next = M * a0;
  s.r0 = r_coef.dot(a0);
  s.ds_da = M;
  s.dr_da = r_coef;

  const VecX da = random_vec(rng, 3);
  const auto out = enhance_samples(s, {da});
  CHECK((out[0].s_next - M * (a0 + da)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(out[0].r == doctest::Approx(r_coef.dot(a0 + da)).epsilon(1e-12));

  // additivity of deltas relative to the baseline
  const VecX d1 = random_vec(rng, 3), d2 = random_vec(rng, 3);
  const auto o1 = enhance_samples(s, {d1})[0];
  const auto o2 = enhance_samples(s, {d2})[0];
  const auto o12 = enhance_samples(s, {d1 + d2})[0];
  CHECK((o12.s_next - (o1.s_next + o2.s_next - s.s0_next)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(o12.r - (o1.r + o2.r - s.r0)) < 1e-12);
}

TEST_CASE("enhance_samples error scales quadratically on the pendulum") {
  // An environment transition holds the action for several simulator steps;
  // a single step is exactly linear in the torque, so the Taylor remainder
  // only appears across substeps.
  const Scene scene = load("pendulum_1");
  const RobotModel& model = scene.model;
  StepConfig cfg = StepConfig::from(scene.sim);
  const int substeps = 6;
  std::mt19937_64 rng(73);

  double ratio_sum = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const SystemState s0 = random_state(rng, model, 0.5);
    const VecX a0 = random_vec(rng, 1);
    const TransitionSample sample = make_transition(model, s0, a0, substeps, cfg);

    StepTape scratch;
    auto true_next = [&](const VecX& a) {
      SystemState cur = s0;
      for (int k = 0; k < substeps; ++k) cur = step_forward(model, cur, ControlInput{a}, cfg, scratch);
      return state_pack(model, cur.q, cur.qdot);
    };
    VecX da = random_vec(rng, 1);
    da *= 2.0 / da.norm();
    const double e_full = (enhance_samples(sample, {da})[0].s_next - true_next(a0 + da)).norm();
    const double e_half =
        (enhance_samples(sample, {0.5 * da})[0].s_next - true_next(a0 + 0.5 * da)).norm();
    ratio_sum += e_full / std::max(e_half, 1e-30);
  }
  const double mean_ratio = ratio_sum / trials;
  CHECK(mean_ratio > 3.0);
  CHECK(mean_ratio < 5.0);
}

TEST_CASE("policy_enhance_grad expansion") {
  std::mt19937_64 rng(74);
  PolicyEnhanceInput in;
  in.dr_da = random_vec(rng, 3);
  in.gamma = 0.0;
  in.dQnext_ds = random_vec(rng, 4);
  in.ds_da = MatX::Random(4, 3);
  CHECK((policy_enhance_grad(in) - in.dr_da).cwiseAbs().maxCoeff() == 0.0);

  PolicyEnhanceInput in2;
  in2.dr_da = VecX::Zero(4);
  in2.gamma = 0.9;
  in2.dQnext_ds = random_vec(rng, 4);
  in2.ds_da = MatX::Identity(4, 4);
  CHECK((policy_enhance_grad(in2) - 0.9 * in2.dQnext_ds).cwiseAbs().maxCoeff() < 1e-15);

  // linearity in both gradient inputs
  PolicyEnhanceInput a = in2, b = in2;
  a.dr_da = random_vec(rng, 4);
  b.dr_da = random_vec(rng, 4);
  PolicyEnhanceInput ab = in2;
  ab.dr_da = a.dr_da + b.dr_da;
  CHECK((policy_enhance_grad(ab) + policy_enhance_grad(in2) -
         policy_enhance_grad(a) - policy_enhance_grad(b))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("policy_enhance_grad matches finite differences on a quadratic-Q fixture") {
  // r(s, a) = a^T R a + c^T a; s' = Ms s + Ma a; Q = r + gamma * 0.5 s'^T P s'
  std::mt19937_64 rng(75);
  const int ns = 4, na = 3;
  const MatX R = MatX::Random(na, na);
  const VecX c = random_vec(rng, na);
  const MatX Ms = MatX::Random(ns, ns);
  const MatX Ma = MatX::Random(ns, na);
  MatX P = MatX::Random(ns, ns);
  P = (P + P.transpose()).eval();
  const double gamma = 0.95;
  const VecX s = random_vec(rng, ns);

  auto Q = [&](const VecX& a) {
    const VecX sp = Ms * s + Ma * a;
    return a.dot(R * a) + c.dot(a) + gamma * 0.5 * sp.dot(P * sp);
  };
  const VecX a0 = random_vec(rng, na);
  const VecX sp0 = Ms * s + Ma * a0;

  PolicyEnhanceInput in;
  in.dr_da = (R + R.transpose()) * a0 + c;
  in.gamma = gamma;
  in.dQnext_ds = P * sp0;  // gradient of 0.5 s'^T P s'
  in.ds_da = Ma;
  const VecX analytic = policy_enhance_grad(in);
  const VecX numeric = fd_gradient(Q, a0);
  for (int i = 0; i < na; ++i) CHECK(rel_err(analytic[i], numeric[i], 1e-9) < 1e-6);
}

TEST_CASE("optimize_controls with zero learning rate is a no-op") {
  const Scene scene = slider_scene();
  const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, *scene.objective);
  OptimizeConfig cfg;
  cfg.max_iterations = 5;
  cfg.learning_rate = 0.0;
  const OptimizeResult res = optimize_controls(scene, obj, cfg);
  CHECK(res.controls.cwiseAbs().maxCoeff() == 0.0);
  for (double phi : res.loss_history) CHECK(phi == res.loss_history[0]);
}

TEST_CASE("optimize_controls solves the zero-gravity point mass reach") {
  const Scene scene = slider_scene();
  const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, *scene.objective);
  OptimizeConfig cfg;
  cfg.max_iterations = 200;
  cfg.learning_rate = 120.0;  // the control-to-position map carries a dt^2 factor
  cfg.convergence_phi = 1e-7;
  const OptimizeResult res = optimize_controls(scene, obj, cfg);
  CHECK(res.best_phi < 1e-6);
  CHECK(res.iterations_to_convergence >= 0);
  CHECK(res.iterations_to_convergence < 200);
}

TEST_CASE("friction estimation recovers the coefficient") {
  Scene scene = load("slide");
  // synthesize the observation target from the true coefficient
  const double mu_true = 0.2;
  scene.model.material.mu = mu_true;
  const Trajectory truth = rollout(scene.model, scene.x0,
                                   MatX::Zero(scene.sim.steps, scene.model.n_u),
                                   StepConfig::from(scene.sim));
  ObjectiveConfig oc = *scene.objective;
  oc.target = Vec3(truth.final_state.q[4], 0, 0);  // reach the observed stop point
  scene.objective = oc;
  const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, oc);

  scene.model.material.mu = 0.02;  // 10x off
  ParamMask mask;
  mask.friction = true;
  OptimizeConfig cfg;
  cfg.max_iterations = 50;
  cfg.learning_rate = scene.optimize.lr;
  cfg.convergence_phi = 1e-12;
  const EstimateResult res = estimate_parameters(scene, obj, mask, cfg);
  CHECK(std::abs(res.model.material.mu - mu_true) < 1e-3);
  CHECK(res.model.material.mu >= 0.0);
}

TEST_CASE("friction gradient matches finite differences across mu values") {
  Scene scene = load("slide");
  const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, *scene.objective);
  const StepConfig cfg = StepConfig::from(scene.sim);
  const MatX controls = MatX::Zero(scene.sim.steps, scene.model.n_u);
  ParamMask mask;
  mask.friction = true;

  std::mt19937_64 rng(76);
  std::uniform_real_distribution<double> uniform(0.05, 0.24);
  int tested = 0;
  while (tested < 10) {
    const double mu = uniform(rng);
    auto phi_at = [&](double m) {
      Scene sc = scene;
      sc.model.material.mu = m;
      return obj.value(sc.model, rollout(sc.model, sc.x0, controls, cfg));
    };
    Scene sc = scene;
    sc.model.material.mu = mu;
    const Trajectory traj = rollout(sc.model, sc.x0, controls, cfg);
    const GradientReport rep = backward(sc.model, traj, obj, mask);
    const double h = 1e-6;
    const double fd = (phi_at(mu + h) - phi_at(mu - h)) / (2 * h);
    if (std::abs(fd) < 1e-6) continue;  // flat region; resample
    ++tested;
    CAPTURE(mu);
    CHECK(rel_err(rep.dphi_dparams.mu, fd, 1e-6) < 1e-3);
  }
}

TEST_CASE("estimated mu stays nonnegative") {
  Scene scene = load("slide");
  ObjectiveConfig oc = *scene.objective;
  oc.target = Vec3(10.0, 0, 0);  // unreachable: pushes mu towards zero
  const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, oc);
  scene.objective = oc;
  ParamMask mask;
  mask.friction = true;
  OptimizeConfig cfg;
  cfg.max_iterations = 10;
  cfg.learning_rate = 5.0;
  cfg.divergence_factor = 1e9;
  const EstimateResult res = estimate_parameters(scene, obj, mask, cfg);
  CHECK(res.model.material.mu >= 0.0);
}
