// Acceptance suite: one test case per criterion, each printing a pass/fail
// line. Tolerances and thresholds are pinned in code.

#include <doctest.h>

#include <chrono>
#include <iostream>

#include "arti/apps.hpp"
#include "arti/oracle.hpp"
#include "arti/timeline.hpp"
#include "test_util.hpp"

using namespace arti;
using namespace arti::testutil;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, const std::string& what) {
  std::cout << "[criterion " << criterion << "] " << what << ": PASS" << std::endl;
}

const char* kContactFree[] = {"pendulum_1", "pendulum_2", "pendulum_3", "pendulum_4",
                              "pendulum_5", "pendulum_6", "pendulum_7", "chain_4",
                              "chain_6",    "chain_8",    "arm2",       "arm9"};
const char* kAllScenes[] = {"pendulum_1", "pendulum_2", "pendulum_3", "pendulum_4", "pendulum_5",
                            "pendulum_6", "pendulum_7", "chain_4",    "chain_6",    "chain_8",
                            "arm2",       "arm9",       "sphere",     "slide",      "car",
                            "quadruped"};

ObjectiveSpec scene_objective(const Scene& scene) {
  if (scene.objective) return ObjectiveSpec::from_config(scene.model, *scene.objective);
  ObjectiveConfig oc;
  oc.kind = "ee_target";
  oc.link = static_cast<int>(scene.model.links.size()) - 1;
  oc.target = Vec3(0.1, 0.1, -0.3);
  return ObjectiveSpec::from_config(scene.model, oc);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("criterion 1: operator adjoint dot-product suite") {
  const auto t0 = Clock::now();
  const auto ops = standard_operator_suite();
  // every appendix operator is present
  for (const char* required :
       {"st_apply", "st_apply_inv", "st_apply_trans", "st_apply_invtrans", "st_multiply",
        "crossm", "crossf", "mul_ori", "mul_inv", "vvT", "vcross_matrix", "st2sd", "shift",
        "mat_inverse", "mat_AtBA", "mat_three", "quat_mul_vec", "quat_mul_qt"}) {
    const bool found = std::any_of(ops.begin(), ops.end(),
                                   [&](const DotTestOp& op) { return op.name == required; });
    CAPTURE(required);
    REQUIRE(found);
  }
  for (const DotTestOp& op : ops) {
    const OracleResult r = adjoint_dot_test(op, 100, 12345);
    CAPTURE(op.name);
    CAPTURE(r.failing_index);
    REQUIRE(r.worst_rel_err < 1e-5);
  }
  const double elapsed = seconds_since(t0);
  REQUIRE(elapsed < 60.0);
  report(1, "operator adjoints < 1e-5 over 100 seeded trials each, " +
                std::to_string(elapsed) + " s");
}

TEST_CASE("criterion 2: ABA matches the dense oracle on every contact-free scene") {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(777);
  double worst = 0;
  for (const char* name : kContactFree) {
    const Scene scene = load(name);
    AbaTape tape;
    for (int t = 0; t < 1000; ++t) {
      // moderate joint rates keep qdd at desk scale, where the 1e-9 absolute
      // tolerance is meaningful against double-precision conditioning
      const SystemState state = random_state(rng, scene.model, 0.5);
      const ControlInput u{random_vec(rng, scene.model.n_u)};
      const VecX qdd = aba_forward(scene.model, state, u, tape);
      const VecX dense = dense_forward_dynamics(scene.model, state, u);
      worst = std::max(worst, (qdd - dense).cwiseAbs().maxCoeff());
    }
    CAPTURE(name);
    REQUIRE(worst < 1e-9);
  }
  const double elapsed = seconds_since(t0);
  REQUIRE(elapsed < 60.0);
  report(2, "max |qdd_aba - qdd_dense| = " + std::to_string(worst) + " over 1000 states x " +
                std::to_string(std::size(kContactFree)) + " scenes, " + std::to_string(elapsed) +
                " s");
}

TEST_CASE("criterion 3: end-to-end control gradient on the 3-link pendulum") {
  const auto t0 = Clock::now();
  const Scene scene = load("pendulum_3");
  const RobotModel& model = scene.model;
  StepConfig cfg = StepConfig::from(scene.sim);
  cfg.dt = 0.005;
  const int n_t = 100;

  std::mt19937_64 rng(778);
  MatX controls(n_t, model.n_u);
  for (int r = 0; r < n_t; ++r)
    for (int c = 0; c < model.n_u; ++c)
      controls(r, c) = std::normal_distribution<double>(0.0, 0.5)(rng);

  const ObjectiveSpec obj = scene_objective(scene);
  const Trajectory traj = rollout(model, scene.x0, controls, cfg);
  const GradientReport rep = backward(model, traj, obj);

  double worst = 0;
  const double h = 1e-6;
  for (int probe = 0; probe < 20; ++probe) {
    const int k = static_cast<int>(rng() % n_t);
    const int j = static_cast<int>(rng() % model.n_u);
    MatX up = controls, um = controls;
    up(k, j) += h;
    um(k, j) -= h;
    const double fd = (obj.value(model, rollout(model, scene.x0, up, cfg)) -
                       obj.value(model, rollout(model, scene.x0, um, cfg))) /
                      (2 * h);
    worst = std::max(worst, rel_err(rep.dphi_du(k, j), fd, 1e-8));
  }
  REQUIRE(worst < 1e-4);
  const double elapsed = seconds_since(t0);
  REQUIRE(elapsed < 120.0);
  report(3, "backward vs fd over 20 control coordinates, worst rel err " + std::to_string(worst));
}

TEST_CASE("criterion 4: contact gradients on the sphere scene") {
  const Scene base_scene = load("sphere");
  const ObjectiveSpec obj = scene_objective(base_scene);
  const StepConfig cfg = StepConfig::from(base_scene.sim);
  const MatX controls = MatX::Zero(base_scene.sim.steps, 0);
  ParamMask mask;
  mask.friction = true;

  const Trajectory traj = rollout(base_scene.model, base_scene.x0, controls, cfg);
  const GradientReport rep = backward(base_scene.model, traj, obj, mask);

  // dPhi / d(initial velocity): probe the 6 velocity tangent coordinates
  const double h = 1e-6;
  double worst_v = 0;
  for (int j = 0; j < 6; ++j) {
    SystemState sp = base_scene.x0, sm = base_scene.x0;
    sp.qdot[j] += h;
    sm.qdot[j] -= h;
    const double fd = (obj.value(base_scene.model, rollout(base_scene.model, sp, controls, cfg)) -
                       obj.value(base_scene.model, rollout(base_scene.model, sm, controls, cfg))) /
                      (2 * h);
    const double analytic = rep.dphi_dx0[base_scene.model.n_v + j];
    worst_v = std::max(worst_v, rel_err(analytic, fd,
                                        std::max(1e-3 * rep.dphi_dx0.cwiseAbs().maxCoeff(), 1e-9)));
  }
  REQUIRE(worst_v < 1e-3);

  // dPhi / dmu
  auto phi_at_mu = [&](double mu) {
    Scene sc = base_scene;
    sc.model.material.mu = mu;
    return obj.value(sc.model, rollout(sc.model, sc.x0, controls, cfg));
  };
  const double mu0 = base_scene.model.material.mu;
  const double fd_mu = (phi_at_mu(mu0 + h) - phi_at_mu(mu0 - h)) / (2 * h);
  const double err_mu = rel_err(rep.dphi_dparams.mu, fd_mu, 1e-9);
  REQUIRE(err_mu < 1e-3);
  report(4, "d/d(initial velocity) worst rel err " + std::to_string(worst_v) +
                ", d/dmu rel err " + std::to_string(err_mu));
}

TEST_CASE("criterion 5: checkpoint and full-tape gradients agree on every scene") {
  double worst = 0;
  for (const char* name : kAllScenes) {
    const Scene scene = load(name);
    const StepConfig cfg = StepConfig::from(scene.sim);
    const int n_t = 200;
    const MatX controls = MatX::Zero(n_t, scene.model.n_u);
    const ObjectiveSpec obj = scene_objective(scene);
    ParamMask mask;
    mask.friction = true;
    mask.mass = true;

    RolloutOptions ck, ft;
    ck.mode = StorageMode::checkpoint_every_step;
    ft.mode = StorageMode::full_tape;
    const GradientReport r1 = backward(scene.model, rollout(scene.model, scene.x0, controls, cfg, ck),
                                       obj, mask);
    const GradientReport r2 = backward(scene.model, rollout(scene.model, scene.x0, controls, cfg, ft),
                                       obj, mask);
    double diff = (r1.dphi_dx0 - r2.dphi_dx0).cwiseAbs().maxCoeff();
    if (r1.dphi_du.size() > 0)
      diff = std::max(diff, (r1.dphi_du - r2.dphi_du).cwiseAbs().maxCoeff());
    diff = std::max(diff, std::abs(r1.dphi_dparams.mu - r2.dphi_dparams.mu));
    diff = std::max(diff, std::abs(r1.phi - r2.phi));
    CAPTURE(name);
    REQUIRE(diff <= 1e-12);
    worst = std::max(worst, diff);
  }
  report(5, "checkpoint vs full-tape gradient difference " + std::to_string(worst) +
                " over 16 scenes at n_t=200");
}

TEST_CASE("criterion 6: full-tape / checkpoint memory ratio on the 6-link chain") {
  const Scene scene = load("chain_6");
  const StepConfig cfg = StepConfig::from(scene.sim);
  auto peak = [&](int n_t, StorageMode mode) {
    RolloutOptions opts;
    opts.mode = mode;
    opts.tape_budget_bytes = size_t(16) << 30;
    const Trajectory traj =
        rollout(scene.model, scene.x0, MatX::Zero(n_t, scene.model.n_u), cfg, opts);
    return double(traj.storage.peak_aux_bytes());
  };
  const double ratio_1000 =
      peak(1000, StorageMode::full_tape) / peak(1000, StorageMode::checkpoint_every_step);
  const double ratio_3000 =
      peak(3000, StorageMode::full_tape) / peak(3000, StorageMode::checkpoint_every_step);
  REQUIRE(ratio_1000 >= 10.0);
  REQUIRE(ratio_3000 > ratio_1000);
  report(6, "peak-memory ratio " + std::to_string(ratio_1000) + " at n_t=1000, " +
                std::to_string(ratio_3000) + " at n_t=3000");
}

TEST_CASE("criterion 7: backward/forward time ratio and constant per-step cost") {
  // per-step backward <= 8x per-step forward across shipped scenes
  double worst_ratio = 0;
  std::string worst_scene;
  for (const char* name : kAllScenes) {
    const Scene scene = load(name);
    const StepConfig cfg = StepConfig::from(scene.sim);
    const int n_t = 300;
    const MatX controls = MatX::Zero(n_t, scene.model.n_u);
    const ObjectiveSpec obj = scene_objective(scene);
    std::vector<double> ratios;
    for (int rep = 0; rep < 3; ++rep) {
      const Trajectory traj = rollout(scene.model, scene.x0, controls, cfg);
      const GradientReport grad = backward(scene.model, traj, obj);
      ratios.push_back(grad.backward_ms_per_step / std::max(grad.forward_ms_per_step, 1e-9));
    }
    const double ratio = median(ratios);
    CAPTURE(name);
    CAPTURE(ratio);
    REQUIRE(ratio <= 8.0);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_scene = name;
    }
  }

  // forward per-step cost constant in horizon length (checkpoint mode)
  const Scene scene = load("pendulum_3");
  const StepConfig cfg = StepConfig::from(scene.sim);
  auto per_step_ms = [&](int n_t, int reps) {
    std::vector<double> times;
    for (int r = 0; r < reps; ++r) {
      const Trajectory traj =
          rollout(scene.model, scene.x0, MatX::Zero(n_t, scene.model.n_u), cfg);
      times.push_back(traj.forward_ms_total / n_t);
    }
    return median(times);
  };
  per_step_ms(50, 3);  // warm-up
  const double t50 = per_step_ms(50, 21);
  const double t5000 = per_step_ms(5000, 3);
  const double growth = t5000 / t50;
  REQUIRE(growth < 2.0);
  REQUIRE(growth > 0.5);
  report(7, "worst bwd/fwd ratio " + std::to_string(worst_ratio) + " (" + worst_scene +
                "), per-step fwd time ratio n_t=5000 vs 50: " + std::to_string(growth));
}

TEST_CASE("criterion 8: checkpoint-interval cost model") {
  // closed forms, exactly
  const double tf = 0.21, tb = 0.93, mc = 144.0, ms = 16488.0;
  const double n = 1000;
  REQUIRE(predict_cost(1, n, tf, tb, mc, ms).time_per_backward_step == tf + tb);
  REQUIRE(predict_cost(n, n, tf, tb, mc, ms).peak_memory == mc + ms);

  // measured k=1 backward time within 50% of independently measured t_fwd + t_adjoint
  const Scene scene = load("chain_6");
  const StepConfig cfg = StepConfig::from(scene.sim);
  const ObjectiveSpec obj = scene_objective(scene);
  const int n_t = 400;
  const MatX controls = MatX::Zero(n_t, scene.model.n_u);

  std::vector<double> bwd_ms, fwd_ms;
  for (int rep = 0; rep < 7; ++rep) {
    const Trajectory traj = rollout(scene.model, scene.x0, controls, cfg);
    const GradientReport grad = backward(scene.model, traj, obj);
    if (rep == 0) continue;  // warm-up
    fwd_ms.push_back(grad.forward_ms_per_step);
    bwd_ms.push_back(grad.backward_ms_per_step);
  }

  // adjoint-only time: replayed tape reused, step_adjoint isolated
  StepTape tape;
  step_forward(scene.model, scene.x0, ControlInput{VecX::Zero(scene.model.n_u)}, cfg, tape);
  const VecX qb = VecX::Ones(scene.model.n_q);
  const VecX vb = VecX::Ones(scene.model.n_v);
  step_adjoint(scene.model, tape, qb, vb);  // warm-up
  std::vector<double> adj_ms;
  for (int rep = 0; rep < 7; ++rep) {
    const auto t0 = Clock::now();
    for (int i = 0; i < 400; ++i) step_adjoint(scene.model, tape, qb, vb);
    adj_ms.push_back(seconds_since(t0) * 1000.0 / 400);
  }
  const double predicted = predict_cost(1, n_t, median(fwd_ms), median(adj_ms), 144, 16488)
                               .time_per_backward_step;
  const double measured = median(bwd_ms);
  const double deviation = std::abs(measured - predicted) / predicted;
  REQUIRE(deviation < 0.5);
  report(8, "measured k=1 backward " + std::to_string(measured) + " ms/step vs predicted " +
                std::to_string(predicted) + " (deviation " + std::to_string(deviation) + ")");
}

TEST_CASE("criterion 9: gradient-based reach beats equal-budget random search") {
  const Scene scene = load("arm2");
  const ObjectiveSpec obj = scene_objective(scene);
  OptimizeConfig cfg;
  cfg.max_iterations = 100;
  cfg.learning_rate = scene.optimize.lr;
  const OptimizeResult sgd = optimize_controls(scene, obj, cfg);
  const double reduction = 1.0 - sgd.best_phi / sgd.loss_history.front();
  REQUIRE(reduction >= 0.95);

  int wins = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const OptimizeResult rnd = random_search_controls(
        scene, obj, 2 * static_cast<int>(sgd.loss_history.size()), 10.0, seed);
    if (rnd.best_phi > sgd.best_phi) ++wins;
  }
  REQUIRE(wins == 5);
  report(9, "loss reduced " + std::to_string(100 * reduction) +
                "% in <=100 iterations; random search worse on 5/5 seeds");
}

TEST_CASE("criterion 10: synthetic friction recovery") {
  Scene scene = load("slide");
  const double mu_true = 0.2;
  scene.model.material.mu = mu_true;
  const Trajectory truth = rollout(scene.model, scene.x0,
                                   MatX::Zero(scene.sim.steps, scene.model.n_u),
                                   StepConfig::from(scene.sim));
  ObjectiveConfig oc = *scene.objective;
  oc.target = Vec3(truth.final_state.q[4], 0, 0);
  scene.objective = oc;
  const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, oc);

  scene.model.material.mu = 0.02;  // 10x off
  ParamMask mask;
  mask.friction = true;
  OptimizeConfig cfg;
  cfg.max_iterations = 50;
  cfg.learning_rate = scene.optimize.lr;
  cfg.convergence_phi = 1e-14;
  const EstimateResult res = estimate_parameters(scene, obj, mask, cfg);
  const double err = std::abs(res.model.material.mu - mu_true);
  REQUIRE(res.iterations <= 50);
  REQUIRE(err < 1e-3);
  report(10, "recovered mu " + std::to_string(res.model.material.mu) + " (|error| " +
                 std::to_string(err) + ") in " + std::to_string(res.iterations) + " iterations");
}

TEST_CASE("criterion 11: reinforcement-learning gradient utilities") {
  // (a) relevance weight at the sample point is exactly 1
  VecX a(3);
  a << 0.3, -0.7, 0.2;
  REQUIRE(relevance_weight(a, a) == 1.0);

  // (b) exact on a linear-dynamics fixture
  std::mt19937_64 rng(779);
  const MatX M = MatX::Random(4, 2);
  const VecX a0 = random_vec(rng, 2);
  TransitionSample lin;
  lin.a0 = a0;
  lin.s0_next = M * a0;
  lin.r0 = 0;
  lin.ds_da = M;
  lin.dr_da = VecX::Zero(2);
  const VecX da_lin = random_vec(rng, 2);
  REQUIRE((enhance_samples(lin, {da_lin})[0].s_next - M * (a0 + da_lin)).cwiseAbs().maxCoeff() <
          1e-12);

  // (c) quadratic error scaling on the pendulum transition (6 substeps)
  const Scene scene = load("pendulum_1");
  const StepConfig cfg = StepConfig::from(scene.sim);
  const int substeps = 6;
  double ratio_sum = 0;
  const int trials = 20;
  StepTape scratch;
  for (int t = 0; t < trials; ++t) {
    const SystemState s0 = random_state(rng, scene.model, 0.5);
    const VecX act = random_vec(rng, 1);
    const TransitionSample sample = make_transition(scene.model, s0, act, substeps, cfg);
    auto true_next = [&](const VecX& av) {
      SystemState cur = s0;
      for (int k = 0; k < substeps; ++k)
        cur = step_forward(scene.model, cur, ControlInput{av}, cfg, scratch);
      return state_pack(scene.model, cur.q, cur.qdot);
    };
    VecX da = random_vec(rng, 1);
    da *= 2.0 / da.norm();
    const double e_full = (enhance_samples(sample, {da})[0].s_next - true_next(act + da)).norm();
    const double e_half =
        (enhance_samples(sample, {0.5 * da})[0].s_next - true_next(act + 0.5 * da)).norm();
    ratio_sum += e_full / std::max(e_half, 1e-30);
  }
  const double mean_ratio = ratio_sum / trials;
  REQUIRE(mean_ratio > 3.0);  // 4x +- 25%
  REQUIRE(mean_ratio < 5.0);

  // (d) policy enhancement matches finite differences on the quadratic-Q fixture
  const int ns = 4, na = 3;
  const MatX R = MatX::Random(na, na);
  const VecX c = random_vec(rng, na);
  const MatX Ms = MatX::Random(ns, ns);
  const MatX Ma = MatX::Random(ns, na);
  MatX P = MatX::Random(ns, ns);
  P = (P + P.transpose()).eval();
  const double gamma = 0.95;
  const VecX s = random_vec(rng, ns);
  auto Q = [&](const VecX& act) {
    const VecX sp = Ms * s + Ma * act;
    return act.dot(R * act) + c.dot(act) + gamma * 0.5 * sp.dot(P * sp);
  };
  const VecX act0 = random_vec(rng, na);
  PolicyEnhanceInput in;
  in.dr_da = (R + R.transpose()) * act0 + c;
  in.gamma = gamma;
  in.dQnext_ds = P * (Ms * s + Ma * act0);
  in.ds_da = Ma;
  const VecX analytic = policy_enhance_grad(in);
  const VecX numeric = fd_gradient(Q, act0);
  double worst = 0;
  for (int i = 0; i < na; ++i) worst = std::max(worst, rel_err(analytic[i], numeric[i], 1e-9));
  REQUIRE(worst < 1e-6);

  report(11, "sample-enhancement error ratio " + std::to_string(mean_ratio) +
                 ", policy gradient rel err " + std::to_string(worst));
}
