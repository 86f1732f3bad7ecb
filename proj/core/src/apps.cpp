#include "arti/apps.hpp"

#include <random>

namespace arti {

namespace {

void project_controls(const RobotModel& model, MatX& controls) {
  for (size_t i = 0; i < model.links.size(); ++i) {
    const int idx = model.u_index[i];
    if (idx < 0) continue;
    const double lim = model.links[i].joint.effort_limit;
    if (!std::isfinite(lim)) continue;
    for (int k = 0; k < controls.rows(); ++k)
      controls(k, idx) = std::clamp(controls(k, idx), -lim, lim);
  }
}

}  // namespace

OptimizeResult optimize_controls(const Scene& scene, const ObjectiveSpec& objective,
                                 const OptimizeConfig& cfg) {
  if (cfg.max_iterations < 1 || cfg.learning_rate < 0)
    throw ValidationError("optimize_controls: bad config");
  const RobotModel& model = scene.model;
  const StepConfig step_cfg = StepConfig::from(scene.sim);

  OptimizeResult result;
  result.controls = MatX::Zero(scene.sim.steps, model.n_u);
  MatX controls = result.controls;
  result.best_phi = std::numeric_limits<double>::infinity();
  double phi0 = 0;
  int bad_streak = 0;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const Trajectory traj = rollout(model, scene.x0, controls, step_cfg);
    const GradientReport rep = backward(model, traj, objective);
    result.loss_history.push_back(rep.phi);
    if (iter == 0) phi0 = rep.phi;
    if (rep.phi < result.best_phi) {
      result.best_phi = rep.phi;
      result.controls = controls;
    }
    if (rep.phi > cfg.divergence_factor * phi0 && phi0 > 0) {
      if (++bad_streak >= cfg.divergence_patience)
        throw DivergenceDetected("optimize_controls: loss grew " +
                                 std::to_string(cfg.divergence_factor) + "x above initial for " +
                                 std::to_string(bad_streak) + " iterations");
    } else {
      bad_streak = 0;
    }
    if (rep.phi < cfg.convergence_phi) {
      result.iterations_to_convergence = iter;
      break;
    }
    controls -= cfg.learning_rate * rep.dphi_du;
    project_controls(model, controls);
  }
  return result;
}

OptimizeResult random_search_controls(const Scene& scene, const ObjectiveSpec& objective,
                                      int budget_rollouts, double bound, uint64_t seed) {
  const RobotModel& model = scene.model;
  const StepConfig step_cfg = StepConfig::from(scene.sim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-bound, bound);

  OptimizeResult result;
  result.controls = MatX::Zero(scene.sim.steps, model.n_u);
  result.best_phi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < budget_rollouts; ++it) {
    MatX controls(scene.sim.steps, model.n_u);
    if (it > 0) {
      for (int r = 0; r < controls.rows(); ++r)
        for (int c = 0; c < controls.cols(); ++c) controls(r, c) = uniform(rng);
    } else {
      controls.setZero();  // match SGD's zero initialization on the first call
    }
    project_controls(model, controls);
    const Trajectory traj = rollout(model, scene.x0, controls, step_cfg);
    const double phi = objective.value(model, traj);
    if (phi < result.best_phi) {
      result.best_phi = phi;
      result.controls = controls;
    }
    result.loss_history.push_back(result.best_phi);
  }
  return result;
}

EstimateResult estimate_parameters(const Scene& scene, const ObjectiveSpec& objective,
                                   const ParamMask& mask, const OptimizeConfig& cfg) {
  if (!(mask.friction || mask.mass || mask.damping))
    throw ValidationError("estimate_parameters: nothing to estimate in the mask");
  EstimateResult result;
  result.model = scene.model;
  const StepConfig step_cfg = StepConfig::from(scene.sim);
  const MatX controls = MatX::Zero(scene.sim.steps, scene.model.n_u);
  double phi0 = 0;
  int bad_streak = 0;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const Trajectory traj = rollout(result.model, scene.x0, controls, step_cfg);
    const GradientReport rep = backward(result.model, traj, objective, mask);
    result.loss_history.push_back(rep.phi);
    result.final_phi = rep.phi;
    result.iterations = iter + 1;
    if (iter == 0) phi0 = rep.phi;
    if (phi0 > 0 && rep.phi > cfg.divergence_factor * phi0) {
      if (++bad_streak >= cfg.divergence_patience)
        throw DivergenceDetected("estimate_parameters: diverging");
    } else {
      bad_streak = 0;
    }
    if (rep.phi < cfg.convergence_phi) break;

    if (mask.friction) {
      result.model.material.mu =
          std::max(0.0, result.model.material.mu - cfg.learning_rate * rep.dphi_dparams.mu);
    }
    if (mask.mass) {
      for (size_t i = 0; i < result.model.links.size(); ++i)
        result.model.links[i].mass = std::max(
            1e-6, result.model.links[i].mass - cfg.learning_rate * rep.dphi_dparams.mass[i]);
    }
    if (mask.damping) {
      for (size_t i = 0; i < result.model.links.size(); ++i)
        result.model.links[i].joint.damping =
            std::max(0.0, result.model.links[i].joint.damping -
                              cfg.learning_rate * rep.dphi_dparams.damping[i]);
    }
  }
  return result;
}

std::vector<EnhancedSample> enhance_samples(const TransitionSample& sample,
                                            const std::vector<VecX>& perturbations) {
  if (sample.ds_da.rows() != sample.s0_next.size() || sample.ds_da.cols() != sample.a0.size() ||
      sample.dr_da.size() != sample.a0.size())
    throw ShapeMismatch("enhance_samples: Jacobian shapes inconsistent with sample");
  std::vector<EnhancedSample> out;
  out.reserve(perturbations.size());
  for (const VecX& da : perturbations) {
    if (da.size() != sample.a0.size()) throw ShapeMismatch("enhance_samples: bad perturbation size");
    EnhancedSample e;
    e.a = sample.a0 + da;
    e.s_next = sample.s0_next + sample.ds_da * da;
    e.r = sample.r0 + sample.dr_da.dot(da);
    out.push_back(std::move(e));
  }
  return out;
}

VecX policy_enhance_grad(const PolicyEnhanceInput& input) {
  if (input.ds_da.rows() != input.dQnext_ds.size() || input.ds_da.cols() != input.dr_da.size())
    throw ShapeMismatch("policy_enhance_grad: shape mismatch");
  return input.dr_da + input.gamma * (input.ds_da.transpose() * input.dQnext_ds);
}

double relevance_weight(const VecX& a, const VecX& a0) {
  if (a.size() != a0.size()) throw ShapeMismatch("relevance_weight: size mismatch");
  return std::exp(-(a - a0).norm());
}

TransitionSample make_transition(const RobotModel& model, const SystemState& state, const VecX& a,
                                 int n_substeps, const StepConfig& cfg) {
  if (n_substeps < 1) throw ShapeMismatch("make_transition: need at least one substep");
  TransitionSample out;
  out.s = state_pack(model, state.q, state.qdot);
  out.a0 = a;

  std::vector<StepTape> tapes(n_substeps);
  SystemState cur = state;
  for (int k = 0; k < n_substeps; ++k) cur = step_forward(model, cur, ControlInput{a}, cfg, tapes[k]);
  out.s0_next = state_pack(model, cur.q, cur.qdot);

  const int dim = model.n_q + model.n_v;
  out.ds_da = MatX::Zero(dim, model.n_u);
  out.dr_da = VecX::Zero(model.n_u);
  for (int i = 0; i < dim; ++i) {
    VecX qb = VecX::Zero(model.n_q);
    VecX vb = VecX::Zero(model.n_v);
    if (i < model.n_q) qb[i] = 1.0;
    else vb[i - model.n_q] = 1.0;
    VecX du = VecX::Zero(model.n_u);
    for (int k = n_substeps - 1; k >= 0; --k) {
      const StepGrads g = step_adjoint(model, tapes[k], qb, vb);
      du += g.u_bar;  // the action is shared by every substep
      qb = g.q_bar;
      vb = g.qd_bar;
    }
    out.ds_da.row(i) = du.transpose();
  }
  return out;
}

StepJacobians step_jacobian_wrt_u(const RobotModel& model, const SystemState& state,
                                  const ControlInput& u, const StepConfig& cfg) {
  StepTape tape;
  const SystemState next = step_forward(model, state, u, cfg, tape);
  StepJacobians out;
  out.s_next = state_pack(model, next.q, next.qdot);
  out.ds_da = MatX::Zero(model.n_q + model.n_v, model.n_u);
  for (int i = 0; i < model.n_q + model.n_v; ++i) {
    VecX qb = VecX::Zero(model.n_q);
    VecX vb = VecX::Zero(model.n_v);
    if (i < model.n_q) qb[i] = 1.0;
    else vb[i - model.n_q] = 1.0;
    const StepGrads g = step_adjoint(model, tape, qb, vb);
    out.ds_da.row(i) = g.u_bar.transpose();
  }
  return out;
}

}  // namespace arti
