#pragma once

#include "arti/timeline.hpp"

// Downstream uses of the differentiable simulator: gradient-based motion
// control, parameter estimation, and the two reinforcement-learning gradient
// utilities (sample enhancement, policy enhancement).

namespace arti {

struct OptimizeConfig {
  int max_iterations = 100;
  double learning_rate = 0.01;
  double convergence_phi = 1e-8;
  uint64_t seed = 0;
  double divergence_factor = 10.0;
  int divergence_patience = 10;
};

struct OptimizeResult {
  MatX controls;
  std::vector<double> loss_history;  // Phi per iteration (before each update)
  int iterations_to_convergence = -1;
  double best_phi = 0;
};

// Plain SGD on the n_t x n_u torque array, controls initialized to zero.
// Controls are projected into the per-joint effort limits after each update.
OptimizeResult optimize_controls(const Scene& scene, const ObjectiveSpec& objective,
                                 const OptimizeConfig& cfg);

// Uniform random search with the same simulator-call budget as an SGD run of
// `iterations` steps (a backward pass counts as one extra call per step).
OptimizeResult random_search_controls(const Scene& scene, const ObjectiveSpec& objective,
                                      int budget_rollouts, double bound, uint64_t seed);

struct EstimateResult {
  RobotModel model;  // with the estimated parameters applied
  std::vector<double> loss_history;
  int iterations = 0;
  double final_phi = 0;
};

// Gradient descent over the masked physical parameters (friction mu, per-link
// mass, per-link damping); mu is clamped to >= 0 after every update.
EstimateResult estimate_parameters(const Scene& scene, const ObjectiveSpec& objective,
                                   const ParamMask& mask, const OptimizeConfig& cfg);

// --- reinforcement-learning gradient utilities --------------------------------

struct TransitionSample {
  VecX s;        // observation
  VecX a0;       // action
  VecX s0_next;  // next observation
  double r0 = 0;
  MatX ds_da;  // |s'| x |a|
  VecX dr_da;  // |a|
};

struct EnhancedSample {
  VecX a;
  VecX s_next;
  double r = 0;
};

// First-order Taylor samples around a true transition.
std::vector<EnhancedSample> enhance_samples(const TransitionSample& sample,
                                            const std::vector<VecX>& perturbations);

struct PolicyEnhanceInput {
  VecX dr_da;
  double gamma = 0.99;
  VecX dQnext_ds;  // dQ(s', mu(s'))/ds'
  MatX ds_da;      // |s'| x |a|
};

// One-step expansion of the critic's action gradient:
// dQ/da = dr/da + gamma * (ds'/da)^T dQ(s',.)/ds'.
VecX policy_enhance_grad(const PolicyEnhanceInput& input);

// Off-policy relevance weight w = exp(-|a - a0|).
double relevance_weight(const VecX& a, const VecX& a0);

// One-step simulator Jacobians for building TransitionSamples at desk scale:
// s = [q; qdot] ambient, a = u. Uses the step adjoint with unit output seeds.
struct StepJacobians {
  VecX s_next;  // packed next state
  MatX ds_da;   // (n_q + n_v) x n_u
};
StepJacobians step_jacobian_wrt_u(const RobotModel& model, const SystemState& state,
                                  const ControlInput& u, const StepConfig& cfg);

// An RL-style environment transition: the action is held for n_substeps
// simulator steps (frame skip), and ds'/da is assembled by chaining the step
// adjoints backward through the substeps. The reward channel is left zero;
// callers fill r0/dr_da for their task.
TransitionSample make_transition(const RobotModel& model, const SystemState& state, const VecX& a,
                                 int n_substeps, const StepConfig& cfg);

}  // namespace arti
