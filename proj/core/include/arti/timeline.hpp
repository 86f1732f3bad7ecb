#pragma once

#include <functional>
#include <ostream>

#include "arti/step.hpp"

// Time stepping with per-step checkpointing and the backward adjoint
// recursion over the whole trajectory. A checkpoint stores only (q, qdot, u);
// the backward pass reloads it and replays one forward step to reconstruct
// the step tape, then applies the integrator, contact, and dynamics adjoints.

namespace arti {

struct Checkpoint {
  VecX q, qdot, u;
  int step = 0;
  size_t byte_size() const { return (q.size() + qdot.size() + u.size()) * sizeof(double); }
};

enum class StorageMode : uint8_t { checkpoint_every_step, full_tape };

struct StorageStats {
  size_t checkpoint_bytes = 0;
  size_t tape_peak_bytes = 0;   // max live tape storage seen
  size_t tape_total_bytes = 0;  // sum over steps (what full_tape keeps)
  size_t peak_aux_bytes() const { return checkpoint_bytes + tape_peak_bytes; }
};

struct Trajectory {
  std::vector<Checkpoint> checkpoints;  // state before each step, plus its control
  SystemState final_state;
  std::vector<int> contact_counts;  // per step
  StorageMode mode = StorageMode::checkpoint_every_step;
  StepConfig cfg;
  std::vector<StepTape> tapes;  // full_tape mode only
  StorageStats storage;
  double forward_ms_total = 0;
  int n_t() const { return static_cast<int>(checkpoints.size()); }
  const VecX& state_q(int k) const;     // x^k, k in [0, n_t]
  const VecX& state_qdot(int k) const;
};

struct RolloutOptions {
  StorageMode mode = StorageMode::checkpoint_every_step;
  size_t tape_budget_bytes = size_t(4) << 30;  // accounting units, not RSS
};

// Runs n_t steps (rows of `controls`) from x0. Throws NonFiniteState with the
// step index on numeric failure and MemoryBudgetExceeded when the accounting
// counters pass the budget.
Trajectory rollout(const RobotModel& model, const SystemState& x0, const MatX& controls,
                   const StepConfig& cfg, const RolloutOptions& options = {});

// N independent rollouts across threads; results ordered by input index.
std::vector<Trajectory> rollout_batch(const RobotModel& model,
                                      const std::vector<SystemState>& x0s,
                                      const std::vector<MatX>& controls, const StepConfig& cfg,
                                      const RolloutOptions& options = {});

// --- objectives ---------------------------------------------------------------

// Scalar objective Phi = sum_k l_k(x^k, u^k), optionally a weighted sum of
// several registered terms. Each term supplies its value and exact ambient
// state gradient.
class ObjectiveSpec {
 public:
  static ObjectiveSpec from_config(const RobotModel& model, const ObjectiveConfig& cfg);
  // alpha * a + beta * b
  static ObjectiveSpec combine(double alpha, const ObjectiveSpec& a, double beta,
                               const ObjectiveSpec& b);
  // Phi
  double value(const RobotModel& model, const Trajectory& traj) const;
  // d l / d x^k, accumulated into ambient q_bar (n_q) and v_bar (n_v)
  void state_gradient(const RobotModel& model, const Trajectory& traj, int k, VecX& q_bar,
                      VecX& v_bar) const;

  ObjectiveConfig config;

 private:
  enum class Kind { ee_target, progress, terminal_q } kind_ = Kind::ee_target;
  double scale_ = 1.0;
  std::vector<ObjectiveSpec> extra_terms_;
  double term_value(const RobotModel& model, const Trajectory& traj) const;
  void term_gradient(const RobotModel& model, const Trajectory& traj, int k, VecX& q_bar,
                     VecX& v_bar) const;
  double masked_sq_dist(const RobotModel& model, const VecX& q) const;
  VecX masked_sq_dist_grad(const RobotModel& model, const VecX& q) const;
};

struct GradientReport {
  double phi = 0;
  MatX dphi_du;          // n_t x n_u
  ParamGrads dphi_dparams;
  VecX dphi_dx0;         // tangent space, 2 n_v
  StorageStats storage;
  double forward_ms_per_step = 0;
  double backward_ms_per_step = 0;
};

// Adjoint sweep k = n_t..1. Checkpoint mode reloads (q, qdot, u) and replays
// one step to rebuild the tape; full-tape mode reuses the stored tapes. Both
// produce identical gradients.
GradientReport backward(const RobotModel& model, const Trajectory& traj,
                        const ObjectiveSpec& objective, const ParamMask& mask = {});

// --- checkpoint-interval cost model --------------------------------------------

struct CostPrediction {
  double time_per_backward_step = 0;
  double peak_memory = 0;
};

// Closed-form ablation model: time = (k+1)/2 * t_fwd + t_bwd,
// memory = n/k * m_checkpoint + m_simulation.
CostPrediction predict_cost(double interval_k, double steps_n, double t_forward, double t_backward,
                            double m_checkpoint, double m_simulation);

// --- exports -------------------------------------------------------------------

// Line-delimited trajectory export: step, q..., qdot..., u..., contacts.
void write_trajectory_csv(std::ostream& out, const RobotModel& model, const Trajectory& traj);

}  // namespace arti
