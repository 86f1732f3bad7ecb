#include "arti/timeline.hpp"

#include <chrono>
#include <future>

namespace arti {

namespace {
using Clock = std::chrono::steady_clock;
double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}
}  // namespace

const VecX& Trajectory::state_q(int k) const {
  if (k < 0 || k > n_t()) throw IncompleteTrajectory("state_q: step out of range");
  return k == n_t() ? final_state.q : checkpoints[k].q;
}

const VecX& Trajectory::state_qdot(int k) const {
  if (k < 0 || k > n_t()) throw IncompleteTrajectory("state_qdot: step out of range");
  return k == n_t() ? final_state.qdot : checkpoints[k].qdot;
}

Trajectory rollout(const RobotModel& model, const SystemState& x0, const MatX& controls,
                   const StepConfig& cfg, const RolloutOptions& options) {
  if (controls.cols() != model.n_u)
    throw DimensionMismatch("rollout: controls must have n_u columns");
  const int n_t = static_cast<int>(controls.rows());
  if (n_t < 1) throw DimensionMismatch("rollout: need at least one step");
  validate_state(model, x0);

  Trajectory traj;
  traj.mode = options.mode;
  traj.cfg = cfg;
  traj.checkpoints.reserve(n_t);
  traj.contact_counts.reserve(n_t);

  const auto t0 = Clock::now();
  SystemState state = x0;
  StepTape scratch;
  for (int k = 0; k < n_t; ++k) {
    Checkpoint ckpt;
    ckpt.q = state.q;
    ckpt.qdot = state.qdot;
    ckpt.u = controls.row(k).transpose();
    ckpt.step = k;
    traj.storage.checkpoint_bytes += ckpt.byte_size();
    traj.checkpoints.push_back(std::move(ckpt));

    StepTape* tape = &scratch;
    if (options.mode == StorageMode::full_tape) {
      traj.tapes.emplace_back();
      tape = &traj.tapes.back();
    }
    try {
      state = step_forward(model, state, ControlInput{controls.row(k).transpose()}, cfg, *tape);
    } catch (const NonFiniteState& e) {
      throw NonFiniteState("rollout: step " + std::to_string(k) + ": " + e.what());
    }
    traj.contact_counts.push_back(tape->contact_count());

    const size_t tape_bytes = tape->byte_size();
    if (options.mode == StorageMode::full_tape) {
      traj.storage.tape_total_bytes += tape_bytes;
      traj.storage.tape_peak_bytes = traj.storage.tape_total_bytes;
    } else {
      traj.storage.tape_total_bytes += tape_bytes;
      traj.storage.tape_peak_bytes = std::max(traj.storage.tape_peak_bytes, tape_bytes);
    }
    if (traj.storage.peak_aux_bytes() > options.tape_budget_bytes)
      throw MemoryBudgetExceeded("rollout: tape budget exceeded at step " + std::to_string(k) +
                                 " (" + std::to_string(traj.storage.peak_aux_bytes()) + " bytes)");
  }
  traj.final_state = state;
  traj.forward_ms_total = ms_since(t0);
  return traj;
}

std::vector<Trajectory> rollout_batch(const RobotModel& model, const std::vector<SystemState>& x0s,
                                      const std::vector<MatX>& controls, const StepConfig& cfg,
                                      const RolloutOptions& options) {
  if (x0s.size() != controls.size()) throw DimensionMismatch("rollout_batch: size mismatch");
  std::vector<std::future<Trajectory>> futures;
  futures.reserve(x0s.size());
  for (size_t i = 0; i < x0s.size(); ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      return rollout(model, x0s[i], controls[i], cfg, options);
    }));
  }
  std::vector<Trajectory> out;
  out.reserve(futures.size());
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

// --- objectives ---------------------------------------------------------------

ObjectiveSpec ObjectiveSpec::from_config(const RobotModel& model, const ObjectiveConfig& cfg) {
  ObjectiveSpec spec;
  spec.config = cfg;
  if (cfg.kind == "ee_target") spec.kind_ = Kind::ee_target;
  else if (cfg.kind == "progress") spec.kind_ = Kind::progress;
  else if (cfg.kind == "terminal_q") spec.kind_ = Kind::terminal_q;
  else throw ValidationError("objective: unknown kind '" + cfg.kind + "'");
  if (cfg.link < 0 || cfg.link >= static_cast<int>(model.links.size()))
    throw ValidationError("objective: link index out of range");
  if (spec.kind_ == Kind::terminal_q && cfg.q_weights.size() != model.n_q)
    throw ValidationError("objective: terminal_q needs n_q weights");
  return spec;
}

double ObjectiveSpec::masked_sq_dist(const RobotModel& model, const VecX& q) const {
  const Vec3 p = fk_point(model, q, config.link, config.point);
  const Vec3 d = (p - config.target).cwiseProduct(config.axis_mask);
  return config.weight * d.squaredNorm();
}

VecX ObjectiveSpec::masked_sq_dist_grad(const RobotModel& model, const VecX& q) const {
  const Vec3 p = fk_point(model, q, config.link, config.point);
  const Vec3 d = (p - config.target).cwiseProduct(config.axis_mask);
  const Vec3 p_bar = 2.0 * config.weight * d.cwiseProduct(config.axis_mask);
  return fk_point_vjp(model, q, config.link, config.point, p_bar);
}

ObjectiveSpec ObjectiveSpec::combine(double alpha, const ObjectiveSpec& a, double beta,
                                     const ObjectiveSpec& b) {
  ObjectiveSpec out = a;
  out.scale_ *= alpha;
  for (auto& t : out.extra_terms_) t.scale_ *= alpha;
  ObjectiveSpec bb = b;
  bb.scale_ *= beta;
  std::vector<ObjectiveSpec> b_extra = bb.extra_terms_;
  bb.extra_terms_.clear();
  out.extra_terms_.push_back(bb);
  for (auto& t : b_extra) {
    t.scale_ *= beta;
    out.extra_terms_.push_back(t);
  }
  return out;
}

double ObjectiveSpec::value(const RobotModel& model, const Trajectory& traj) const {
  double phi = scale_ * term_value(model, traj);
  for (const ObjectiveSpec& t : extra_terms_) phi += t.scale_ * t.term_value(model, traj);
  return phi;
}

void ObjectiveSpec::state_gradient(const RobotModel& model, const Trajectory& traj, int k,
                                   VecX& q_bar, VecX& v_bar) const {
  VecX qb = VecX::Zero(q_bar.size());
  VecX vb = VecX::Zero(v_bar.size());
  term_gradient(model, traj, k, qb, vb);
  q_bar += scale_ * qb;
  v_bar += scale_ * vb;
  for (const ObjectiveSpec& t : extra_terms_) {
    qb.setZero();
    vb.setZero();
    t.term_gradient(model, traj, k, qb, vb);
    q_bar += t.scale_ * qb;
    v_bar += t.scale_ * vb;
  }
}

double ObjectiveSpec::term_value(const RobotModel& model, const Trajectory& traj) const {
  const int n_t = traj.n_t();
  switch (kind_) {
    case Kind::ee_target: {
      if (config.terminal_only) return masked_sq_dist(model, traj.state_q(n_t));
      double phi = 0;
      for (int k = 1; k <= n_t; ++k) phi += masked_sq_dist(model, traj.state_q(k));
      return phi;
    }
    case Kind::progress: {
      double phi = 0;
      for (int k = 1; k <= n_t; ++k)
        phi += masked_sq_dist(model, traj.state_q(k)) - masked_sq_dist(model, traj.state_q(k - 1));
      return phi;
    }
    case Kind::terminal_q:
      return config.weight * config.q_weights.dot(traj.state_q(n_t));
  }
  return 0;
}

void ObjectiveSpec::term_gradient(const RobotModel& model, const Trajectory& traj, int k,
                                  VecX& q_bar, VecX& v_bar) const {
  (void)v_bar;  // all registered terms depend on positions only
  const int n_t = traj.n_t();
  switch (kind_) {
    case Kind::ee_target:
      if (config.terminal_only) {
        if (k == n_t) q_bar += masked_sq_dist_grad(model, traj.state_q(k));
      } else if (k >= 1) {
        q_bar += masked_sq_dist_grad(model, traj.state_q(k));
      }
      break;
    case Kind::progress: {
      // l_k = d2(x^k) - d2(x^{k-1}): x^k appears in l_k (+) and l_{k+1} (-).
      if (k >= 1) q_bar += masked_sq_dist_grad(model, traj.state_q(k));
      if (k < n_t) q_bar -= masked_sq_dist_grad(model, traj.state_q(k));
      break;
    }
    case Kind::terminal_q:
      if (k == n_t) q_bar += config.weight * config.q_weights;
      break;
  }
}

GradientReport backward(const RobotModel& model, const Trajectory& traj,
                        const ObjectiveSpec& objective, const ParamMask& mask) {
  const int n_t = traj.n_t();
  if (n_t == 0) throw IncompleteTrajectory("backward: empty trajectory");
  if (traj.mode == StorageMode::full_tape && static_cast<int>(traj.tapes.size()) != n_t)
    throw IncompleteTrajectory("backward: full-tape trajectory is missing tapes");

  GradientReport report;
  report.phi = objective.value(model, traj);
  report.dphi_du = MatX::Zero(n_t, model.n_u);
  report.dphi_dparams.resize(model);
  report.storage = traj.storage;
  report.forward_ms_per_step = traj.forward_ms_total / n_t;

  // R^{n_t} = dPhi/dx^{n_t}
  VecX R_q = VecX::Zero(model.n_q);
  VecX R_v = VecX::Zero(model.n_v);
  objective.state_gradient(model, traj, n_t, R_q, R_v);

  const auto t0 = Clock::now();
  StepTape scratch;
  size_t replay_peak = 0;
  for (int k = n_t; k >= 1; --k) {
    const Checkpoint& ckpt = traj.checkpoints[k - 1];
    const StepTape* tape;
    if (traj.mode == StorageMode::full_tape) {
      tape = &traj.tapes[k - 1];
    } else {
      // Z^k = G(x^{k-1}): reload the checkpoint and redo one forward step.
      step_forward(model, SystemState{ckpt.q, ckpt.qdot}, ControlInput{ckpt.u}, traj.cfg, scratch);
      replay_peak = std::max(replay_peak, scratch.byte_size());
      tape = &scratch;
    }
    const StepGrads g = step_adjoint(model, *tape, R_q, R_v, mask);
    report.dphi_du.row(k - 1) = g.u_bar.transpose();
    report.dphi_dparams += g.params;
    R_q = g.q_bar;
    R_v = g.qd_bar;
    objective.state_gradient(model, traj, k - 1, R_q, R_v);
  }
  report.backward_ms_per_step = ms_since(t0) / n_t;
  if (traj.mode == StorageMode::checkpoint_every_step)
    report.storage.tape_peak_bytes = std::max(report.storage.tape_peak_bytes, replay_peak);

  report.dphi_dx0 = tangent_from_ambient(
      model, SystemState{traj.checkpoints[0].q, traj.checkpoints[0].qdot}, R_q, R_v);
  return report;
}

CostPrediction predict_cost(double interval_k, double steps_n, double t_forward, double t_backward,
                            double m_checkpoint, double m_simulation) {
  if (interval_k <= 0 || steps_n <= 0 || t_forward < 0 || t_backward < 0 || m_checkpoint < 0 ||
      m_simulation < 0)
    throw DimensionMismatch("predict_cost: arguments must be positive");
  CostPrediction out;
  out.time_per_backward_step = (interval_k + 1.0) / 2.0 * t_forward + t_backward;
  out.peak_memory = steps_n / interval_k * m_checkpoint + m_simulation;
  return out;
}

void write_trajectory_csv(std::ostream& out, const RobotModel& model, const Trajectory& traj) {
  out << "step";
  for (int i = 0; i < model.n_q; ++i) out << ",q" << i;
  for (int i = 0; i < model.n_v; ++i) out << ",qd" << i;
  for (int i = 0; i < model.n_u; ++i) out << ",u" << i;
  out << ",contacts\n";
  char buf[32];
  auto emit = [&](double v) {
    snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (int k = 0; k < traj.n_t(); ++k) {
    out << k;
    const Checkpoint& c = traj.checkpoints[k];
    for (int i = 0; i < c.q.size(); ++i) emit(c.q[i]);
    for (int i = 0; i < c.qdot.size(); ++i) emit(c.qdot[i]);
    for (int i = 0; i < c.u.size(); ++i) emit(c.u[i]);
    out << ',' << traj.contact_counts[k] << "\n";
  }
  // terminal state row
  out << traj.n_t();
  for (int i = 0; i < traj.final_state.q.size(); ++i) emit(traj.final_state.q[i]);
  for (int i = 0; i < traj.final_state.qdot.size(); ++i) emit(traj.final_state.qdot[i]);
  for (int i = 0; i < model.n_u; ++i) out << ",0";
  out << ",0\n";
}

}  // namespace arti
