#pragma once

#include "arti/contact.hpp"
#include "arti/dynamics.hpp"
#include "arti/scene.hpp"

// One simulation step: forward dynamics, contact resolution, explicit or
// symplectic Euler integration. The StepTape holds every intermediate the
// backward pass needs; it is regenerated bitwise-identically by replaying the
// step from its checkpoint (q, qdot, u).

namespace arti {

struct StepConfig {
  double dt = 0.01;
  Integrator integrator = Integrator::symplectic_euler;
  int pgs_iters = 50;
  double baumgarte = 0.2;
  double margin = 1e-4;

  static StepConfig from(const SimParams& sim) {
    return {sim.dt, sim.integrator, sim.pgs_iters, sim.baumgarte, sim.margin};
  }
  ContactStageConfig contact_config() const {
    return {dt, pgs_iters, baumgarte, margin, 1e-10};
  }
};

struct StepTape {
  SystemState in;
  VecX u_in;
  AbaTape aba;
  VecX v_free;
  ContactTape contact;
  VecX v_post;
  // floating-base integration intermediates
  Quat qn, dq, qsum;
  Mat3 Rn = Mat3::Identity();
  StepConfig cfg;
  size_t byte_size() const;
  int contact_count() const { return static_cast<int>(contact.contacts.size()); }
  // True when both tapes saw the same contact rows and clamp pattern; gradient
  // checks resample probes for which this differs (nonsmooth points).
  bool record_clamp_equal(const StepTape& other) const {
    return contact.record.clamp_mask.rows() == other.contact.record.clamp_mask.rows() &&
           contact.record.clamp_mask.cols() == other.contact.record.clamp_mask.cols() &&
           (contact.record.clamp_mask.array() == other.contact.record.clamp_mask.array()).all();
  }
};

struct StepGrads {
  VecX q_bar;   // ambient, n_q
  VecX qd_bar;  // n_v
  VecX u_bar;   // n_u
  ParamGrads params;
};

SystemState step_forward(const RobotModel& model, const SystemState& state, const ControlInput& u,
                         const StepConfig& cfg, StepTape& tape);

// Reverse of step_forward: seeds are the adjoints of the output state
// (ambient q block of size n_q, velocity block of size n_v).
StepGrads step_adjoint(const RobotModel& model, const StepTape& tape, const VecX& q_out_bar,
                       const VecX& v_out_bar, const ParamMask& mask = {});

// Convenience wrappers exposing the ABA stage on a full step tape.
std::pair<VecX, StepTape> aba_forward(const RobotModel& model, const SystemState& state,
                                      const ControlInput& u);
DynamicsDerivatives aba_adjoint(const RobotModel& model, const SystemState& state,
                                const ControlInput& u, const StepTape& tape, const VecX& qdd_bar,
                                const ParamMask& mask = {});

// build_mlcp / apply_impulses operating on a step tape (contact stage pieces).
MlcpProblem build_mlcp(const RobotModel& model, const SystemState& state, StepTape& tape,
                       const std::vector<ContactPoint>& contacts, double dt);
VecX apply_impulses(const RobotModel& model, const SystemState& state, const StepTape& tape,
                    const VecX& x);

}  // namespace arti
