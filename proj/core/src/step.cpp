#include "arti/step.hpp"

namespace arti {

size_t StepTape::byte_size() const {
  size_t n = aba.byte_size() + contact.byte_size();
  n += (in.q.size() + in.qdot.size() + u_in.size() + v_free.size() + v_post.size()) * sizeof(double);
  n += sizeof(Quat) * 3 + sizeof(Mat3);
  return n;
}

SystemState step_forward(const RobotModel& model, const SystemState& state, const ControlInput& u,
                         const StepConfig& cfg, StepTape& tape) {
  tape.in = state;
  tape.u_in = u.u;
  tape.cfg = cfg;

  const VecX qdd = aba_forward(model, state, u, tape.aba);
  tape.v_free = state.qdot + cfg.dt * qdd;
  tape.v_post = contact_stage(model, state, tape.aba, tape.v_free, cfg.contact_config(), tape.contact);

  SystemState out;
  out.qdot = tape.v_post;
  out.q = state.q;
  const VecX& v_used =
      cfg.integrator == Integrator::explicit_euler ? state.qdot : tape.v_post;

  for (size_t i = 0; i < model.links.size(); ++i) {
    const JointKind kind = model.links[i].joint.kind;
    const int qo = model.q_off[i];
    const int vo = model.v_off[i];
    if (kind == JointKind::floating_base) {
      const Quat raw(state.q[qo], state.q[qo + 1], state.q[qo + 2], state.q[qo + 3]);
      tape.qn = quat_normalize(raw);
      tape.Rn = quat_to_matrix(tape.qn);
      const Vec3 w_used = v_used.segment<3>(vo);
      const Vec3 vl_used = v_used.segment<3>(vo + 3);
      tape.dq = quat_mul_qt(tape.qn, Quat(0.5 * cfg.dt * w_used.x(), 0.5 * cfg.dt * w_used.y(),
                                          0.5 * cfg.dt * w_used.z(), 0.0));
      tape.qsum = tape.qn + tape.dq;
      const Quat qout = quat_normalize(tape.qsum);
      out.q[qo] = qout.x;
      out.q[qo + 1] = qout.y;
      out.q[qo + 2] = qout.z;
      out.q[qo + 3] = qout.w;
      out.q.segment<3>(qo + 4) = state.q.segment<3>(qo + 4) + cfg.dt * (tape.Rn * vl_used);
    } else if (kind != JointKind::fixed) {
      out.q[qo] = state.q[qo] + cfg.dt * v_used[vo];
    }
  }
  if (!finite(out.q) || !finite(out.qdot))
    throw NonFiniteState("step_forward: non-finite state after integration");
  return out;
}

StepGrads step_adjoint(const RobotModel& model, const StepTape& tape, const VecX& q_out_bar,
                       const VecX& v_out_bar, const ParamMask& mask) {
  if (q_out_bar.size() != model.n_q || v_out_bar.size() != model.n_v)
    throw TapeMismatch("step_adjoint: bad seed sizes");
  if (static_cast<int>(tape.aba.body.size()) != static_cast<int>(model.links.size()))
    throw TapeMismatch("step_adjoint: tape does not match model");
  const StepConfig& cfg = tape.cfg;

  AbaAdjointWorkspace ws;
  ws.reset(model);

  // --- integration backward -------------------------------------------------
  VecX v_used_bar = VecX::Zero(model.n_v);
  for (size_t i = 0; i < model.links.size(); ++i) {
    const JointKind kind = model.links[i].joint.kind;
    const int qo = model.q_off[i];
    const int vo = model.v_off[i];
    if (kind == JointKind::floating_base) {
      const VecX& v_used =
          cfg.integrator == Integrator::explicit_euler ? tape.in.qdot : tape.v_post;
      const Vec3 vl_used = v_used.segment<3>(vo + 3);
      // pos' = pos + dt Rn vl
      const Vec3 pb = q_out_bar.segment<3>(qo + 4);
      ws.q_bar_ambient.segment<3>(qo + 4) += pb;
      v_used_bar.segment<3>(vo + 3) += cfg.dt * (tape.Rn.transpose() * pb);
      Mat3 Rn_bar = cfg.dt * pb * vl_used.transpose();
      // quat' = normalize(qn + dq)
      const Quat qout_bar(q_out_bar[qo], q_out_bar[qo + 1], q_out_bar[qo + 2], q_out_bar[qo + 3]);
      const Quat qsum_bar = quat_normalize_adjoint(tape.qsum, qout_bar);
      Quat qn_bar = qsum_bar;
      // dq = mul_qt(qn, wq), wq = (dt/2 w, 0)
      const Vec3 w_used = v_used.segment<3>(vo);
      const Quat wq(0.5 * cfg.dt * w_used.x(), 0.5 * cfg.dt * w_used.y(),
                    0.5 * cfg.dt * w_used.z(), 0.0);
      const QuatPairGrad gq = quat_mul_qt_adjoint(tape.qn, wq, qsum_bar);
      qn_bar += gq.q1;
      v_used_bar.segment<3>(vo) += 0.5 * cfg.dt * Vec3(gq.q2.x, gq.q2.y, gq.q2.z);
      // Rn = to_matrix(qn)
      qn_bar += quat_to_matrix_adjoint(tape.qn, Rn_bar);
      // qn = normalize(q_in)
      const Quat raw(tape.in.q[qo], tape.in.q[qo + 1], tape.in.q[qo + 2], tape.in.q[qo + 3]);
      const Quat raw_bar = quat_normalize_adjoint(raw, qn_bar);
      ws.q_bar_ambient[qo] += raw_bar.x;
      ws.q_bar_ambient[qo + 1] += raw_bar.y;
      ws.q_bar_ambient[qo + 2] += raw_bar.z;
      ws.q_bar_ambient[qo + 3] += raw_bar.w;
    } else if (kind != JointKind::fixed) {
      ws.q_bar_ambient[qo] += q_out_bar[qo];
      v_used_bar[vo] += cfg.dt * q_out_bar[qo];
    }
  }

  VecX vpost_bar = v_out_bar;
  if (cfg.integrator == Integrator::explicit_euler) {
    ws.qd_bar += v_used_bar;
  } else {
    vpost_bar += v_used_bar;
  }

  // --- contact backward -------------------------------------------------------
  VecX v_free_bar;
  if (tape.contact.geom.empty()) {
    v_free_bar = vpost_bar;
  } else {
    v_free_bar = contact_stage_backward(model, tape.in, tape.aba, tape.contact, tape.v_free,
                                        cfg.contact_config(), vpost_bar, mask, ws);
  }

  // --- v_free = qdot + dt qdd --------------------------------------------------
  ws.qd_bar += v_free_bar;
  const VecX qdd_bar = cfg.dt * v_free_bar;
  for (size_t i = 0; i < model.links.size(); ++i) {
    const JointKind kind = model.links[i].joint.kind;
    const int vo = model.v_off[i];
    if (kind == JointKind::floating_base) {
      ws.qdd6_bar += SpatialVec(qdd_bar.segment<3>(vo), qdd_bar.segment<3>(vo + 3));
    } else if (kind != JointKind::fixed) {
      ws.qdd_bar[i] += qdd_bar[vo];
    }
  }

  aba_backward(model, tape.aba, mask, ws);

  StepGrads out;
  out.q_bar = ws.q_bar_ambient;
  out.qd_bar = ws.qd_bar;
  out.u_bar = ws.tau_bar;
  out.params = ws.params;
  return out;
}

std::pair<VecX, StepTape> aba_forward(const RobotModel& model, const SystemState& state,
                                      const ControlInput& u) {
  StepTape tape;
  const VecX qdd = aba_forward(model, state, u, tape.aba);
  tape.in = state;
  tape.u_in = u.u;
  return {qdd, std::move(tape)};
}

DynamicsDerivatives aba_adjoint(const RobotModel& model, const SystemState& state,
                                const ControlInput& u, const StepTape& tape, const VecX& qdd_bar,
                                const ParamMask& mask) {
  return aba_adjoint(model, state, u, tape.aba, qdd_bar, mask);
}

MlcpProblem build_mlcp(const RobotModel& model, const SystemState& state, StepTape& tape,
                       const std::vector<ContactPoint>& contacts, double dt) {
  if (tape.aba.body.size() != model.links.size())
    throw TapeMismatch("build_mlcp: run aba_forward on this tape first");
  std::vector<SpatialTransform> W(model.links.size());
  for (size_t i = 0; i < W.size(); ++i) W[i] = tape.aba.body[i].W;
  tape.cfg.dt = dt;
  ContactStageConfig ccfg = tape.cfg.contact_config();
  tape.contact.geom = detect_geoms(model, W, ccfg.margin);
  if (tape.contact.geom.size() != contacts.size())
    throw TapeMismatch("build_mlcp: contacts do not match the state");
  if (tape.v_free.size() != model.n_v) tape.v_free = state.qdot + dt * tape.aba.qdd;
  contact_assemble(model, state, tape.aba, tape.v_free, ccfg, tape.contact);
  return tape.contact.mlcp;
}

VecX apply_impulses(const RobotModel& model, const SystemState& state, const StepTape& tape,
                    const VecX& x) {
  (void)state;
  if (tape.contact.J.rows() == 0) {
    if (x.size() != 0) throw DimensionMismatch("apply_impulses: no contact system in tape");
    return tape.v_free;
  }
  if (x.size() != tape.contact.J.rows())
    throw DimensionMismatch("apply_impulses: impulse size does not match contact rows");
  if (tape.v_free.size() != model.n_v) throw TapeMismatch("apply_impulses: tape missing v_free");
  return tape.v_free + tape.contact.Minv * (tape.contact.J.transpose() * x);
}

}  // namespace arti
