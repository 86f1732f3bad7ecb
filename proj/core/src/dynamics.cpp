#include "arti/dynamics.hpp"

namespace arti {

namespace {

double inner(const SpatialDyad& a, const SpatialDyad& b) {
  return (a.m11.array() * b.m11.array()).sum() + (a.m12.array() * b.m12.array()).sum() +
         (a.m21.array() * b.m21.array()).sum() + (a.m22.array() * b.m22.array()).sum();
}

SpatialVec base_vj(const VecX& qdot, int vo) {
  return SpatialVec(qdot.segment<3>(vo), qdot.segment<3>(vo + 3), VecKind::motion);
}

}  // namespace

ParamGrads& ParamGrads::operator+=(const ParamGrads& o) {
  mass += o.mass;
  damping += o.damping;
  for (size_t i = 0; i < com.size(); ++i) com[i] += o.com[i];
  for (size_t i = 0; i < inertia.size(); ++i) inertia[i] += o.inertia[i];
  mu += o.mu;
  restitution += o.restitution;
  return *this;
}

ParamGrads& ParamGrads::operator*=(double s) {
  mass *= s;
  damping *= s;
  for (auto& c : com) c *= s;
  for (auto& m : inertia) m *= s;
  mu *= s;
  restitution *= s;
  return *this;
}

size_t AbaTape::byte_size() const {
  return body.size() * sizeof(AbaBody) + qdd.size() * sizeof(double);
}

size_t CrbaTape::byte_size() const {
  size_t n = Ic.size() * sizeof(SpatialDyad) + M.size() * sizeof(double);
  for (const auto& chain : fchain) n += chain.size() * sizeof(SpatialVec);
  return n;
}

SpatialDyad rigid_inertia(double mass, const Vec3& com, const Mat3& inertia_com) {
  const Mat3 C = cross_matrix(com);
  SpatialDyad I;
  I.m11 = inertia_com + mass * C * C.transpose();
  I.m12 = mass * C;
  I.m21 = mass * C.transpose();
  I.m22 = mass * Mat3::Identity();
  return I;
}

RigidInertiaGrad rigid_inertia_adjoint(double mass, const Vec3& com, const Mat3& inertia_com,
                                       const SpatialDyad& I_bar) {
  (void)inertia_com;
  const Mat3 C = cross_matrix(com);
  RigidInertiaGrad g;
  g.inertia = I_bar.m11;
  g.mass = (I_bar.m11.array() * (C * C.transpose()).array()).sum() +
           (I_bar.m12.array() * C.array()).sum() +
           (I_bar.m21.array() * C.transpose().array()).sum() + I_bar.m22.trace();
  Mat3 C_bar = mass * (I_bar.m11 * C + I_bar.m11.transpose() * C);
  C_bar += mass * I_bar.m12;
  C_bar += mass * I_bar.m21.transpose();
  g.com = vcross_matrix_adjoint(C_bar);
  return g;
}

VecX aba_forward(const RobotModel& model, const SystemState& state, const ControlInput& u,
                 AbaTape& tape) {
  validate_state(model, state);
  if (u.u.size() != model.n_u) throw DimensionMismatch("aba_forward: control size != n_u");
  if (!finite(u.u)) throw NonFiniteState("aba_forward: non-finite control");

  const int n = static_cast<int>(model.links.size());
  tape.body.assign(n, AbaBody{});
  tape.qdd = VecX::Zero(model.n_v);
  // Gravity enters as a fictitious world acceleration opposite to g.
  const SpatialVec a_world(Vec3::Zero(), -model.gravity, VecKind::motion);

  // Pass (a): kinematics, velocities, bias forces, root -> leaves.
  for (int i = 0; i < n; ++i) {
    const LinkSpec& link = model.links[i];
    AbaBody& b = tape.body[i];
    const int par = link.parent;
    const int vo = model.v_off[i];

    switch (link.joint.kind) {
      case JointKind::floating_base:
        b.q7 = state.q.segment<7>(model.q_off[i]);
        b.Xj = base_transform(b.q7);
        b.vJ = base_vj(state.qdot, vo);
        break;
      case JointKind::fixed:
        b.Xj = SpatialTransform::identity();
        b.S = SpatialVec::zero();
        b.vJ = SpatialVec::zero();
        break;
      default: {
        b.q = state.q[model.q_off[i]];
        b.qd = state.qdot[vo];
        const JointXS js = joint_xs(link.joint, b.q);
        b.Xj = js.X;
        b.S = js.S;
        b.vJ = b.S * b.qd;
        break;
      }
    }
    b.Xup = st_multiply(b.Xj, link.joint.parent_to_joint);
    b.W = par == -1 ? b.Xup : st_multiply(b.Xup, tape.body[par].W);
    b.xv = par == -1 ? SpatialVec::zero() : st_apply(StMode::apply, b.Xup, tape.body[par].v);
    b.v = b.xv + b.vJ;
    b.c = crossm(b.v, b.vJ);
    b.I = rigid_inertia(link.mass, link.com, link.inertia);
    b.h = mul_ori(b.I, b.v);
    b.pA = crossf(b.v, b.h);
    b.IA = b.I;
    if (!finite(b.v) || !finite(b.pA))
      throw NonFiniteState("aba_forward: non-finite value in pass 1 at link " + std::to_string(i));
  }

  // Pass (b): articulated inertias and bias forces, leaves -> root.
  for (int i = n - 1; i >= 0; --i) {
    const LinkSpec& link = model.links[i];
    AbaBody& b = tape.body[i];
    const int par = link.parent;

    if (link.joint.kind == JointKind::floating_base) {
      b.Dinv6 = dyad_inverse(b.IA);
      b.u6 = b.pA * -1.0;
    } else if (link.joint.kind == JointKind::fixed) {
      if (par != -1) {
        b.Ia = b.IA;
        b.tmp_Iac = mul_ori(b.Ia, b.c);
        b.pa = b.pA + b.tmp_Iac;
        b.IAshift = shift(b.Ia, b.Xup);
        tape.body[par].IA += b.IAshift;
        b.paX = st_apply(StMode::apply_trans, b.Xup, b.pa);
        tape.body[par].pA += b.paX;
      }
    } else {
      const int vo = model.v_off[i];
      b.U = mul_ori(b.IA, b.S);
      b.D = b.S.dot(b.U);
      if (!(b.D > 1e-12))
        throw SingularMassMatrix("aba_forward: degenerate articulated projection at link " +
                                 std::to_string(i));
      b.Dinv = 1.0 / b.D;
      const double tau = model.u_index[i] >= 0 ? u.u[model.u_index[i]] : 0.0;
      b.u = tau - link.joint.damping * state.qdot[vo] - b.S.dot(b.pA);
      if (par != -1) {
        b.Ia = b.IA - vvT(b.U, b.U) * b.Dinv;
        b.tmp_Iac = mul_ori(b.Ia, b.c);
        b.pa = b.pA + b.tmp_Iac + b.U * (b.u * b.Dinv);
        b.IAshift = shift(b.Ia, b.Xup);
        tape.body[par].IA += b.IAshift;
        b.paX = st_apply(StMode::apply_trans, b.Xup, b.pa);
        tape.body[par].pA += b.paX;
      }
    }
    if (!finite(b.pA) || !finite(b.IA))
      throw NonFiniteState("aba_forward: non-finite value in pass 2 at link " + std::to_string(i));
  }

  // Pass (c): accelerations, root -> leaves.
  for (int i = 0; i < n; ++i) {
    const LinkSpec& link = model.links[i];
    AbaBody& b = tape.body[i];
    const int par = link.parent;
    const int vo = model.v_off[i];
    const SpatialVec& a_par = par == -1 ? a_world : tape.body[par].a;
    b.ap = st_apply(StMode::apply, b.Xup, a_par) + b.c;

    if (link.joint.kind == JointKind::floating_base) {
      b.f6 = b.u6 - mul_ori(b.IA, b.ap);
      const SpatialVec qdd6 = mul_ori(b.Dinv6, b.f6);
      tape.qdd.segment<3>(vo) = qdd6.w;
      tape.qdd.segment<3>(vo + 3) = qdd6.v;
      b.a = b.ap + qdd6;
    } else if (link.joint.kind == JointKind::fixed) {
      b.a = b.ap;
    } else {
      b.qdd = b.Dinv * (b.u - b.U.dot(b.ap));
      tape.qdd[vo] = b.qdd;
      b.a = b.ap + b.S * b.qdd;
    }
    if (!finite(b.a))
      throw NonFiniteState("aba_forward: non-finite value in pass 3 at link " + std::to_string(i));
  }
  return tape.qdd;
}

void AbaAdjointWorkspace::reset(const RobotModel& model) {
  const size_t n = model.links.size();
  a_bar.assign(n, SpatialVec::zero());
  ap_bar.assign(n, SpatialVec::zero());
  c_bar.assign(n, SpatialVec::zero());
  v_bar.assign(n, SpatialVec::zero());
  vJ_bar.assign(n, SpatialVec::zero());
  xv_bar.assign(n, SpatialVec::zero());
  h_bar.assign(n, SpatialVec::zero());
  pA_bar.assign(n, SpatialVec::zero());
  pa_bar.assign(n, SpatialVec::zero());
  U_bar.assign(n, SpatialVec::zero());
  IA_bar.assign(n, SpatialDyad::zero());
  Ia_bar.assign(n, SpatialDyad::zero());
  I_bar.assign(n, SpatialDyad::zero());
  Xup_bar.assign(n, TransformGrad{});
  W_bar.assign(n, TransformGrad{});
  u_bar.assign(n, 0.0);
  D_bar.assign(n, 0.0);
  qdd_bar.assign(n, 0.0);
  Dinv6_bar = SpatialDyad::zero();
  u6_bar = SpatialVec::zero();
  f6_bar = SpatialVec::zero();
  qdd6_bar = SpatialVec::zero();
  q_bar_ambient = VecX::Zero(model.n_q);
  qd_bar = VecX::Zero(model.n_v);
  tau_bar = VecX::Zero(model.n_u);
  params.resize(model);
}

void aba_backward(const RobotModel& model, const AbaTape& tape, const ParamMask& mask,
                  AbaAdjointWorkspace& ws) {
  const int n = static_cast<int>(model.links.size());
  if (static_cast<int>(tape.body.size()) != n)
    throw TapeMismatch("aba_backward: tape does not match model");
  const SpatialVec a_world(Vec3::Zero(), -model.gravity, VecKind::motion);

  // Reverse of pass (c), leaves -> root.
  for (int i = n - 1; i >= 0; --i) {
    const LinkSpec& link = model.links[i];
    const AbaBody& b = tape.body[i];
    const int par = link.parent;

    if (link.joint.kind == JointKind::floating_base) {
      // a = ap + qdd6
      ws.ap_bar[i] += ws.a_bar[i];
      ws.qdd6_bar += ws.a_bar[i];
      // qdd6 = mul_ori(Dinv6, f6)
      {
        const DyadVecGrad g = mul_ori_adjoint(b.Dinv6, b.f6, ws.qdd6_bar);
        ws.Dinv6_bar += g.m;
        ws.f6_bar += g.a;
      }
      // f6 = u6 - mul_ori(IA, ap)
      ws.u6_bar += ws.f6_bar;
      {
        const DyadVecGrad g = mul_ori_adjoint(b.IA, b.ap, ws.f6_bar * -1.0);
        ws.IA_bar[i] += g.m;
        ws.ap_bar[i] += g.a;
      }
    } else if (link.joint.kind == JointKind::fixed) {
      ws.ap_bar[i] += ws.a_bar[i];
    } else {
      // a = ap + S qdd
      ws.ap_bar[i] += ws.a_bar[i];
      ws.qdd_bar[i] += b.S.dot(ws.a_bar[i]);
      // qdd = Dinv (u - U . ap)
      const double s = ws.qdd_bar[i];
      ws.u_bar[i] += s * b.Dinv;
      ws.U_bar[i] += b.ap * (-s * b.Dinv);
      ws.ap_bar[i] += b.U * (-s * b.Dinv);
      ws.D_bar[i] += -s * b.qdd * b.Dinv;
    }
    // ap = apply(Xup, a_par) + c
    ws.c_bar[i] += ws.ap_bar[i];
    const SpatialVec& a_par = par == -1 ? a_world : tape.body[par].a;
    const StApplyGrad g = st_apply_adjoint(StMode::apply, b.Xup, a_par, ws.ap_bar[i]);
    ws.Xup_bar[i] += g.X;
    if (par != -1) ws.a_bar[par] += g.a;
  }

  // Reverse of pass (b): forward ran leaves -> root, so the adjoint walks
  // root -> leaves. Parent adjoints (pA_bar, IA_bar) are complete by the time
  // a child reads them because the parent's own statements were processed at
  // an earlier iteration.
  for (int i = 0; i < n; ++i) {
    const LinkSpec& link = model.links[i];
    const AbaBody& b = tape.body[i];
    const int par = link.parent;
    const int vo = model.v_off[i];

    if (link.joint.kind == JointKind::floating_base) {
      // u6 = -pA ; Dinv6 = dyad_inverse(IA)
      ws.pA_bar[i] += ws.u6_bar * -1.0;
      ws.IA_bar[i] += dyad_inverse_adjoint(b.Dinv6, ws.Dinv6_bar);
      continue;
    }

    const bool one_dof = link.joint.kind != JointKind::fixed;
    if (par != -1) {
      // pA_par += apply_trans(Xup, pa)
      {
        const StApplyGrad g = st_apply_adjoint(StMode::apply_trans, b.Xup, b.pa, ws.pA_bar[par]);
        ws.Xup_bar[i] += g.X;
        ws.pa_bar[i] += g.a;
      }
      // IA_par += shift(Ia, Xup)
      {
        const ShiftGrad g = shift_adjoint(b.Ia, b.Xup, ws.IA_bar[par]);
        ws.Ia_bar[i] += g.b;
        ws.Xup_bar[i] += g.X;
      }
      // pa = pA + mul_ori(Ia, c) [+ U (u Dinv)]
      ws.pA_bar[i] += ws.pa_bar[i];
      {
        const DyadVecGrad g = mul_ori_adjoint(b.Ia, b.c, ws.pa_bar[i]);
        ws.Ia_bar[i] += g.m;
        ws.c_bar[i] += g.a;
      }
      if (one_dof) {
        ws.U_bar[i] += ws.pa_bar[i] * (b.u * b.Dinv);
        const double s_bar = b.U.dot(ws.pa_bar[i]);
        ws.u_bar[i] += s_bar * b.Dinv;
        ws.D_bar[i] += -s_bar * b.u * b.Dinv * b.Dinv;
        // Ia = IA - vvT(U, U) Dinv
        ws.IA_bar[i] += ws.Ia_bar[i];
        const PairGrad g = vvT_adjoint(b.U, b.U, ws.Ia_bar[i] * (-b.Dinv));
        ws.U_bar[i] += g.a + g.b;
        ws.D_bar[i] += inner(ws.Ia_bar[i], vvT(b.U, b.U)) * b.Dinv * b.Dinv;
      } else {
        // fixed joint: Ia = IA
        ws.IA_bar[i] += ws.Ia_bar[i];
      }
    }
    if (one_dof) {
      // u = tau - damping qd - S . pA
      if (model.u_index[i] >= 0) ws.tau_bar[model.u_index[i]] += ws.u_bar[i];
      ws.qd_bar[vo] += -link.joint.damping * ws.u_bar[i];
      if (mask.damping) ws.params.damping[i] += -b.qd * ws.u_bar[i];
      ws.pA_bar[i] += b.S * (-ws.u_bar[i]);
      // D = S . U
      ws.U_bar[i] += b.S * ws.D_bar[i];
      // U = mul_ori(IA, S)
      const DyadVecGrad g = mul_ori_adjoint(b.IA, b.S, ws.U_bar[i]);
      ws.IA_bar[i] += g.m;
    }
  }

  // Reverse of pass (a), leaves -> root.
  for (int i = n - 1; i >= 0; --i) {
    const LinkSpec& link = model.links[i];
    const AbaBody& b = tape.body[i];
    const int par = link.parent;
    const int vo = model.v_off[i];
    const int qo = model.q_off[i];

    // W = par == -1 ? Xup : multiply(Xup, W_par)
    if (par == -1) {
      ws.Xup_bar[i] += ws.W_bar[i];
    } else {
      const StMultiplyGrad g = st_multiply_adjoint(b.Xup, tape.body[par].W, ws.W_bar[i]);
      ws.Xup_bar[i] += g.X1;
      ws.W_bar[par] += g.X2;
    }
    // pA = crossf(v, h)
    {
      const PairGrad g = crossf_adjoint(b.v, b.h, ws.pA_bar[i]);
      ws.v_bar[i] += g.a;
      ws.h_bar[i] += g.b;
    }
    // IA = I
    ws.I_bar[i] += ws.IA_bar[i];
    // h = mul_ori(I, v)
    {
      const DyadVecGrad g = mul_ori_adjoint(b.I, b.v, ws.h_bar[i]);
      ws.I_bar[i] += g.m;
      ws.v_bar[i] += g.a;
    }
    // I = rigid_inertia(mass, com, inertia)
    if (mask.any_inertial()) {
      const RigidInertiaGrad g = rigid_inertia_adjoint(link.mass, link.com, link.inertia, ws.I_bar[i]);
      if (mask.mass) ws.params.mass[i] += g.mass;
      if (mask.com) ws.params.com[i] += g.com;
      if (mask.inertia) ws.params.inertia[i] += g.inertia;
    }
    // c = crossm(v, vJ)
    {
      const PairGrad g = crossm_adjoint(b.v, b.vJ, ws.c_bar[i]);
      ws.v_bar[i] += g.a;
      ws.vJ_bar[i] += g.b;
    }
    // v = xv + vJ
    ws.xv_bar[i] += ws.v_bar[i];
    ws.vJ_bar[i] += ws.v_bar[i];
    // vJ
    if (link.joint.kind == JointKind::floating_base) {
      ws.qd_bar.segment<3>(vo) += ws.vJ_bar[i].w;
      ws.qd_bar.segment<3>(vo + 3) += ws.vJ_bar[i].v;
    } else if (link.joint.kind != JointKind::fixed) {
      ws.qd_bar[vo] += b.S.dot(ws.vJ_bar[i]);
    }
    // xv = apply(Xup, v_par)
    if (par != -1) {
      const StApplyGrad g = st_apply_adjoint(StMode::apply, b.Xup, tape.body[par].v, ws.xv_bar[i]);
      ws.Xup_bar[i] += g.X;
      ws.v_bar[par] += g.a;
    }
    // Xup = multiply(Xj, parent_to_joint)
    const StMultiplyGrad g = st_multiply_adjoint(b.Xj, link.joint.parent_to_joint, ws.Xup_bar[i]);
    if (link.joint.kind == JointKind::floating_base) {
      ws.q_bar_ambient.segment<7>(qo) += base_transform_vjp(b.q7, g.X1);
    } else if (link.joint.kind != JointKind::fixed) {
      ws.q_bar_ambient[qo] += joint_xs_vjp(link.joint, b.q, g.X1);
    }
  }
}

DynamicsDerivatives aba_adjoint(const RobotModel& model, const SystemState& state,
                                const ControlInput& u, const AbaTape& tape, const VecX& qdd_bar,
                                const ParamMask& mask) {
  (void)u;
  if (qdd_bar.size() != model.n_v) throw DimensionMismatch("aba_adjoint: bad seed size");
  if (static_cast<int>(tape.body.size()) != static_cast<int>(model.links.size()))
    throw TapeMismatch("aba_adjoint: tape does not match model");

  AbaAdjointWorkspace ws;
  ws.reset(model);
  for (size_t i = 0; i < model.links.size(); ++i) {
    const JointKind kind = model.links[i].joint.kind;
    const int vo = model.v_off[i];
    if (kind == JointKind::floating_base) {
      ws.qdd6_bar = SpatialVec(qdd_bar.segment<3>(vo), qdd_bar.segment<3>(vo + 3));
    } else if (kind != JointKind::fixed) {
      ws.qdd_bar[i] = qdd_bar[vo];
    }
  }
  aba_backward(model, tape, mask, ws);

  DynamicsDerivatives out;
  out.q_bar_ambient = ws.q_bar_ambient;
  const VecX tangent = tangent_from_ambient(model, state, ws.q_bar_ambient, ws.qd_bar);
  out.q_bar = tangent.head(model.n_v);
  out.qdot_bar = ws.qd_bar;
  out.u_bar = ws.tau_bar;
  out.params = ws.params;
  return out;
}

void crba(const RobotModel& model, const AbaTape& aba_tape, CrbaTape& tape) {
  const int n = static_cast<int>(model.links.size());
  tape.Ic.resize(n);
  tape.fchain.assign(n, {});
  for (int i = 0; i < n; ++i) tape.Ic[i] = aba_tape.body[i].I;
  for (int i = n - 1; i >= 0; --i) {
    const int par = model.links[i].parent;
    if (par != -1) tape.Ic[par] += shift(tape.Ic[i], aba_tape.body[i].Xup);
  }

  tape.M = MatX::Zero(model.n_v, model.n_v);
  for (int i = 0; i < n; ++i) {
    const JointKind kind = model.links[i].joint.kind;
    const int vi = model.v_off[i];
    if (kind == JointKind::floating_base) {
      tape.M.block<6, 6>(vi, vi) = tape.Ic[i].to66();
    } else if (kind != JointKind::fixed) {
      SpatialVec F = mul_ori(tape.Ic[i], aba_tape.body[i].S);
      tape.fchain[i].push_back(F);
      tape.M(vi, vi) = aba_tape.body[i].S.dot(F);
      int j = i;
      while (model.links[j].parent != -1) {
        F = st_apply(StMode::apply_trans, aba_tape.body[j].Xup, F);
        j = model.links[j].parent;
        tape.fchain[i].push_back(F);
        const JointKind kj = model.links[j].joint.kind;
        const int vj = model.v_off[j];
        if (kj == JointKind::floating_base) {
          tape.M.block<1, 3>(vi, vj) = F.w.transpose();
          tape.M.block<1, 3>(vi, vj + 3) = F.v.transpose();
          tape.M.block<3, 1>(vj, vi) = F.w;
          tape.M.block<3, 1>(vj + 3, vi) = F.v;
        } else if (kj != JointKind::fixed) {
          const double mij = F.dot(aba_tape.body[j].S);
          tape.M(vi, vj) = mij;
          tape.M(vj, vi) = mij;
        }
      }
    }
  }
}

void crba_backward(const RobotModel& model, const AbaTape& aba_tape, const CrbaTape& tape,
                   const MatX& M_bar, const ParamMask& mask, AbaAdjointWorkspace& ws) {
  (void)mask;
  const int n = static_cast<int>(model.links.size());
  std::vector<SpatialDyad> Ic_bar(n, SpatialDyad::zero());

  // Mass-matrix rows (reverse of the chain walks).
  for (int i = 0; i < n; ++i) {
    const JointKind kind = model.links[i].joint.kind;
    const int vi = model.v_off[i];
    if (kind == JointKind::floating_base) {
      Mat6 blk = M_bar.block<6, 6>(vi, vi);
      Ic_bar[i] += SpatialDyad::from66(blk);
    } else if (kind != JointKind::fixed) {
      // Recollect the ancestor walk to know which row/col each level touched.
      std::vector<int> js;
      int j = i;
      while (model.links[j].parent != -1) {
        j = model.links[j].parent;
        js.push_back(j);
      }
      const int levels = static_cast<int>(js.size());
      SpatialVec F_bar = SpatialVec::zero();
      for (int k = levels; k >= 1; --k) {
        const int body_j = js[k - 1];
        const JointKind kj = model.links[body_j].joint.kind;
        const int vj = model.v_off[body_j];
        if (kj == JointKind::floating_base) {
          F_bar.w += M_bar.block<1, 3>(vi, vj).transpose() + M_bar.block<3, 1>(vj, vi);
          F_bar.v += M_bar.block<1, 3>(vi, vj + 3).transpose() + M_bar.block<3, 1>(vj + 3, vi);
        } else if (kj != JointKind::fixed) {
          F_bar += aba_tape.body[body_j].S * (M_bar(vi, vj) + M_bar(vj, vi));
        }
        // F_k = apply_trans(Xup of walked body, F_{k-1}); the walked body at
        // level k is the one *below* js[k-1] in the chain.
        const int walked = k == 1 ? i : js[k - 2];
        const StApplyGrad g = st_apply_adjoint(StMode::apply_trans, aba_tape.body[walked].Xup,
                                               tape.fchain[i][k - 1], F_bar);
        ws.Xup_bar[walked] += g.X;
        F_bar = g.a;
      }
      F_bar += aba_tape.body[i].S * M_bar(vi, vi);
      const DyadVecGrad g = mul_ori_adjoint(tape.Ic[i], aba_tape.body[i].S, F_bar);
      Ic_bar[i] += g.m;
    }
  }

  // Composite accumulation: forward ran leaves -> root, adjoint runs
  // root -> leaves so a parent's Ic_bar is complete before its children read it.
  for (int i = 0; i < n; ++i) {
    const int par = model.links[i].parent;
    if (par == -1) continue;
    const ShiftGrad g = shift_adjoint(tape.Ic[i], aba_tape.body[i].Xup, Ic_bar[par]);
    Ic_bar[i] += g.b;
    ws.Xup_bar[i] += g.X;
  }
  for (int i = 0; i < n; ++i) ws.I_bar[i] += Ic_bar[i];
}

}  // namespace arti
