#include "arti/oracle.hpp"

#include <Eigen/Cholesky>

#include "arti/dynamics.hpp"
#include "arti/matx.hpp"
#include "arti/spatial.hpp"

namespace arti {

VecX rnea(const RobotModel& model, const VecX& q, const VecX& qdot, const VecX& qdd) {
  if (q.size() != model.n_q || qdot.size() != model.n_v || qdd.size() != model.n_v)
    throw DimensionMismatch("rnea: dimension mismatch");
  const int n = static_cast<int>(model.links.size());
  std::vector<SpatialTransform> Xup(n);
  std::vector<SpatialVec> S(n), v(n), a(n), f(n);
  const SpatialVec a_world(Vec3::Zero(), -model.gravity, VecKind::motion);

  for (int i = 0; i < n; ++i) {
    const LinkSpec& link = model.links[i];
    const int par = link.parent;
    const int vo = model.v_off[i];
    SpatialTransform Xj;
    SpatialVec vJ = SpatialVec::zero(), aJ = SpatialVec::zero();
    if (link.joint.kind == JointKind::floating_base) {
      Xj = base_transform(q.segment<7>(model.q_off[i]));
      vJ = SpatialVec(qdot.segment<3>(vo), qdot.segment<3>(vo + 3));
      aJ = SpatialVec(qdd.segment<3>(vo), qdd.segment<3>(vo + 3));
    } else if (link.joint.kind != JointKind::fixed) {
      const JointXS js = joint_xs(link.joint, q[model.q_off[i]]);
      Xj = js.X;
      S[i] = js.S;
      vJ = js.S * qdot[vo];
      aJ = js.S * qdd[vo];
    }
    Xup[i] = st_multiply(Xj, link.joint.parent_to_joint);
    const SpatialVec& v_par = par == -1 ? SpatialVec::zero() : v[par];
    const SpatialVec& a_par = par == -1 ? a_world : a[par];
    v[i] = st_apply(StMode::apply, Xup[i], v_par) + vJ;
    a[i] = st_apply(StMode::apply, Xup[i], a_par) + aJ + crossm(v[i], vJ);
    const SpatialDyad I = rigid_inertia(link.mass, link.com, link.inertia);
    f[i] = mul_ori(I, a[i]) + crossf(v[i], mul_ori(I, v[i]));
  }

  VecX tau = VecX::Zero(model.n_v);
  for (int i = n - 1; i >= 0; --i) {
    const LinkSpec& link = model.links[i];
    const int vo = model.v_off[i];
    if (link.joint.kind == JointKind::floating_base) {
      tau.segment<3>(vo) = f[i].w;
      tau.segment<3>(vo + 3) = f[i].v;
    } else if (link.joint.kind != JointKind::fixed) {
      tau[vo] = S[i].dot(f[i]);
    }
    if (link.parent != -1) f[link.parent] += st_apply(StMode::apply_trans, Xup[i], f[i]);
  }
  return tau;
}

MatX dense_mass_matrix(const RobotModel& model, const VecX& q) {
  const VecX zero_v = VecX::Zero(model.n_v);
  const VecX base = rnea(model, q, zero_v, zero_v);
  MatX M(model.n_v, model.n_v);
  for (int j = 0; j < model.n_v; ++j) {
    VecX e = VecX::Zero(model.n_v);
    e[j] = 1.0;
    M.col(j) = rnea(model, q, zero_v, e) - base;
  }
  return M;
}

VecX dense_forward_dynamics(const RobotModel& model, const SystemState& state,
                            const ControlInput& u) {
  validate_state(model, state);
  if (u.u.size() != model.n_u) throw DimensionMismatch("dense_forward_dynamics: bad control size");
  const VecX bias = rnea(model, state.q, state.qdot, VecX::Zero(model.n_v));
  const MatX M = dense_mass_matrix(model, state.q);

  VecX tau = VecX::Zero(model.n_v);
  for (size_t i = 0; i < model.links.size(); ++i) {
    const JointKind kind = model.links[i].joint.kind;
    if (kind == JointKind::revolute || kind == JointKind::prismatic) {
      const int vo = model.v_off[i];
      tau[vo] = u.u[model.u_index[i]] - model.links[i].joint.damping * state.qdot[vo];
    }
  }

  Eigen::LDLT<MatX> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularMassMatrix("dense_forward_dynamics: mass matrix not positive definite");
  const VecX rhs = tau - bias;
  VecX qdd = ldlt.solve(rhs);
  qdd += ldlt.solve(rhs - M * qdd);  // one refinement pass tightens the solve
  return qdd;
}

MatX fd_jacobian(const VecFn& fn, const VecX& at, const FdConfig& cfg) {
  const VecX f0 = fn(at);
  MatX J(f0.size(), at.size());
  for (int i = 0; i < at.size(); ++i) {
    VecX xp = at, xm = at;
    xp[i] += cfg.h;
    xm[i] -= cfg.h;
    const VecX fp = fn(xp);
    const VecX fm = fn(xm);
    if (!finite(fp) || !finite(fm)) throw NonFiniteProbe("fd_jacobian: non-finite probe");
    J.col(i) = (fp - fm) / (2 * cfg.h);
  }
  return J;
}

VecX fd_gradient(const std::function<double(const VecX&)>& fn, const VecX& at,
                 const FdConfig& cfg) {
  VecX g(at.size());
  for (int i = 0; i < at.size(); ++i) {
    VecX xp = at, xm = at;
    xp[i] += cfg.h;
    xm[i] -= cfg.h;
    const double fp = fn(xp);
    const double fm = fn(xm);
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw NonFiniteProbe("fd_gradient: non-finite probe");
    g[i] = (fp - fm) / (2 * cfg.h);
  }
  return g;
}

OracleResult adjoint_dot_test(const DotTestOp& op, int trials, uint64_t seed, const FdConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  OracleResult result;
  result.name = op.name;
  result.seed = seed;

  for (int t = 0; t < trials; ++t) {
    const VecX theta = op.sample(rng);
    VecX delta(op.dim_in), y_bar(op.dim_out);
    for (int i = 0; i < op.dim_in; ++i) delta[i] = normal(rng);
    for (int i = 0; i < op.dim_out; ++i) y_bar[i] = normal(rng);
    delta /= delta.norm();

    const VecX fp = op.fwd(theta + cfg.h * delta);
    const VecX fm = op.fwd(theta - cfg.h * delta);
    const double lhs = y_bar.dot((fp - fm) / (2 * cfg.h));
    const double rhs = op.vjp(theta, y_bar).dot(delta);
    const double rel = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), cfg.abs_floor});
    if (rel > result.worst_rel_err) {
      result.worst_rel_err = rel;
      result.failing_index = t;
      result.analytic = rhs;
      result.numeric = lhs;
    }
  }
  return result;
}

// --- flattened operator catalog -----------------------------------------------

namespace {

VecX pack_transform(const SpatialTransform& X) {
  VecX v(12);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v[3 * r + c] = X.E(r, c);
  v.segment<3>(9) = X.r;
  return v;
}
SpatialTransform unpack_transform(const VecX& v, int off = 0) {
  SpatialTransform X;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) X.E(r, c) = v[off + 3 * r + c];
  X.r = v.segment<3>(off + 9);
  return X;
}
VecX pack_tg(const TransformGrad& g) {
  VecX v(12);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v[3 * r + c] = g.E(r, c);
  v.segment<3>(9) = g.r;
  return v;
}
VecX pack_sv(const SpatialVec& a) { return a.to6(); }
SpatialVec unpack_sv(const VecX& v, int off) {
  return SpatialVec(v.segment<3>(off), v.segment<3>(off + 3));
}
VecX pack_dyad(const SpatialDyad& d) {
  const Mat6 m = d.to66();
  VecX v(36);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) v[6 * r + c] = m(r, c);
  return v;
}
SpatialDyad unpack_dyad(const VecX& v, int off) {
  Mat6 m;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) m(r, c) = v[off + 6 * r + c];
  return SpatialDyad::from66(m);
}
VecX pack_quat(const Quat& q) {
  VecX v(4);
  v << q.x, q.y, q.z, q.w;
  return v;
}
Quat unpack_quat(const VecX& v, int off) { return Quat(v[off], v[off + 1], v[off + 2], v[off + 3]); }

VecX pack_mat(const MatX& m) {
  VecX v(m.size());
  int k = 0;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) v[k++] = m(r, c);
  return v;
}
MatX unpack_mat(const VecX& v, int off, int rows, int cols) {
  MatX m(rows, cols);
  int k = off;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = v[k++];
  return m;
}

SpatialTransform random_transform(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Quat q(normal(rng), normal(rng), normal(rng), normal(rng));
  q = quat_normalize(q);
  return SpatialTransform(quat_to_matrix(q).transpose(), Vec3(normal(rng), normal(rng), normal(rng)));
}

SpatialVec random_sv(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return SpatialVec(Vec3(normal(rng), normal(rng), normal(rng)),
                    Vec3(normal(rng), normal(rng), normal(rng)));
}

VecX random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

DotTestOp make_st_apply(StMode mode, const std::string& name) {
  DotTestOp op;
  op.name = name;
  op.dim_in = 18;
  op.dim_out = 6;
  op.fwd = [mode](const VecX& t) {
    return pack_sv(st_apply(mode, unpack_transform(t), unpack_sv(t, 12)));
  };
  op.vjp = [mode](const VecX& t, const VecX& yb) {
    const StApplyGrad g = st_apply_adjoint(mode, unpack_transform(t), unpack_sv(t, 12),
                                           unpack_sv(yb, 0));
    VecX out(18);
    out << pack_tg(g.X), pack_sv(g.a);
    return out;
  };
  op.sample = [](std::mt19937_64& rng) {
    VecX t(18);
    t << pack_transform(random_transform(rng)), pack_sv(random_sv(rng));
    return t;
  };
  return op;
}

}  // namespace

std::vector<DotTestOp> standard_operator_suite() {
  std::vector<DotTestOp> ops;

  ops.push_back(make_st_apply(StMode::apply, "st_apply"));
  ops.push_back(make_st_apply(StMode::apply_inv, "st_apply_inv"));
  ops.push_back(make_st_apply(StMode::apply_trans, "st_apply_trans"));
  ops.push_back(make_st_apply(StMode::apply_invtrans, "st_apply_invtrans"));

  {
    DotTestOp op;
    op.name = "st_multiply";
    op.dim_in = 24;
    op.dim_out = 12;
    op.fwd = [](const VecX& t) {
      return pack_transform(st_multiply(unpack_transform(t), unpack_transform(t, 12)));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      TransformGrad ob;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) ob.E(r, c) = yb[3 * r + c];
      ob.r = yb.segment<3>(9);
      const StMultiplyGrad g =
          st_multiply_adjoint(unpack_transform(t), unpack_transform(t, 12), ob);
      VecX out(24);
      out << pack_tg(g.X1), pack_tg(g.X2);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) {
      VecX t(24);
      t << pack_transform(random_transform(rng)), pack_transform(random_transform(rng));
      return t;
    };
    ops.push_back(op);
  }

  auto cross_op = [](const std::string& name, bool motion) {
    DotTestOp op;
    op.name = name;
    op.dim_in = 12;
    op.dim_out = 6;
    op.fwd = [motion](const VecX& t) {
      const SpatialVec a = unpack_sv(t, 0), b = unpack_sv(t, 6);
      return pack_sv(motion ? crossm(a, b) : crossf(a, b));
    };
    op.vjp = [motion](const VecX& t, const VecX& yb) {
      const SpatialVec a = unpack_sv(t, 0), b = unpack_sv(t, 6), o = unpack_sv(yb, 0);
      const PairGrad g = motion ? crossm_adjoint(a, b, o) : crossf_adjoint(a, b, o);
      VecX out(12);
      out << pack_sv(g.a), pack_sv(g.b);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) {
      VecX t(12);
      t << pack_sv(random_sv(rng)), pack_sv(random_sv(rng));
      return t;
    };
    return op;
  };
  ops.push_back(cross_op("crossm", true));
  ops.push_back(cross_op("crossf", false));

  auto dyadvec_op = [](const std::string& name, bool ori) {
    DotTestOp op;
    op.name = name;
    op.dim_in = 42;
    op.dim_out = 6;
    op.fwd = [ori](const VecX& t) {
      const SpatialDyad m = unpack_dyad(t, 0);
      const SpatialVec a = unpack_sv(t, 36);
      return pack_sv(ori ? mul_ori(m, a) : mul_inv(m, a));
    };
    op.vjp = [ori](const VecX& t, const VecX& yb) {
      const SpatialDyad m = unpack_dyad(t, 0);
      const SpatialVec a = unpack_sv(t, 36), o = unpack_sv(yb, 0);
      const DyadVecGrad g = ori ? mul_ori_adjoint(m, a, o) : mul_inv_adjoint(m, a, o);
      VecX out(42);
      out << pack_dyad(g.m), pack_sv(g.a);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) {
      VecX t(42);
      t << random_vec(rng, 36), pack_sv(random_sv(rng));
      return t;
    };
    return op;
  };
  ops.push_back(dyadvec_op("mul_ori", true));
  ops.push_back(dyadvec_op("mul_inv", false));

  {
    DotTestOp op;
    op.name = "vvT";
    op.dim_in = 12;
    op.dim_out = 36;
    op.fwd = [](const VecX& t) { return pack_dyad(vvT(unpack_sv(t, 0), unpack_sv(t, 6))); };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const PairGrad g = vvT_adjoint(unpack_sv(t, 0), unpack_sv(t, 6), unpack_dyad(yb, 0));
      VecX out(12);
      out << pack_sv(g.a), pack_sv(g.b);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 12); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "vcross_matrix";
    op.dim_in = 3;
    op.dim_out = 9;
    op.fwd = [](const VecX& t) { return pack_mat(vcross_matrix(Vec3(t[0], t[1], t[2]))); };
    op.vjp = [](const VecX&, const VecX& yb) {
      return VecX(vcross_matrix_adjoint(unpack_mat(yb, 0, 3, 3)));
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 3); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "st2sd";
    op.dim_in = 12;
    op.dim_out = 36;
    op.fwd = [](const VecX& t) { return pack_dyad(st2sd(unpack_transform(t))); };
    op.vjp = [](const VecX& t, const VecX& yb) {
      return pack_tg(st2sd_adjoint(unpack_transform(t), unpack_dyad(yb, 0)));
    };
    op.sample = [](std::mt19937_64& rng) { return pack_transform(random_transform(rng)); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "shift";
    op.dim_in = 48;
    op.dim_out = 36;
    op.fwd = [](const VecX& t) {
      return pack_dyad(shift(unpack_dyad(t, 0), unpack_transform(t.segment<12>(36))));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const ShiftGrad g =
          shift_adjoint(unpack_dyad(t, 0), unpack_transform(t.segment<12>(36)), unpack_dyad(yb, 0));
      VecX out(48);
      out << pack_dyad(g.b), pack_tg(g.X);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) {
      VecX t(48);
      t << random_vec(rng, 36), pack_transform(random_transform(rng));
      return t;
    };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "mat_inverse";
    op.dim_in = 36;
    op.dim_out = 36;
    op.fwd = [](const VecX& t) { return pack_mat(mat_inverse(unpack_mat(t, 0, 6, 6))); };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const MatX inv = mat_inverse(unpack_mat(t, 0, 6, 6));
      return pack_mat(mat_inverse_adjoint(inv, unpack_mat(yb, 0, 6, 6)));
    };
    op.sample = [](std::mt19937_64& rng) {
      const MatX B = unpack_mat(random_vec(rng, 36), 0, 6, 6);
      return pack_mat(MatX(B.transpose() * B + 3.0 * MatX::Identity(6, 6)));
    };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "mat_AtBA";
    op.dim_in = 72;
    op.dim_out = 36;
    op.fwd = [](const VecX& t) {
      return pack_mat(mat_AtBA(unpack_mat(t, 0, 6, 6), unpack_mat(t, 36, 6, 6)));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const AtBAGrad g =
          mat_AtBA_adjoint(unpack_mat(t, 0, 6, 6), unpack_mat(t, 36, 6, 6), unpack_mat(yb, 0, 6, 6));
      VecX out(72);
      out << pack_mat(g.a), pack_mat(g.b);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 72); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "mat_three";
    op.dim_in = 27;
    op.dim_out = 9;
    op.fwd = [](const VecX& t) {
      return pack_mat(
          mat_three(unpack_mat(t, 0, 3, 3), unpack_mat(t, 9, 3, 3), unpack_mat(t, 18, 3, 3)));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const ThreeMatGrad g = mat_three_adjoint(unpack_mat(t, 0, 3, 3), unpack_mat(t, 9, 3, 3),
                                               unpack_mat(t, 18, 3, 3), unpack_mat(yb, 0, 3, 3));
      VecX out(27);
      out << pack_mat(g.a), pack_mat(g.b), pack_mat(g.c);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 27); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "mat_vec";
    op.dim_in = 16;
    op.dim_out = 3;
    op.fwd = [](const VecX& t) {
      return VecX(mat_vec(unpack_mat(t, 0, 3, 4), t.segment<4>(12)));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const MatVecGrad g = mat_vec_adjoint(unpack_mat(t, 0, 3, 4), t.segment<4>(12), yb);
      VecX out(16);
      out << pack_mat(g.m), g.a;
      return out;
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 16); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "mat_mul";
    op.dim_in = 18;
    op.dim_out = 8;
    op.fwd = [](const VecX& t) {
      return pack_mat(mat_mul(unpack_mat(t, 0, 4, 3), unpack_mat(t, 12, 3, 2)));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const MatMulGrad g =
          mat_mul_adjoint(unpack_mat(t, 0, 4, 3), unpack_mat(t, 12, 3, 2), unpack_mat(yb, 0, 4, 2));
      VecX out(18);
      out << pack_mat(g.a), pack_mat(g.b);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 18); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "quat_mul_vec";
    op.dim_in = 7;
    op.dim_out = 4;
    op.fwd = [](const VecX& t) {
      return pack_quat(quat_mul_vec(unpack_quat(t, 0), t.segment<3>(4)));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const QuatVecGrad g = quat_mul_vec_adjoint(unpack_quat(t, 0), t.segment<3>(4), unpack_quat(yb, 0));
      VecX out(7);
      out << pack_quat(g.q), g.v;
      return out;
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 7); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "quat_mul_qt";
    op.dim_in = 8;
    op.dim_out = 4;
    op.fwd = [](const VecX& t) {
      return pack_quat(quat_mul_qt(unpack_quat(t, 0), unpack_quat(t, 4)));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const QuatPairGrad g = quat_mul_qt_adjoint(unpack_quat(t, 0), unpack_quat(t, 4), unpack_quat(yb, 0));
      VecX out(8);
      out << pack_quat(g.q1), pack_quat(g.q2);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 8); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "quat_normalize";
    op.dim_in = 4;
    op.dim_out = 4;
    op.fwd = [](const VecX& t) { return pack_quat(quat_normalize(unpack_quat(t, 0))); };
    op.vjp = [](const VecX& t, const VecX& yb) {
      return pack_quat(quat_normalize_adjoint(unpack_quat(t, 0), unpack_quat(yb, 0)));
    };
    op.sample = [](std::mt19937_64& rng) {
      VecX t = random_vec(rng, 4);
      while (t.norm() < 0.3) t = random_vec(rng, 4);
      return t;
    };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "quat_to_matrix";
    op.dim_in = 4;
    op.dim_out = 9;
    op.fwd = [](const VecX& t) { return pack_mat(quat_to_matrix(unpack_quat(t, 0))); };
    op.vjp = [](const VecX& t, const VecX& yb) {
      return pack_quat(quat_to_matrix_adjoint(unpack_quat(t, 0), unpack_mat(yb, 0, 3, 3)));
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 4); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "quat_from_axis_angle";
    op.dim_in = 4;
    op.dim_out = 4;
    op.fwd = [](const VecX& t) {
      return pack_quat(quat_from_axis_angle(Vec3(t[0], t[1], t[2]), t[3]));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const AxisAngleGrad g =
          quat_from_axis_angle_adjoint(Vec3(t[0], t[1], t[2]), t[3], unpack_quat(yb, 0));
      VecX out(4);
      out << g.axis, g.angle;
      return out;
    };
    op.sample = [](std::mt19937_64& rng) { return random_vec(rng, 4); };
    ops.push_back(op);
  }
  {
    DotTestOp op;
    op.name = "rigid_inertia";
    op.dim_in = 13;
    op.dim_out = 36;
    op.fwd = [](const VecX& t) {
      return pack_dyad(rigid_inertia(t[0], t.segment<3>(1), unpack_mat(t, 4, 3, 3)));
    };
    op.vjp = [](const VecX& t, const VecX& yb) {
      const RigidInertiaGrad g =
          rigid_inertia_adjoint(t[0], t.segment<3>(1), unpack_mat(t, 4, 3, 3), unpack_dyad(yb, 0));
      VecX out(13);
      out << g.mass, g.com, pack_mat(g.inertia);
      return out;
    };
    op.sample = [](std::mt19937_64& rng) {
      VecX t = random_vec(rng, 13);
      t[0] = 1.0 + std::abs(t[0]);
      return t;
    };
    ops.push_back(op);
  }
  return ops;
}

}  // namespace arti
