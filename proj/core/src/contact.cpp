#include "arti/contact.hpp"

#include <algorithm>

#include "arti/matx.hpp"

namespace arti {

namespace {

Vec3 to_world(const SpatialTransform& W, const Vec3& local) {
  return W.r + W.E.transpose() * local;
}

// Candidate shape centers to test: spheres give one, capsules their two
// endpoint spheres.
struct Candidate {
  Vec3 offset;
  double radius;
};

std::vector<Candidate> shape_candidates(const CollisionShape& s) {
  if (s.type == CollisionShape::Type::sphere) return {{s.offset, s.radius}};
  return {{s.offset + s.half_len * s.axis, s.radius}, {s.offset - s.half_len * s.axis, s.radius}};
}

int min_abs_axis(const Vec3& n) {
  int idx = 0;
  double best = std::abs(n[0]);
  for (int k = 1; k < 3; ++k)
    if (std::abs(n[k]) < best) {
      best = std::abs(n[k]);
      idx = k;
    }
  return idx;
}

void finish_geom(ContactGeomRec& g) {
  g.e_idx = min_abs_axis(g.normal);
  g.t1u = g.normal.cross(Vec3::Unit(g.e_idx));
  g.t1 = g.t1u / g.t1u.norm();
  g.t2 = g.normal.cross(g.t1);
}

std::vector<ContactGeomRec> detect_impl(const RobotModel& model,
                                        const std::vector<SpatialTransform>& W, double margin) {
  std::vector<ContactGeomRec> out;
  const int n = static_cast<int>(model.links.size());

  // vs ground plane z = 0
  for (int i = 0; i < n; ++i) {
    for (const CollisionShape& s : model.links[i].collision) {
      for (const Candidate& cand : shape_candidates(s)) {
        const Vec3 c = to_world(W[i], cand.offset);
        const double depth = cand.radius - c.z();
        if (depth < -margin) continue;
        ContactGeomRec g;
        g.kind = 0;
        g.body_a = i;
        g.body_b = -1;
        g.off_a = cand.offset;
        g.Ra = cand.radius;
        g.ca = c;
        g.normal = Vec3::UnitZ();
        g.depth = depth;
        g.point = c - cand.radius * g.normal;
        finish_geom(g);
        out.push_back(g);
      }
    }
  }

  // sphere vs sphere across links (parent-child pairs skipped; they overlap
  // by construction at the joint)
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (model.links[j].parent == i || model.links[i].parent == j) continue;
      for (const CollisionShape& si : model.links[i].collision) {
        if (si.type != CollisionShape::Type::sphere) continue;
        for (const CollisionShape& sj : model.links[j].collision) {
          if (sj.type != CollisionShape::Type::sphere) continue;
          const Vec3 ca = to_world(W[i], si.offset);
          const Vec3 cb = to_world(W[j], sj.offset);
          const Vec3 u = ca - cb;
          const double dist = u.norm();
          if (dist < 1e-12) continue;
          const double depth = si.radius + sj.radius - dist;
          if (depth < -margin) continue;
          ContactGeomRec g;
          g.kind = 1;
          g.body_a = i;
          g.body_b = j;
          g.off_a = si.offset;
          g.off_b = sj.offset;
          g.Ra = si.radius;
          g.Rb = sj.radius;
          g.ca = ca;
          g.cb = cb;
          g.u = u;
          g.dist = dist;
          g.normal = u / dist;
          g.depth = depth;
          g.point = ca - g.normal * (si.radius - 0.5 * depth);
          finish_geom(g);
          out.push_back(g);
        }
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const ContactGeomRec& a, const ContactGeomRec& b) {
    if (a.body_a != b.body_a) return a.body_a < b.body_a;
    if (a.body_b != b.body_b) return a.body_b < b.body_b;
    if (a.point.x() != b.point.x()) return a.point.x() < b.point.x();
    if (a.point.y() != b.point.y()) return a.point.y() < b.point.y();
    return a.point.z() < b.point.z();
  });
  return out;
}

ContactPoint to_contact(const ContactGeomRec& g, const ContactMaterial& material) {
  ContactPoint c;
  c.body_a = g.body_a;
  c.body_b = g.body_b;
  c.point = g.point;
  c.normal = g.normal;
  c.depth = std::max(g.depth, 0.0);  // margin-band touches report zero depth
  c.material = material;
  return c;
}

std::vector<SpatialTransform> world_transforms(const RobotModel& model, const SystemState& state) {
  std::vector<SpatialTransform> W(model.links.size());
  for (size_t i = 0; i < model.links.size(); ++i) {
    const LinkSpec& link = model.links[i];
    SpatialTransform Xj;
    if (link.joint.kind == JointKind::floating_base) {
      Xj = base_transform(state.q.segment<7>(model.q_off[i]));
    } else if (link.joint.kind == JointKind::fixed) {
      Xj = SpatialTransform::identity();
    } else {
      Xj = joint_xs(link.joint, state.q[model.q_off[i]]).X;
    }
    const SpatialTransform Xup = st_multiply(Xj, link.joint.parent_to_joint);
    W[i] = link.parent == -1 ? Xup : st_multiply(Xup, W[link.parent]);
  }
  return W;
}

SpatialVec joint_unit_motion(const RobotModel& model, const AbaTape& aba_tape, int body, int k) {
  if (model.links[body].joint.kind == JointKind::floating_base) {
    SpatialVec s = SpatialVec::zero();
    if (k < 3) s.w[k] = 1.0;
    else s.v[k - 3] = 1.0;
    return s;
  }
  (void)k;
  return aba_tape.body[body].S;
}

}  // namespace

size_t ContactTape::byte_size() const {
  size_t n = contacts.size() * sizeof(ContactPoint) + geom.size() * sizeof(ContactGeomRec);
  for (const auto& v : jcols_a) n += v.size() * sizeof(JColumn);
  for (const auto& v : jcols_b) n += v.size() * sizeof(JColumn);
  n += crba.byte_size();
  n += (Minv.size() + J.size() + mlcp.A.size() + mlcp.b.size() + mlcp.c_minus.size() +
        mlcp.c_plus.size() + jq.size() + jv.size() + x.size() + w_aux.size()) *
       sizeof(double);
  n += mlcp.rows.size() * sizeof(MlcpProblem::Row);
  n += record.byte_size();
  return n;
}

std::vector<ContactPoint> detect_contacts(const RobotModel& model, const SystemState& state,
                                          double margin) {
  validate_state(model, state);
  const std::vector<ContactGeomRec> geom = detect_impl(model, world_transforms(model, state), margin);
  std::vector<ContactPoint> out;
  out.reserve(geom.size());
  for (const ContactGeomRec& g : geom) out.push_back(to_contact(g, model.material));
  return out;
}

std::pair<VecX, PgsRecord> pgs_solve(const MlcpProblem& P, int niter) {
  const int m = P.size();
  if (niter < 1) throw ShapeMismatch("pgs_solve: niter must be >= 1");
  if (P.A.rows() != m || P.A.cols() != m || P.b.size() != m)
    throw ShapeMismatch("pgs_solve: inconsistent problem dimensions");
  PgsRecord rec;
  rec.niter = niter;
  rec.V_d = MatX::Zero(niter, m);
  rec.V_x1 = MatX::Zero(niter, m);
  rec.V_x2 = MatX::Zero(niter, m);
  rec.clamp_mask.setZero(niter, m);
  VecX x = VecX::Zero(m);

  for (int t = 0; t < niter; ++t) {
    rec.V_x1.row(t) = x.transpose();
    for (int i = 0; i < m; ++i) {
      const double Aii = P.A(i, i);
      if (Aii == 0.0) throw ZeroDiagonal("pgs_solve: zero diagonal at row " + std::to_string(i));
      double d = 0;
      for (int j = 0; j < m; ++j)
        if (j != i) d += P.A(i, j) * x[j];
      rec.V_d(t, i) = d;
      double z = (P.b[i] - d) / Aii;
      double lo, hi;
      const MlcpProblem::Row& row = P.rows[i];
      if (row.coupled_row >= 0) {
        const double lambda_n = x[row.coupled_row];
        hi = row.mu * lambda_n;
        lo = -hi;
      } else {
        lo = P.c_minus[i];
        hi = P.c_plus[i];
      }
      if (z < lo) {
        x[i] = lo;
        rec.clamp_mask(t, i) = -1;
      } else if (z > hi) {
        x[i] = hi;
        rec.clamp_mask(t, i) = 1;
      } else {
        x[i] = z;
        rec.clamp_mask(t, i) = 0;
      }
    }
    rec.V_x2.row(t) = x.transpose();
  }
  return {x, rec};
}

PgsGrads pgs_adjoint(const MlcpProblem& P, const PgsRecord& record, const VecX& x_bar) {
  const int m = P.size();
  if (record.V_d.cols() != m || record.V_d.rows() != record.niter)
    throw RecordMismatch("pgs_adjoint: record does not match problem");
  if (x_bar.size() != m) throw RecordMismatch("pgs_adjoint: bad seed size");

  PgsGrads g;
  g.A_bar = MatX::Zero(m, m);
  g.b_bar = VecX::Zero(m);
  g.c_minus_bar = VecX::Zero(m);
  g.c_plus_bar = VecX::Zero(m);
  g.mu_bar = VecX::Zero(m);
  VecX xb = x_bar;

  for (int t = record.niter - 1; t >= 0; --t) {
    for (int i = m - 1; i >= 0; --i) {
      const double xbi = xb[i];
      xb[i] = 0;
      if (xbi == 0.0) continue;
      const int8_t mask = record.clamp_mask(t, i);
      const MlcpProblem::Row& row = P.rows[i];
      if (mask == 0) {
        const double Aii = P.A(i, i);
        const double d = record.V_d(t, i);
        const double d_bar = -xbi / Aii;
        g.b_bar[i] += xbi / Aii;
        g.A_bar(i, i) += -xbi * (P.b[i] - d) / (Aii * Aii);
        for (int j = 0; j < m; ++j) {
          if (j == i) continue;
          const double xval = j > i ? record.V_x1(t, j) : record.V_x2(t, j);
          g.A_bar(i, j) += d_bar * xval;
          xb[j] += d_bar * P.A(i, j);
        }
      } else if (row.coupled_row >= 0) {
        // bound = sign * mu * lambda_n with lambda_n the normal impulse
        // already updated this sweep
        const double sign = mask > 0 ? 1.0 : -1.0;
        const double lambda_n = record.V_x2(t, row.coupled_row);
        g.mu_bar[i] += sign * lambda_n * xbi;
        xb[row.coupled_row] += sign * row.mu * xbi;
      } else if (mask > 0) {
        g.c_plus_bar[i] += xbi;
      } else {
        g.c_minus_bar[i] += xbi;
      }
    }
  }
  return g;
}

std::vector<ContactGeomRec> detect_geoms(const RobotModel& model,
                                         const std::vector<SpatialTransform>& W, double margin) {
  return detect_impl(model, W, margin);
}

void contact_assemble(const RobotModel& model, const SystemState& state, const AbaTape& aba_tape,
                      const VecX& v_free, const ContactStageConfig& cfg, ContactTape& tape) {
  tape.contacts.clear();
  for (const ContactGeomRec& g : tape.geom) tape.contacts.push_back(to_contact(g, model.material));
  const int C = static_cast<int>(tape.geom.size());
  const int m = 3 * C;
  const int nv = model.n_v;

  crba(model, aba_tape, tape.crba);
  try {
    tape.Minv = mat_inverse(tape.crba.M);
  } catch (const SingularMatrix& e) {
    throw SingularMassMatrix(e.what());
  }

  // Rows: all normals first, then the two friction rows per contact.
  tape.mlcp.rows.assign(m, {});
  for (int c = 0; c < C; ++c) {
    tape.mlcp.rows[c] = {c, 0, -1, 0.0};
    tape.mlcp.rows[C + 2 * c] = {c, 1, c, model.material.mu};
    tape.mlcp.rows[C + 2 * c + 1] = {c, 2, c, model.material.mu};
  }

  tape.J = MatX::Zero(m, nv);
  tape.jcols_a.assign(C, {});
  tape.jcols_b.assign(C, {});
  for (int c = 0; c < C; ++c) {
    const ContactGeomRec& geom = tape.geom[c];
    const SpatialTransform Cc(Mat3::Identity(), geom.point);
    for (int side = 0; side < 2; ++side) {
      const int body0 = side == 0 ? geom.body_a : geom.body_b;
      if (body0 < 0) continue;
      const double sign = side == 0 ? 1.0 : -1.0;
      auto& cols = side == 0 ? tape.jcols_a[c] : tape.jcols_b[c];
      for (int j = body0; j != -1; j = model.links[j].parent) {
        const JointKind kind = model.links[j].joint.kind;
        if (kind == JointKind::fixed) continue;
        const int dofs = RobotModel::v_dof(kind);
        for (int k = 0; k < dofs; ++k) {
          JColumn col;
          col.col = model.v_off[j] + k;
          col.body = j;
          col.m_w = st_apply(StMode::apply_inv, aba_tape.body[j].W,
                             joint_unit_motion(model, aba_tape, j, k));
          col.m_c = st_apply(StMode::apply, Cc, col.m_w);
          tape.J(c, col.col) += sign * geom.normal.dot(col.m_c.v);
          tape.J(C + 2 * c, col.col) += sign * geom.t1.dot(col.m_c.v);
          tape.J(C + 2 * c + 1, col.col) += sign * geom.t2.dot(col.m_c.v);
          cols.push_back(col);
        }
      }
    }
  }

  tape.jq = tape.J * state.qdot;
  tape.jv = tape.J * v_free;

  tape.mlcp.A = tape.J * tape.Minv * tape.J.transpose() +
                cfg.regularization * MatX::Identity(m, m);
  tape.mlcp.b = VecX::Zero(m);
  tape.mlcp.c_minus = VecX::Zero(m);
  tape.mlcp.c_plus = VecX::Zero(m);
  const double e_rest = model.material.restitution;
  for (int c = 0; c < C; ++c) {
    const double bias = (cfg.baumgarte / cfg.dt) * std::max(tape.geom[c].depth, 0.0) +
                        e_rest * std::max(0.0, -tape.jq[c]);
    tape.mlcp.b[c] = bias - tape.jv[c];
    tape.mlcp.c_minus[c] = 0.0;
    tape.mlcp.c_plus[c] = std::numeric_limits<double>::infinity();
    tape.mlcp.b[C + 2 * c] = -tape.jv[C + 2 * c];
    tape.mlcp.b[C + 2 * c + 1] = -tape.jv[C + 2 * c + 1];
  }
}

VecX contact_stage(const RobotModel& model, const SystemState& state, const AbaTape& aba_tape,
                   const VecX& v_free, const ContactStageConfig& cfg, ContactTape& tape) {
  std::vector<SpatialTransform> W(model.links.size());
  for (size_t i = 0; i < W.size(); ++i) W[i] = aba_tape.body[i].W;
  tape.geom = detect_impl(model, W, cfg.margin);
  if (tape.geom.empty()) {
    tape = ContactTape{};
    return v_free;
  }
  contact_assemble(model, state, aba_tape, v_free, cfg, tape);
  auto [x, rec] = pgs_solve(tape.mlcp, cfg.pgs_iters);
  tape.x = x;
  tape.record = std::move(rec);
  tape.w_aux = tape.Minv * (tape.J.transpose() * tape.x);
  return v_free + tape.w_aux;
}

VecX contact_stage_backward(const RobotModel& model, const SystemState& state,
                            const AbaTape& aba_tape, const ContactTape& tape, const VecX& v_free,
                            const ContactStageConfig& cfg, const VecX& vpost_bar,
                            const ParamMask& mask, AbaAdjointWorkspace& ws) {
  const int C = static_cast<int>(tape.geom.size());
  if (C == 0) return vpost_bar;
  const int m = 3 * C;

  VecX v_free_bar = vpost_bar;

  // vpost = v_free + Minv J^T x
  const VecX JTx = tape.J.transpose() * tape.x;
  MatX Minv_bar = vpost_bar * JTx.transpose();
  const VecX w = tape.Minv.transpose() * vpost_bar;
  MatX J_bar = tape.x * w.transpose();
  const VecX x_bar = tape.J * w;

  // PGS solve
  const PgsGrads pg = pgs_adjoint(tape.mlcp, tape.record, x_bar);
  if (mask.friction) ws.params.mu += pg.mu_bar.sum();
  MatX A_bar = pg.A_bar;
  VecX b_bar = pg.b_bar;

  // A = J Minv J^T + reg I
  J_bar += A_bar.transpose() * tape.J * tape.Minv.transpose() + A_bar * tape.J * tape.Minv;
  Minv_bar += tape.J.transpose() * A_bar * tape.J;

  // b rows
  VecX jq_bar = VecX::Zero(m);
  VecX jv_bar = VecX::Zero(m);
  std::vector<double> depth_bar(C, 0.0);
  const double e_rest = model.material.restitution;
  for (int c = 0; c < C; ++c) {
    const double bn = b_bar[c];
    if (tape.geom[c].depth > 0) depth_bar[c] += (cfg.baumgarte / cfg.dt) * bn;
    if (mask.restitution) ws.params.restitution += std::max(0.0, -tape.jq[c]) * bn;
    if (tape.jq[c] < 0) jq_bar[c] += -e_rest * bn;
    jv_bar[c] += -bn;
    jv_bar[C + 2 * c] += -b_bar[C + 2 * c];
    jv_bar[C + 2 * c + 1] += -b_bar[C + 2 * c + 1];
  }

  // jv = J v_free ; jq = J qdot
  J_bar += jv_bar * v_free.transpose();
  v_free_bar += tape.J.transpose() * jv_bar;
  J_bar += jq_bar * state.qdot.transpose();
  ws.qd_bar += tape.J.transpose() * jq_bar;

  // Minv = inverse(M)
  const MatX M_bar = mat_inverse_adjoint(tape.Minv, Minv_bar);
  crba_backward(model, aba_tape, tape.crba, M_bar, mask, ws);

  // J entries -> geometry and joint transforms
  std::vector<Vec3> n_bar(C, Vec3::Zero()), t1_bar(C, Vec3::Zero()), t2_bar(C, Vec3::Zero()),
      point_bar(C, Vec3::Zero());
  for (int c = 0; c < C; ++c) {
    const ContactGeomRec& geom = tape.geom[c];
    const SpatialTransform Cc(Mat3::Identity(), geom.point);
    for (int side = 0; side < 2; ++side) {
      const auto& cols = side == 0 ? tape.jcols_a[c] : tape.jcols_b[c];
      const double sign = side == 0 ? 1.0 : -1.0;
      for (const JColumn& col : cols) {
        const double jn = J_bar(c, col.col);
        const double j1 = J_bar(C + 2 * c, col.col);
        const double j2 = J_bar(C + 2 * c + 1, col.col);
        SpatialVec mc_bar = SpatialVec::zero();
        mc_bar.v = sign * (jn * geom.normal + j1 * geom.t1 + j2 * geom.t2);
        n_bar[c] += sign * jn * col.m_c.v;
        t1_bar[c] += sign * j1 * col.m_c.v;
        t2_bar[c] += sign * j2 * col.m_c.v;
        const StApplyGrad ga = st_apply_adjoint(StMode::apply, Cc, col.m_w, mc_bar);
        point_bar[c] += ga.X.r;
        const StApplyGrad gi =
            st_apply_adjoint(StMode::apply_inv, aba_tape.body[col.body].W,
                             joint_unit_motion(model, aba_tape, col.body,
                                               col.col - model.v_off[col.body]),
                             ga.a);
        ws.W_bar[col.body] += gi.X;
      }
    }
  }

  // tangent basis: t2 = n x t1, t1 = t1u/|t1u|, t1u = n x e
  for (int c = 0; c < C; ++c) {
    const ContactGeomRec& geom = tape.geom[c];
    n_bar[c] += -t2_bar[c].cross(geom.t1);
    t1_bar[c] += t2_bar[c].cross(geom.normal);
    const double norm = geom.t1u.norm();
    const Vec3 t1u_bar = (t1_bar[c] - t1_bar[c].dot(geom.t1) * geom.t1) / norm;
    n_bar[c] += -t1u_bar.cross(Vec3::Unit(geom.e_idx));
  }

  // geometry
  for (int c = 0; c < C; ++c) {
    const ContactGeomRec& geom = tape.geom[c];
    if (geom.kind == 0) {
      // plane: point = ca - Ra n, depth = Ra - ca_z, n constant
      Vec3 ca_bar = point_bar[c];
      ca_bar.z() += -depth_bar[c];
      ws.W_bar[geom.body_a].r += ca_bar;
      ws.W_bar[geom.body_a].E += geom.off_a * ca_bar.transpose();
    } else {
      // sphere-sphere
      Vec3 ca_bar = point_bar[c];
      const double s = geom.Ra - 0.5 * geom.depth;
      n_bar[c] += -s * point_bar[c];
      const double s_bar = -geom.normal.dot(point_bar[c]);
      double d_bar = depth_bar[c] - 0.5 * s_bar;
      double dist_bar = -d_bar;
      Vec3 u_bar = n_bar[c] / geom.dist;
      dist_bar += -n_bar[c].dot(geom.normal) / geom.dist;
      u_bar += dist_bar * geom.normal;
      ca_bar += u_bar;
      const Vec3 cb_bar = -u_bar;
      ws.W_bar[geom.body_a].r += ca_bar;
      ws.W_bar[geom.body_a].E += geom.off_a * ca_bar.transpose();
      ws.W_bar[geom.body_b].r += cb_bar;
      ws.W_bar[geom.body_b].E += geom.off_b * cb_bar.transpose();
    }
  }

  return v_free_bar;
}

}  // namespace arti
