#include "arti/model.hpp"

#include <Eigen/Eigenvalues>

namespace arti {

void RobotModel::finalize() {
  const int n = static_cast<int>(links.size());
  if (n == 0) throw ValidationError("model: no links");
  q_off.assign(n, 0);
  v_off.assign(n, 0);
  u_index.assign(n, -1);
  n_q = n_v = n_u = 0;
  has_floating_base = false;

  for (int i = 0; i < n; ++i) {
    const LinkSpec& link = links[i];
    const JointSpec& j = link.joint;
    if (link.parent >= i)
      throw ValidationError("model: topological order violated at link " + std::to_string(i));
    if (link.parent < -1)
      throw ValidationError("model: bad parent index at link " + std::to_string(i));
    if (j.kind == JointKind::floating_base) {
      if (i != 0 || link.parent != -1)
        throw ValidationError("model: floating_base allowed only at the root");
      if (has_floating_base) throw ValidationError("model: more than one floating_base");
      has_floating_base = true;
    }
    if (j.kind == JointKind::revolute || j.kind == JointKind::prismatic) {
      if (std::abs(j.axis.norm() - 1.0) > 1e-9)
        throw ValidationError("model: joint axis not unit norm at link " + std::to_string(i));
    }
    if (j.damping < 0)
      throw ValidationError("model: negative damping at link " + std::to_string(i));
    if (!(link.mass > 0))
      throw ValidationError("model: mass must be positive at link " + std::to_string(i));
    if ((link.inertia - link.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ValidationError("model: inertia not symmetric at link " + std::to_string(i));
    Eigen::SelfAdjointEigenSolver<Mat3> es(link.inertia);
    if (es.eigenvalues().minCoeff() <= 0)
      throw ValidationError("model: inertia not positive definite at link " + std::to_string(i));
    for (const CollisionShape& s : link.collision) {
      if (!(s.radius > 0)) throw ValidationError("model: collision radius must be positive");
      if (s.type == CollisionShape::Type::capsule && std::abs(s.axis.norm() - 1.0) > 1e-9)
        throw ValidationError("model: capsule axis not unit norm");
    }

    q_off[i] = n_q;
    v_off[i] = n_v;
    n_q += q_dof(j.kind);
    n_v += v_dof(j.kind);
    if (j.kind == JointKind::revolute || j.kind == JointKind::prismatic) u_index[i] = n_u++;
  }
  if (material.mu < 0) throw ValidationError("model: negative friction coefficient");
  if (material.restitution < 0 || material.restitution > 1)
    throw ValidationError("model: restitution outside [0, 1]");
}

void validate_state(const RobotModel& model, const SystemState& state) {
  if (state.q.size() != model.n_q || state.qdot.size() != model.n_v)
    throw DimensionMismatch("state: expected q " + std::to_string(model.n_q) + ", qdot " +
                            std::to_string(model.n_v));
  if (!finite(state.q) || !finite(state.qdot)) throw NonFiniteState("state: non-finite entries");
  if (model.has_floating_base) {
    const double n = state.q.head<4>().norm();
    if (std::abs(n - 1.0) > 1e-9)
      throw ValidationError("state: floating-base quaternion not unit norm");
  }
}

VecX state_pack(const RobotModel& model, const VecX& q, const VecX& qdot) {
  if (q.size() != model.n_q || qdot.size() != model.n_v)
    throw DimensionMismatch("state_pack: dimension mismatch");
  VecX x(model.n_q + model.n_v);
  x << q, qdot;
  return x;
}

std::pair<VecX, VecX> state_unpack(const RobotModel& model, const VecX& x) {
  if (x.size() != model.n_q + model.n_v) throw DimensionMismatch("state_unpack: dimension mismatch");
  return {x.head(model.n_q), x.tail(model.n_v)};
}

SystemState default_state(const RobotModel& model) {
  SystemState s;
  s.q = VecX::Zero(model.n_q);
  s.qdot = VecX::Zero(model.n_v);
  if (model.has_floating_base) s.q[3] = 1.0;  // quaternion (x, y, z, w)
  return s;
}

JointXS joint_xs(const JointSpec& joint, double q) {
  if (!finite(q)) throw NonFiniteInput("joint_xs: non-finite coordinate");
  JointXS out;
  switch (joint.kind) {
    case JointKind::revolute: {
      const Mat3 K = cross_matrix(joint.axis);
      out.X.E = Mat3::Identity() - std::sin(q) * K + (1 - std::cos(q)) * K * K;
      out.X.r = Vec3::Zero();
      out.S = SpatialVec(joint.axis, Vec3::Zero(), VecKind::motion);
      break;
    }
    case JointKind::prismatic:
      out.X.E = Mat3::Identity();
      out.X.r = q * joint.axis;
      out.S = SpatialVec(Vec3::Zero(), joint.axis, VecKind::motion);
      break;
    case JointKind::fixed:
      out.X = SpatialTransform::identity();
      out.S = SpatialVec::zero();
      break;
    case JointKind::floating_base:
      throw ShapeMismatch("joint_xs: floating_base uses base_transform");
  }
  return out;
}

double joint_xs_vjp(const JointSpec& joint, double q, const TransformGrad& X_bar) {
  switch (joint.kind) {
    case JointKind::revolute: {
      const Mat3 K = cross_matrix(joint.axis);
      const Mat3 dE = -std::cos(q) * K + std::sin(q) * K * K;
      return (X_bar.E.array() * dE.array()).sum();
    }
    case JointKind::prismatic:
      return X_bar.r.dot(joint.axis);
    default:
      return 0.0;
  }
}

SpatialTransform base_transform(const VecX& q7) {
  if (q7.size() != 7) throw DimensionMismatch("base_transform: expected 7 coordinates");
  const Quat qn = quat_normalize(Quat(q7[0], q7[1], q7[2], q7[3]));
  return SpatialTransform(quat_to_matrix(qn).transpose(), q7.tail<3>());
}

VecX base_transform_vjp(const VecX& q7, const TransformGrad& X_bar) {
  const Quat raw(q7[0], q7[1], q7[2], q7[3]);
  const Quat qn = quat_normalize(raw);
  const Quat qn_bar = quat_to_matrix_adjoint(qn, X_bar.E.transpose());
  const Quat q_bar = quat_normalize_adjoint(raw, qn_bar);
  VecX out = VecX::Zero(7);
  out[0] = q_bar.x;
  out[1] = q_bar.y;
  out[2] = q_bar.z;
  out[3] = q_bar.w;
  out.tail<3>() = X_bar.r;
  return out;
}

namespace {

Quat quat_exp(const Vec3& phi) {
  const double angle = phi.norm();
  if (angle < 1e-14) return Quat(0.5 * phi.x(), 0.5 * phi.y(), 0.5 * phi.z(), 1.0);
  const Vec3 axis = phi / angle;
  return quat_from_axis_angle(axis, angle);
}

}  // namespace

SystemState state_perturb(const RobotModel& model, const SystemState& state, const VecX& delta,
                          double h) {
  if (delta.size() != 2 * model.n_v) throw DimensionMismatch("state_perturb: expected 2*n_v");
  SystemState out = state;
  for (size_t i = 0; i < model.links.size(); ++i) {
    const JointKind kind = model.links[i].joint.kind;
    const int qo = model.q_off[i];
    const int vo = model.v_off[i];
    if (kind == JointKind::floating_base) {
      const Quat q0(state.q[qo], state.q[qo + 1], state.q[qo + 2], state.q[qo + 3]);
      const Quat dq = quat_exp(h * delta.segment<3>(vo));
      const Quat q1 = quat_normalize(quat_mul_qt(q0, dq));
      out.q[qo] = q1.x;
      out.q[qo + 1] = q1.y;
      out.q[qo + 2] = q1.z;
      out.q[qo + 3] = q1.w;
      out.q.segment<3>(qo + 4) += h * delta.segment<3>(vo + 3);
    } else if (RobotModel::q_dof(kind) == 1) {
      out.q[qo] += h * delta[vo];
    }
  }
  out.qdot += h * delta.tail(model.n_v);
  return out;
}

VecX tangent_from_ambient(const RobotModel& model, const SystemState& state, const VecX& q_bar,
                          const VecX& v_bar) {
  if (q_bar.size() != model.n_q || v_bar.size() != model.n_v)
    throw DimensionMismatch("tangent_from_ambient: dimension mismatch");
  VecX out(2 * model.n_v);
  out.tail(model.n_v) = v_bar;
  for (size_t i = 0; i < model.links.size(); ++i) {
    const JointKind kind = model.links[i].joint.kind;
    const int qo = model.q_off[i];
    const int vo = model.v_off[i];
    if (kind == JointKind::floating_base) {
      const Quat q0(state.q[qo], state.q[qo + 1], state.q[qo + 2], state.q[qo + 3]);
      const Quat qb(q_bar[qo], q_bar[qo + 1], q_bar[qo + 2], q_bar[qo + 3]);
      for (int j = 0; j < 3; ++j) {
        const Quat dir = quat_mul_vec(q0, 0.5 * Vec3::Unit(j));
        out[vo + j] = dir.x * qb.x + dir.y * qb.y + dir.z * qb.z + dir.w * qb.w;
      }
      out.segment<3>(vo + 3) = q_bar.segment<3>(qo + 4);
    } else if (RobotModel::q_dof(kind) == 1) {
      out[vo] = q_bar[qo];
    }
  }
  return out;
}

namespace {

// Chain of transforms from world down to `link`, in root-first order.
std::vector<int> ancestor_chain(const RobotModel& model, int link) {
  std::vector<int> chain;
  for (int i = link; i != -1; i = model.links[i].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

SpatialTransform link_joint_transform(const RobotModel& model, const VecX& q, int i) {
  const JointSpec& joint = model.links[i].joint;
  if (joint.kind == JointKind::floating_base) return base_transform(q.segment<7>(model.q_off[i]));
  if (joint.kind == JointKind::fixed) return SpatialTransform::identity();
  return joint_xs(joint, q[model.q_off[i]]).X;
}

}  // namespace

Vec3 fk_point(const RobotModel& model, const VecX& q, int link, const Vec3& point_local) {
  if (q.size() != model.n_q) throw DimensionMismatch("fk_point: bad q size");
  SpatialTransform W = SpatialTransform::identity();
  for (int i : ancestor_chain(model, link)) {
    const SpatialTransform Xj = link_joint_transform(model, q, i);
    const SpatialTransform Xup = st_multiply(Xj, model.links[i].joint.parent_to_joint);
    W = st_multiply(Xup, W);
  }
  return W.r + W.E.transpose() * point_local;
}

VecX fk_point_vjp(const RobotModel& model, const VecX& q, int link, const Vec3& point_local,
                  const Vec3& p_bar) {
  const std::vector<int> chain = ancestor_chain(model, link);
  std::vector<SpatialTransform> Xj(chain.size()), Xup(chain.size()), Wpre(chain.size());
  SpatialTransform W = SpatialTransform::identity();
  for (size_t k = 0; k < chain.size(); ++k) {
    const int i = chain[k];
    Xj[k] = link_joint_transform(model, q, i);
    Xup[k] = st_multiply(Xj[k], model.links[i].joint.parent_to_joint);
    Wpre[k] = W;
    W = st_multiply(Xup[k], W);
  }

  TransformGrad W_bar;
  W_bar.r = p_bar;
  W_bar.E = point_local * p_bar.transpose();

  VecX q_bar = VecX::Zero(model.n_q);
  for (int k = static_cast<int>(chain.size()) - 1; k >= 0; --k) {
    const int i = chain[k];
    const StMultiplyGrad gm = st_multiply_adjoint(Xup[k], Wpre[k], W_bar);
    W_bar = gm.X2;
    const StMultiplyGrad gj =
        st_multiply_adjoint(Xj[k], model.links[i].joint.parent_to_joint, gm.X1);
    const JointSpec& joint = model.links[i].joint;
    if (joint.kind == JointKind::floating_base) {
      q_bar.segment<7>(model.q_off[i]) += base_transform_vjp(q.segment<7>(model.q_off[i]), gj.X1);
    } else if (joint.kind != JointKind::fixed) {
      q_bar[model.q_off[i]] += joint_xs_vjp(joint, q[model.q_off[i]], gj.X1);
    }
  }
  return q_bar;
}

}  // namespace arti
