#include "arti/spatial.hpp"

namespace arti {

namespace {

void check_finite(const SpatialTransform& X, const SpatialVec& a, const char* op) {
  if (!finite(X) || !finite(a)) throw NonFiniteInput(std::string(op) + ": non-finite input");
}

}  // namespace

SpatialVec st_apply(StMode mode, const SpatialTransform& X, const SpatialVec& a) {
  check_finite(X, a, "st_apply");
  const Mat3& E = X.E;
  const Vec3& r = X.r;
  SpatialVec b;
  b.kind = a.kind;
  switch (mode) {
    case StMode::apply:
      b.w = E * a.w;
      b.v = E * (a.v - r.cross(a.w));
      break;
    case StMode::apply_inv:
      b.w = E.transpose() * a.w;
      b.v = E.transpose() * a.v + r.cross(Vec3(E.transpose() * a.w));
      break;
    case StMode::apply_trans:
      b.w = E.transpose() * a.w + r.cross(Vec3(E.transpose() * a.v));
      b.v = E.transpose() * a.v;
      break;
    case StMode::apply_invtrans:
      // Note: the transform round-trip identity apply_invtrans(apply_trans(a)) = a
      // requires E here, not E^T.
      b.w = E * (a.w - r.cross(a.v));
      b.v = E * a.v;
      break;
  }
  return b;
}

StApplyGrad st_apply_adjoint(StMode mode, const SpatialTransform& X, const SpatialVec& a,
                             const SpatialVec& b_bar) {
  check_finite(X, a, "st_apply_adjoint");
  if (!finite(b_bar)) throw NonFiniteInput("st_apply_adjoint: non-finite seed");
  const Mat3& E = X.E;
  const Vec3& r = X.r;
  StApplyGrad g;
  g.a.kind = a.kind;
  switch (mode) {
    case StMode::apply: {
      const Vec3 u = a.v - r.cross(a.w);
      const Vec3 Etb2 = E.transpose() * b_bar.v;
      g.X.E = b_bar.w * a.w.transpose() + b_bar.v * u.transpose();
      g.X.r = Etb2.cross(a.w);
      g.a.w = E.transpose() * b_bar.w + r.cross(Etb2);
      g.a.v = Etb2;
      break;
    }
    case StMode::apply_inv: {
      const Vec3 b2xr = b_bar.v.cross(r);
      g.X.E = a.w * (b_bar.w + b2xr).transpose() + a.v * b_bar.v.transpose();
      g.X.r = (E.transpose() * a.w).cross(b_bar.v);
      g.a.w = E * (b_bar.w + b2xr);
      g.a.v = E * b_bar.v;
      break;
    }
    case StMode::apply_trans: {
      const Vec3 b1xr = b_bar.w.cross(r);
      g.X.E = a.w * b_bar.w.transpose() + a.v * (b1xr + b_bar.v).transpose();
      g.X.r = (E.transpose() * a.v).cross(b_bar.w);
      g.a.w = E * b_bar.w;
      g.a.v = E * (b1xr + b_bar.v);
      break;
    }
    case StMode::apply_invtrans: {
      const Vec3 u = a.w - r.cross(a.v);
      const Vec3 Etb1 = E.transpose() * b_bar.w;
      g.X.E = b_bar.w * u.transpose() + b_bar.v * a.v.transpose();
      g.X.r = Etb1.cross(a.v);
      g.a.w = Etb1;
      g.a.v = E.transpose() * b_bar.v + r.cross(Etb1);
      break;
    }
  }
  return g;
}

SpatialTransform st_multiply(const SpatialTransform& X1, const SpatialTransform& X2) {
  if (!finite(X1) || !finite(X2)) throw NonFiniteInput("st_multiply: non-finite input");
  return SpatialTransform(X1.E * X2.E, X2.r + X2.E.transpose() * X1.r);
}

StMultiplyGrad st_multiply_adjoint(const SpatialTransform& X1, const SpatialTransform& X2,
                                   const TransformGrad& X0_bar) {
  if (!finite(X1) || !finite(X2)) throw NonFiniteInput("st_multiply_adjoint: non-finite input");
  StMultiplyGrad g;
  g.X1.E = X0_bar.E * X2.E.transpose();
  g.X1.r = X2.E * X0_bar.r;
  g.X2.E = X1.E.transpose() * X0_bar.E + X1.r * X0_bar.r.transpose();
  g.X2.r = X0_bar.r;
  return g;
}

SpatialVec crossm(const SpatialVec& a, const SpatialVec& b) {
  if (!finite(a) || !finite(b)) throw NonFiniteInput("crossm: non-finite input");
  return SpatialVec(a.w.cross(b.w), a.w.cross(b.v) + a.v.cross(b.w), VecKind::motion);
}

PairGrad crossm_adjoint(const SpatialVec& a, const SpatialVec& b, const SpatialVec& o) {
  PairGrad g;
  g.a.w = -o.w.cross(b.w) - o.v.cross(b.v);
  g.a.v = -o.v.cross(b.w);
  g.b.w = o.w.cross(a.w) + o.v.cross(a.v);
  g.b.v = o.v.cross(a.w);
  g.a.kind = a.kind;
  g.b.kind = b.kind;
  return g;
}

SpatialVec crossf(const SpatialVec& a, const SpatialVec& b) {
  if (!finite(a) || !finite(b)) throw NonFiniteInput("crossf: non-finite input");
  return SpatialVec(a.w.cross(b.w) + a.v.cross(b.v), a.w.cross(b.v), VecKind::force);
}

PairGrad crossf_adjoint(const SpatialVec& a, const SpatialVec& b, const SpatialVec& o) {
  PairGrad g;
  g.a.w = -o.w.cross(b.w) - o.v.cross(b.v);
  g.a.v = -o.w.cross(b.v);
  g.b.w = o.w.cross(a.w);
  g.b.v = o.w.cross(a.v) + o.v.cross(a.w);
  g.a.kind = a.kind;
  g.b.kind = b.kind;
  return g;
}

SpatialVec mul_ori(const SpatialDyad& m, const SpatialVec& a) {
  if (!finite(m) || !finite(a)) throw NonFiniteInput("mul_ori: non-finite input");
  return SpatialVec(m.m11 * a.w + m.m12 * a.v, m.m21 * a.w + m.m22 * a.v,
                    a.kind == VecKind::motion ? VecKind::force : VecKind::motion);
}

DyadVecGrad mul_ori_adjoint(const SpatialDyad& m, const SpatialVec& a, const SpatialVec& o) {
  DyadVecGrad g;
  g.m.m11 = o.w * a.w.transpose();
  g.m.m12 = o.w * a.v.transpose();
  g.m.m21 = o.v * a.w.transpose();
  g.m.m22 = o.v * a.v.transpose();
  g.a.w = m.m11.transpose() * o.w + m.m21.transpose() * o.v;
  g.a.v = m.m12.transpose() * o.w + m.m22.transpose() * o.v;
  g.a.kind = a.kind;
  return g;
}

SpatialVec mul_inv(const SpatialDyad& m, const SpatialVec& a) {
  if (!finite(m) || !finite(a)) throw NonFiniteInput("mul_inv: non-finite input");
  return SpatialVec(m.m11.transpose() * a.w + m.m12.transpose() * a.v,
                    m.m21.transpose() * a.w + m.m22.transpose() * a.v,
                    a.kind == VecKind::motion ? VecKind::force : VecKind::motion);
}

DyadVecGrad mul_inv_adjoint(const SpatialDyad& m, const SpatialVec& a, const SpatialVec& o) {
  DyadVecGrad g;
  g.m.m11 = a.w * o.w.transpose();
  g.m.m12 = a.v * o.w.transpose();
  g.m.m21 = a.w * o.v.transpose();
  g.m.m22 = a.v * o.v.transpose();
  g.a.w = m.m11 * o.w + m.m21 * o.v;
  g.a.v = m.m12 * o.w + m.m22 * o.v;
  g.a.kind = a.kind;
  return g;
}

SpatialDyad vvT(const SpatialVec& a, const SpatialVec& b) {
  if (!finite(a) || !finite(b)) throw NonFiniteInput("vvT: non-finite input");
  SpatialDyad m;
  m.m11 = a.w * b.w.transpose();
  m.m12 = a.w * b.v.transpose();
  m.m21 = a.v * b.w.transpose();
  m.m22 = a.v * b.v.transpose();
  return m;
}

PairGrad vvT_adjoint(const SpatialVec& a, const SpatialVec& b, const SpatialDyad& m_bar) {
  PairGrad g;
  g.a.w = m_bar.m11 * b.w + m_bar.m12 * b.v;
  g.a.v = m_bar.m21 * b.w + m_bar.m22 * b.v;
  g.b.w = m_bar.m11.transpose() * a.w + m_bar.m21.transpose() * a.v;
  g.b.v = m_bar.m12.transpose() * a.w + m_bar.m22.transpose() * a.v;
  g.a.kind = a.kind;
  g.b.kind = b.kind;
  return g;
}

Mat3 vcross_matrix(const Vec3& v) {
  if (!finite(v)) throw NonFiniteInput("vcross_matrix: non-finite input");
  return cross_matrix(v);
}

Vec3 vcross_matrix_adjoint(const Mat3& m_bar) {
  return Vec3(-m_bar(1, 2) + m_bar(2, 1), m_bar(0, 2) - m_bar(2, 0), -m_bar(0, 1) + m_bar(1, 0));
}

SpatialDyad st2sd(const SpatialTransform& X) {
  if (!finite(X)) throw NonFiniteInput("st2sd: non-finite input");
  SpatialDyad n;
  n.m11 = X.E;
  n.m12 = Mat3::Zero();
  n.m21 = -X.E * cross_matrix(X.r);
  n.m22 = X.E;
  return n;
}

TransformGrad st2sd_adjoint(const SpatialTransform& X, const SpatialDyad& n_bar) {
  TransformGrad g;
  g.E = n_bar.m11 + n_bar.m22 + n_bar.m21 * cross_matrix(X.r);
  g.r = vcross_matrix_adjoint(Mat3(-X.E.transpose() * n_bar.m21));
  return g;
}

SpatialDyad shift(const SpatialDyad& b, const SpatialTransform& X) {
  const Mat6 A = st2sd(X).to66();
  return SpatialDyad::from66(A.transpose() * b.to66() * A);
}

ShiftGrad shift_adjoint(const SpatialDyad& b, const SpatialTransform& X, const SpatialDyad& n_bar) {
  const Mat6 A = st2sd(X).to66();
  const Mat6 B = b.to66();
  const Mat6 C = n_bar.to66();
  ShiftGrad g;
  g.b = SpatialDyad::from66(A * C * A.transpose());
  const Mat6 A_bar = B * A * C.transpose() + B.transpose() * A * C;
  g.X = st2sd_adjoint(X, SpatialDyad::from66(A_bar));
  return g;
}

SpatialDyad dyad_inverse(const SpatialDyad& a) {
  if (!finite(a)) throw NonFiniteInput("dyad_inverse: non-finite input");
  const Mat6 m = a.to66();
  Eigen::PartialPivLU<Mat6> lu(m);
  const Vec6 diag = lu.matrixLU().diagonal();
  const double scale = m.cwiseAbs().maxCoeff();
  if (diag.cwiseAbs().minCoeff() < 1e-12 * std::max(scale, 1.0))
    throw SingularMatrix("dyad_inverse: pivot below threshold");
  return SpatialDyad::from66(lu.inverse());
}

SpatialDyad dyad_inverse_adjoint(const SpatialDyad& inv_value, const SpatialDyad& out_bar) {
  const Mat6 b = inv_value.to66();
  const Mat6 bb = out_bar.to66();
  return SpatialDyad::from66(-b.transpose() * bb * b.transpose());
}

// --- quaternion operators ---------------------------------------------------

Quat quat_mul_vec(const Quat& q, const Vec3& u) {
  if (!finite(q) || !finite(u)) throw NonFiniteInput("quat_mul_vec: non-finite input");
  return Quat(q.w * u.x() + q.y * u.z() - q.z * u.y(),
              q.w * u.y() + q.z * u.x() - q.x * u.z(),
              q.w * u.z() + q.x * u.y() - q.y * u.x(),
              -q.x * u.x() - q.y * u.y() - q.z * u.z());
}

QuatVecGrad quat_mul_vec_adjoint(const Quat& q, const Vec3& u, const Quat& o) {
  QuatVecGrad g;
  g.q.x = -o.y * u.z() + o.z * u.y() - o.w * u.x();
  g.q.y = o.x * u.z() - o.z * u.x() - o.w * u.y();
  g.q.z = -o.x * u.y() + o.y * u.x() - o.w * u.z();
  g.q.w = o.x * u.x() + o.y * u.y() + o.z * u.z();
  g.v.x() = o.x * q.w + o.y * q.z - o.z * q.y - o.w * q.x;
  g.v.y() = -o.x * q.z + o.y * q.w + o.z * q.x - o.w * q.y;
  g.v.z() = o.x * q.y - o.y * q.x + o.z * q.w - o.w * q.z;
  return g;
}

Quat quat_mul_qt(const Quat& q1, const Quat& q2) {
  if (!finite(q1) || !finite(q2)) throw NonFiniteInput("quat_mul_qt: non-finite input");
  return Quat(q1.w * q2.x + q1.x * q2.w + q1.y * q2.z - q1.z * q2.y,
              q1.w * q2.y + q1.y * q2.w + q1.z * q2.x - q1.x * q2.z,
              q1.w * q2.z + q1.z * q2.w + q1.x * q2.y - q1.y * q2.x,
              q1.w * q2.w - q1.x * q2.x - q1.y * q2.y - q1.z * q2.z);
}

QuatPairGrad quat_mul_qt_adjoint(const Quat& q1, const Quat& q2, const Quat& o) {
  QuatPairGrad g;
  g.q1.x = o.x * q2.w - o.y * q2.z + o.z * q2.y - o.w * q2.x;
  g.q1.y = o.x * q2.z + o.y * q2.w - o.z * q2.x - o.w * q2.y;
  g.q1.z = -o.x * q2.y + o.y * q2.x + o.z * q2.w - o.w * q2.z;
  g.q1.w = o.x * q2.x + o.y * q2.y + o.z * q2.z + o.w * q2.w;
  g.q2.x = o.x * q1.w + o.y * q1.z - o.z * q1.y - o.w * q1.x;
  g.q2.y = -o.x * q1.z + o.y * q1.w + o.z * q1.x - o.w * q1.y;
  g.q2.z = o.x * q1.y - o.y * q1.x + o.z * q1.w - o.w * q1.z;
  g.q2.w = o.x * q1.x + o.y * q1.y + o.z * q1.z + o.w * q1.w;
  return g;
}

Quat quat_normalize(const Quat& q) {
  if (!finite(q)) throw NonFiniteInput("quat_normalize: non-finite input");
  const double n = q.norm();
  if (n < 1e-12) throw ZeroNormQuaternion("quat_normalize: zero-norm quaternion");
  return q * (1.0 / n);
}

Quat quat_normalize_adjoint(const Quat& q, const Quat& o) {
  const double n = q.norm();
  if (n < 1e-12) throw ZeroNormQuaternion("quat_normalize_adjoint: zero-norm quaternion");
  const Quat unit = q * (1.0 / n);
  const double dot = o.x * unit.x + o.y * unit.y + o.z * unit.z + o.w * unit.w;
  Quat g = o + unit * (-dot);
  return g * (1.0 / n);
}

Quat quat_from_axis_angle(const Vec3& axis, double angle) {
  if (!finite(axis) || !finite(angle)) throw NonFiniteInput("quat_from_axis_angle");
  const double s = std::sin(0.5 * angle);
  return Quat(s * axis.x(), s * axis.y(), s * axis.z(), std::cos(0.5 * angle));
}

AxisAngleGrad quat_from_axis_angle_adjoint(const Vec3& axis, double angle, const Quat& o) {
  const double s = std::sin(0.5 * angle);
  const double c = std::cos(0.5 * angle);
  AxisAngleGrad g;
  g.axis = s * Vec3(o.x, o.y, o.z);
  g.angle = 0.5 * c * (axis.x() * o.x + axis.y() * o.y + axis.z() * o.z) - 0.5 * s * o.w;
  return g;
}

Mat3 quat_to_matrix(const Quat& q) {
  if (!finite(q)) throw NonFiniteInput("quat_to_matrix: non-finite input");
  const double x = q.x, y = q.y, z = q.z, w = q.w;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

Quat quat_to_matrix_adjoint(const Quat& q, const Mat3& rb) {
  const double x = q.x, y = q.y, z = q.z, w = q.w;
  Quat g(0, 0, 0, 0);
  g.x = 2 * (y * rb(0, 1) + z * rb(0, 2) + y * rb(1, 0) - 2 * x * rb(1, 1) - w * rb(1, 2) +
             z * rb(2, 0) + w * rb(2, 1) - 2 * x * rb(2, 2));
  g.y = 2 * (-2 * y * rb(0, 0) + x * rb(0, 1) + w * rb(0, 2) + x * rb(1, 0) + z * rb(1, 2) -
             w * rb(2, 0) + z * rb(2, 1) - 2 * y * rb(2, 2));
  g.z = 2 * (-2 * z * rb(0, 0) - w * rb(0, 1) + x * rb(0, 2) + w * rb(1, 0) - 2 * z * rb(1, 1) +
             y * rb(1, 2) + x * rb(2, 0) + y * rb(2, 1));
  g.w = 2 * (-z * rb(0, 1) + y * rb(0, 2) + z * rb(1, 0) - x * rb(1, 2) - y * rb(2, 0) +
             x * rb(2, 1));
  return g;
}

}  // namespace arti
