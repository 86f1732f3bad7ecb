#pragma once

#include "arti/types.hpp"

// Spatial-algebra primitives and their reverse-mode adjoints. Forward
// formulas follow Featherstone's coordinate-transform conventions:
//   apply          motion vector, parent -> child
//   apply_inv      motion vector, child -> parent
//   apply_trans    force vector,  child -> parent
//   apply_invtrans force vector,  parent -> child
//
// Every adjoint here was derived by hand and is validated against central
// finite differences (see the dot-product test harness); adjoint outputs are
// meant to be *added* into caller-owned accumulators.

namespace arti {

enum class StMode : uint8_t { apply, apply_inv, apply_trans, apply_invtrans };

struct StApplyGrad {
  TransformGrad X;
  SpatialVec a;
};

struct StMultiplyGrad {
  TransformGrad X1;
  TransformGrad X2;
};

struct PairGrad {
  SpatialVec a;
  SpatialVec b;
};

struct DyadVecGrad {
  SpatialDyad m;
  SpatialVec a;
};

struct ShiftGrad {
  SpatialDyad b;
  TransformGrad X;
};

SpatialVec st_apply(StMode mode, const SpatialTransform& X, const SpatialVec& a);
StApplyGrad st_apply_adjoint(StMode mode, const SpatialTransform& X, const SpatialVec& a,
                             const SpatialVec& b_bar);

SpatialTransform st_multiply(const SpatialTransform& X1, const SpatialTransform& X2);
StMultiplyGrad st_multiply_adjoint(const SpatialTransform& X1, const SpatialTransform& X2,
                                   const TransformGrad& X0_bar);

// crossm: motion x motion -> motion. crossf: motion x force -> force.
SpatialVec crossm(const SpatialVec& a, const SpatialVec& b);
PairGrad crossm_adjoint(const SpatialVec& a, const SpatialVec& b, const SpatialVec& out_bar);
SpatialVec crossf(const SpatialVec& a, const SpatialVec& b);
PairGrad crossf_adjoint(const SpatialVec& a, const SpatialVec& b, const SpatialVec& out_bar);

SpatialVec mul_ori(const SpatialDyad& m, const SpatialVec& a);
DyadVecGrad mul_ori_adjoint(const SpatialDyad& m, const SpatialVec& a, const SpatialVec& out_bar);

// Blockwise-transposed dyad multiply: [m11^T w + m12^T v, m21^T w + m22^T v].
SpatialVec mul_inv(const SpatialDyad& m, const SpatialVec& a);
DyadVecGrad mul_inv_adjoint(const SpatialDyad& m, const SpatialVec& a, const SpatialVec& out_bar);

SpatialDyad vvT(const SpatialVec& a, const SpatialVec& b);
PairGrad vvT_adjoint(const SpatialVec& a, const SpatialVec& b, const SpatialDyad& m_bar);

Mat3 vcross_matrix(const Vec3& v);
Vec3 vcross_matrix_adjoint(const Mat3& m_bar);

// st2sd(X) = [[E, 0], [-E r_x, E]], the 6x6 matrix form of apply().
SpatialDyad st2sd(const SpatialTransform& X);
TransformGrad st2sd_adjoint(const SpatialTransform& X, const SpatialDyad& n_bar);

// shift(B, X) = st2sd(X)^T B st2sd(X); moves an inertia dyad from child to
// parent coordinates.
SpatialDyad shift(const SpatialDyad& b, const SpatialTransform& X);
ShiftGrad shift_adjoint(const SpatialDyad& b, const SpatialTransform& X, const SpatialDyad& n_bar);

// Inverse of a dyad seen as a 6x6 matrix. Adjoint follows the matrix-inverse
// rule a_bar = -b^T out_bar b^T with b the inverse.
SpatialDyad dyad_inverse(const SpatialDyad& a);
SpatialDyad dyad_inverse_adjoint(const SpatialDyad& inv_value, const SpatialDyad& out_bar);

// --- quaternion operators ---------------------------------------------------

struct QuatVecGrad {
  Quat q;
  Vec3 v;
};
struct QuatPairGrad {
  Quat q1;
  Quat q2;
};
struct AxisAngleGrad {
  Vec3 axis;
  double angle = 0;
};

// mul_vec(q, u) = q (x) (u, 0); a building block of quaternion rotation.
Quat quat_mul_vec(const Quat& q, const Vec3& u);
QuatVecGrad quat_mul_vec_adjoint(const Quat& q, const Vec3& u, const Quat& out_bar);

Quat quat_mul_qt(const Quat& q1, const Quat& q2);
QuatPairGrad quat_mul_qt_adjoint(const Quat& q1, const Quat& q2, const Quat& out_bar);

Quat quat_normalize(const Quat& q);
Quat quat_normalize_adjoint(const Quat& q, const Quat& out_bar);

Quat quat_from_axis_angle(const Vec3& axis, double angle);
AxisAngleGrad quat_from_axis_angle_adjoint(const Vec3& axis, double angle, const Quat& out_bar);

// Rotation matrix (body -> world) of a unit quaternion.
Mat3 quat_to_matrix(const Quat& q);
Quat quat_to_matrix_adjoint(const Quat& q, const Mat3& r_bar);

}  // namespace arti
