#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>
#include <string>

namespace arti {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors. Every module throws a typed subclass of Error so callers (and the
// CLI exit-code mapping) can tell input problems from numeric failures.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteInput : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct SingularMassMatrix : Error { using Error::Error; };
struct ZeroNormQuaternion : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct NonFiniteState : Error { using Error::Error; };
struct TapeMismatch : Error { using Error::Error; };
struct ZeroDiagonal : Error { using Error::Error; };
struct RecordMismatch : Error { using Error::Error; };
struct IncompleteTrajectory : Error { using Error::Error; };
struct NonFiniteProbe : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };
struct MemoryBudgetExceeded : Error { using Error::Error; };

inline bool finite(double x) { return std::isfinite(x); }

template <typename Derived>
bool finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// ---------------------------------------------------------------------------
// Spatial algebra value types (6-D motion/force vectors, rigid transforms,
// 6x6 block operators). Layout follows the [w; v] = [angular; linear]
// convention throughout.
// ---------------------------------------------------------------------------

enum class VecKind : uint8_t { motion, force };

struct SpatialVec {
  Vec3 w = Vec3::Zero();  // angular part
  Vec3 v = Vec3::Zero();  // linear part
  VecKind kind = VecKind::motion;

  SpatialVec() = default;
  SpatialVec(const Vec3& w_, const Vec3& v_, VecKind k = VecKind::motion)
      : w(w_), v(v_), kind(k) {}

  static SpatialVec zero(VecKind k = VecKind::motion) {
    return SpatialVec(Vec3::Zero(), Vec3::Zero(), k);
  }

  Vec6 to6() const {
    Vec6 out;
    out << w, v;
    return out;
  }
  static SpatialVec from6(const Vec6& x, VecKind k = VecKind::motion) {
    return SpatialVec(x.head<3>(), x.tail<3>(), k);
  }

  SpatialVec operator+(const SpatialVec& o) const { return {w + o.w, v + o.v, kind}; }
  SpatialVec operator-(const SpatialVec& o) const { return {w - o.w, v - o.v, kind}; }
  SpatialVec operator*(double s) const { return {w * s, v * s, kind}; }
  SpatialVec& operator+=(const SpatialVec& o) {
    w += o.w;
    v += o.v;
    return *this;
  }
  double dot(const SpatialVec& o) const { return w.dot(o.w) + v.dot(o.v); }
};

inline SpatialVec operator*(double s, const SpatialVec& a) { return a * s; }

// Rigid coordinate transform (E, r): motion vectors map parent->child as
// [E w, E (v - r x w)], with r the child origin expressed in parent
// coordinates and E the parent->child rotation.
struct SpatialTransform {
  Mat3 E = Mat3::Identity();
  Vec3 r = Vec3::Zero();

  SpatialTransform() = default;
  SpatialTransform(const Mat3& E_, const Vec3& r_) : E(E_), r(r_) {}
  static SpatialTransform identity() { return {}; }
};

// Adjoint of a transform: same shape, but E is an unconstrained 3x3
// (gradients live in the ambient space of matrix entries).
struct TransformGrad {
  Mat3 E = Mat3::Zero();
  Vec3 r = Vec3::Zero();
  TransformGrad& operator+=(const TransformGrad& o) {
    E += o.E;
    r += o.r;
    return *this;
  }
};

// 6x6 operator stored as four 3x3 blocks (articulated inertias and friends).
struct SpatialDyad {
  Mat3 m11 = Mat3::Zero();
  Mat3 m12 = Mat3::Zero();
  Mat3 m21 = Mat3::Zero();
  Mat3 m22 = Mat3::Zero();

  static SpatialDyad zero() { return {}; }
  static SpatialDyad identity() {
    SpatialDyad d;
    d.m11 = Mat3::Identity();
    d.m22 = Mat3::Identity();
    return d;
  }

  Mat6 to66() const {
    Mat6 m;
    m.block<3, 3>(0, 0) = m11;
    m.block<3, 3>(0, 3) = m12;
    m.block<3, 3>(3, 0) = m21;
    m.block<3, 3>(3, 3) = m22;
    return m;
  }
  static SpatialDyad from66(const Mat6& m) {
    SpatialDyad d;
    d.m11 = m.block<3, 3>(0, 0);
    d.m12 = m.block<3, 3>(0, 3);
    d.m21 = m.block<3, 3>(3, 0);
    d.m22 = m.block<3, 3>(3, 3);
    return d;
  }

  SpatialDyad operator+(const SpatialDyad& o) const {
    SpatialDyad d;
    d.m11 = m11 + o.m11;
    d.m12 = m12 + o.m12;
    d.m21 = m21 + o.m21;
    d.m22 = m22 + o.m22;
    return d;
  }
  SpatialDyad operator-(const SpatialDyad& o) const {
    SpatialDyad d;
    d.m11 = m11 - o.m11;
    d.m12 = m12 - o.m12;
    d.m21 = m21 - o.m21;
    d.m22 = m22 - o.m22;
    return d;
  }
  SpatialDyad operator*(double s) const {
    SpatialDyad d;
    d.m11 = m11 * s;
    d.m12 = m12 * s;
    d.m21 = m21 * s;
    d.m22 = m22 * s;
    return d;
  }
  SpatialDyad& operator+=(const SpatialDyad& o) {
    m11 += o.m11;
    m12 += o.m12;
    m21 += o.m21;
    m22 += o.m22;
    return *this;
  }
};

struct Quat {
  double x = 0, y = 0, z = 0, w = 1;

  Quat() = default;
  Quat(double x_, double y_, double z_, double w_) : x(x_), y(y_), z(z_), w(w_) {}
  static Quat identity() { return {0, 0, 0, 1}; }

  double norm() const { return std::sqrt(x * x + y * y + z * z + w * w); }
  Eigen::Vector4d coeffs() const { return {x, y, z, w}; }
  static Quat from_coeffs(const Eigen::Vector4d& c) { return {c[0], c[1], c[2], c[3]}; }

  Quat operator+(const Quat& o) const { return {x + o.x, y + o.y, z + o.z, w + o.w}; }
  Quat operator*(double s) const { return {x * s, y * s, z * s, w * s}; }
  Quat& operator+=(const Quat& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    w += o.w;
    return *this;
  }
};

// Value/adjoint pair; the adjoint of s has the shape of s.
template <typename T>
struct AdjointPair {
  T value{};
  T adjoint{};
};

inline bool finite(const SpatialVec& a) { return finite(a.w) && finite(a.v); }
inline bool finite(const SpatialTransform& X) { return finite(X.E) && finite(X.r); }
inline bool finite(const SpatialDyad& d) {
  return finite(d.m11) && finite(d.m12) && finite(d.m21) && finite(d.m22);
}
inline bool finite(const Quat& q) {
  return finite(q.x) && finite(q.y) && finite(q.z) && finite(q.w);
}

inline Mat3 cross_matrix(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

}  // namespace arti
