#pragma once

#include <optional>
#include <string>
#include <vector>

#include "arti/spatial.hpp"
#include "arti/types.hpp"

namespace arti {

enum class JointKind : uint8_t { revolute, prismatic, fixed, floating_base };

struct JointSpec {
  JointKind kind = JointKind::revolute;
  Vec3 axis = Vec3::UnitZ();            // revolute/prismatic only, unit norm
  SpatialTransform parent_to_joint;     // fixed tree transform
  double damping = 0.0;                 // N*m*s/rad, >= 0
  double effort_limit = std::numeric_limits<double>::infinity();
};

struct CollisionShape {
  enum class Type : uint8_t { sphere, capsule } type = Type::sphere;
  double radius = 0.1;
  double half_len = 0.0;        // capsule only
  Vec3 offset = Vec3::Zero();   // shape center in link frame
  Vec3 axis = Vec3::UnitZ();    // capsule axis in link frame, unit norm
};

struct ContactMaterial {
  double mu = 0.5;           // sliding friction coefficient, >= 0
  double restitution = 0.0;  // in [0, 1]
};

struct LinkSpec {
  std::string name;
  int parent = -1;  // -1 = world
  JointSpec joint;
  double mass = 1.0;              // kg, > 0
  Vec3 com = Vec3::Zero();        // center of mass in link frame
  Mat3 inertia = Mat3::Identity() * 1e-3;  // about com, symmetric positive definite
  std::vector<CollisionShape> collision;
};

// Kinematic tree with per-link coordinate bookkeeping. Immutable after
// finalize(); share freely across threads.
struct RobotModel {
  std::vector<LinkSpec> links;
  Vec3 gravity = Vec3(0, 0, -9.81);
  ContactMaterial material;

  int n_q = 0;  // position coordinates (quaternion block for a floating base)
  int n_v = 0;  // velocity coordinates
  int n_u = 0;  // actuated joints (revolute/prismatic)
  bool has_floating_base = false;

  std::vector<int> q_off;    // per link, offset into q
  std::vector<int> v_off;    // per link, offset into qdot
  std::vector<int> u_index;  // per link, actuator index or -1

  static int q_dof(JointKind k) {
    switch (k) {
      case JointKind::revolute:
      case JointKind::prismatic: return 1;
      case JointKind::fixed: return 0;
      case JointKind::floating_base: return 7;
    }
    return 0;
  }
  static int v_dof(JointKind k) { return k == JointKind::floating_base ? 6 : q_dof(k); }

  // Computes offsets and checks every invariant; throws ValidationError.
  void finalize();
};

struct SystemState {
  VecX q;
  VecX qdot;
};

struct ControlInput {
  VecX u;
};

void validate_state(const RobotModel& model, const SystemState& state);

// Flat state layout is [q; qdot], stable across the library.
VecX state_pack(const RobotModel& model, const VecX& q, const VecX& qdot);
std::pair<VecX, VecX> state_unpack(const RobotModel& model, const VecX& x);

SystemState default_state(const RobotModel& model);

// --- joint coordinate transforms ---------------------------------------------

struct JointXS {
  SpatialTransform X;  // joint frame transform from joint coordinate(s)
  SpatialVec S;        // motion subspace (1-DoF joints)
};

// 1-DoF joint transform. Revolute: E = R(axis, q)^T, r = 0, S = [axis, 0].
// Prismatic: E = I, r = q*axis, S = [0, axis].
JointXS joint_xs(const JointSpec& joint, double q);
double joint_xs_vjp(const JointSpec& joint, double q, const TransformGrad& X_bar);

// Floating-base transform from the 7-coordinate block [quat(x,y,z,w), pos].
// The quaternion is normalized internally so the map is well defined (and
// radially constant) off the unit sphere.
SpatialTransform base_transform(const VecX& q7);
VecX base_transform_vjp(const VecX& q7, const TransformGrad& X_bar);

// --- tangent-space chart ------------------------------------------------------
//
// Gradients with respect to q are reported in an n_v-dimensional tangent
// space: 1-DoF joints use their coordinate directly; the floating-base
// orientation uses a body-frame rotation vector phi with
// q(phi) = q0 (x) [phi/2, 1] (first order).

// Moves a state along a 2*n_v tangent direction scaled by h (FD probing).
SystemState state_perturb(const RobotModel& model, const SystemState& state, const VecX& delta,
                          double h);

// Converts an ambient gradient (n_q for q, n_v for qdot) to the tangent chart.
VecX tangent_from_ambient(const RobotModel& model, const SystemState& state, const VecX& q_bar,
                          const VecX& v_bar);

// --- forward kinematics -------------------------------------------------------

// World position of a point given in a link's frame.
Vec3 fk_point(const RobotModel& model, const VecX& q, int link, const Vec3& point_local);
// Reverse-mode derivative: returns the ambient q gradient (size n_q).
VecX fk_point_vjp(const RobotModel& model, const VecX& q, int link, const Vec3& point_local,
                  const Vec3& p_bar);

}  // namespace arti
