#pragma once

#include "arti/model.hpp"
#include "arti/spatial.hpp"

// Articulated Body Algorithm forward dynamics and its hand-written
// reverse-mode adjoint. The forward pass records every intermediate in an
// AbaTape; the backward pass mirrors the forward statements in exact reverse
// order, accumulating adjoints with the operator rules from spatial.hpp.

namespace arti {

// Which model parameters accumulate gradients during backward passes.
struct ParamMask {
  bool mass = false;
  bool com = false;
  bool inertia = false;
  bool damping = false;
  bool friction = false;
  bool restitution = false;
  bool any_inertial() const { return mass || com || inertia; }
};

struct ParamGrads {
  VecX mass;
  std::vector<Vec3> com;
  std::vector<Mat3> inertia;
  VecX damping;
  double mu = 0;
  double restitution = 0;

  void resize(const RobotModel& model) {
    mass = VecX::Zero(model.links.size());
    com.assign(model.links.size(), Vec3::Zero());
    inertia.assign(model.links.size(), Mat3::Zero());
    damping = VecX::Zero(model.links.size());
    mu = 0;
    restitution = 0;
  }
  ParamGrads& operator+=(const ParamGrads& o);
  ParamGrads& operator*=(double s);
};

struct DynamicsDerivatives {
  VecX q_bar;          // tangent space, n_v
  VecX q_bar_ambient;  // raw coordinates, n_q
  VecX qdot_bar;       // n_v
  VecX u_bar;          // n_u
  ParamGrads params;
};

// Per-link record of one ABA evaluation.
struct AbaBody {
  double q = 0, qd = 0;                    // 1-DoF joint coordinates
  Eigen::Matrix<double, 7, 1> q7 = Eigen::Matrix<double, 7, 1>::Zero();  // base block
  SpatialTransform Xj, Xup, W;
  SpatialVec S;
  SpatialVec xv, vJ, v, c;
  SpatialDyad I;   // rigid-body inertia
  SpatialVec h;    // I v
  SpatialDyad IA;  // articulated inertia after all child contributions
  SpatialVec pA;   // articulated bias force after all child contributions
  // 1-DoF joint quantities
  SpatialVec U;
  double D = 0, Dinv = 0, u = 0, qdd = 0;
  // propagated-to-parent quantities (bodies with a parent link)
  SpatialDyad Ia;
  SpatialVec pa, tmp_Iac, paX;
  SpatialDyad IAshift;
  // pass 3
  SpatialVec ap, a;
  // floating base block
  SpatialDyad Dinv6;
  SpatialVec u6, f6;
};

struct AbaTape {
  std::vector<AbaBody> body;
  VecX qdd;
  size_t byte_size() const;
};

// Composite-rigid-body record used to assemble the joint-space mass matrix
// for the contact solve (not by the ABA itself).
struct CrbaTape {
  std::vector<SpatialDyad> Ic;
  std::vector<std::vector<SpatialVec>> fchain;  // per 1-DoF joint, force walked rootward
  MatX M;
  size_t byte_size() const;
};

// Forward dynamics; writes the tape and returns qdd (n_v). Gravity, joint
// damping and the applied torques u all enter here.
VecX aba_forward(const RobotModel& model, const SystemState& state, const ControlInput& u,
                 AbaTape& tape);

// Adjoint accumulation buffers shared by the ABA, contact, and integrator
// backward passes; zeroed at the start of every step adjoint.
struct AbaAdjointWorkspace {
  std::vector<SpatialVec> a_bar, ap_bar, c_bar, v_bar, vJ_bar, xv_bar, h_bar, pA_bar, pa_bar, U_bar;
  std::vector<SpatialDyad> IA_bar, Ia_bar, I_bar;
  std::vector<TransformGrad> Xup_bar, W_bar;
  std::vector<double> u_bar, D_bar, qdd_bar;
  // floating base
  SpatialDyad Dinv6_bar;
  SpatialVec u6_bar, f6_bar, qdd6_bar;

  VecX q_bar_ambient;  // n_q
  VecX qd_bar;         // n_v
  VecX tau_bar;        // n_u
  ParamGrads params;

  void reset(const RobotModel& model);
};

// Runs the three ABA passes in reverse over an already-seeded workspace.
// Callers seed ws.qdd_bar / ws.qdd6_bar (and possibly v_bar, W_bar from a
// contact stage) before calling.
void aba_backward(const RobotModel& model, const AbaTape& tape, const ParamMask& mask,
                  AbaAdjointWorkspace& ws);

// Standalone entry point: reverse-mode derivatives of qdd alone.
DynamicsDerivatives aba_adjoint(const RobotModel& model, const SystemState& state,
                                const ControlInput& u, const AbaTape& tape, const VecX& qdd_bar,
                                const ParamMask& mask = {});

// Joint-space mass matrix via composite rigid bodies; needed by the contact
// stage (A = J M^-1 J^T).
void crba(const RobotModel& model, const AbaTape& aba_tape, CrbaTape& tape);
// Backward of crba given M_bar, accumulating into the shared workspace.
void crba_backward(const RobotModel& model, const AbaTape& aba_tape, const CrbaTape& tape,
                   const MatX& M_bar, const ParamMask& mask, AbaAdjointWorkspace& ws);

// Rigid-body spatial inertia from mass, com offset, and rotational inertia
// about the com.
SpatialDyad rigid_inertia(double mass, const Vec3& com, const Mat3& inertia_com);
struct RigidInertiaGrad {
  double mass = 0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
};
RigidInertiaGrad rigid_inertia_adjoint(double mass, const Vec3& com, const Mat3& inertia_com,
                                       const SpatialDyad& I_bar);

}  // namespace arti
