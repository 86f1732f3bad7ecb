#pragma once

#include "arti/dynamics.hpp"
#include "arti/model.hpp"

// Contact pipeline: detection, MLCP assembly (A x + relative velocities with
// box bounds), the fixed-sweep projected Gauss-Seidel solver, and its exact
// reverse-mode adjoint over the truncated iteration map.

namespace arti {

struct ContactPoint {
  int body_a = 0;
  int body_b = -1;  // -1 = ground plane z = 0
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // points from body_b towards body_a
  double depth = 0;
  ContactMaterial material;
};

struct MlcpProblem {
  // Row convention: the solver iterates x(i) = clamp((b(i) - d) / A(i,i)),
  // i.e. b is the projected-Gauss-Seidel right-hand side: target contact
  // velocity minus the unconstrained relative velocity.
  MatX A;
  VecX b;
  VecX c_minus, c_plus;  // fixed bounds; coupled rows use mu * x(coupled_row)
  struct Row {
    int contact = 0;
    int dir = 0;          // 0 normal, 1 tangent1, 2 tangent2
    int coupled_row = -1;  // normal row whose impulse scales the friction box
    double mu = 0;
  };
  std::vector<Row> rows;
  int size() const { return static_cast<int>(rows.size()); }
};

struct PgsRecord {
  MatX V_d;   // niter x m, accumulated off-diagonal sums
  MatX V_x1;  // niter x m, iterate before each sweep
  MatX V_x2;  // niter x m, iterate after each sweep
  Eigen::Matrix<int8_t, Eigen::Dynamic, Eigen::Dynamic> clamp_mask;  // -1 lo, 0 free, +1 hi
  int niter = 0;
  size_t byte_size() const {
    return (V_d.size() + V_x1.size() + V_x2.size()) * sizeof(double) + clamp_mask.size();
  }
};

struct PgsGrads {
  MatX A_bar;
  VecX b_bar;
  VecX c_minus_bar, c_plus_bar;  // fixed-bound rows only
  VecX mu_bar;                   // per coupled row
};

// All sphere/capsule-vs-plane and sphere-vs-sphere contacts with
// depth >= -margin, sorted by (body_a, body_b, point) for determinism.
std::vector<ContactPoint> detect_contacts(const RobotModel& model, const SystemState& state,
                                          double margin = 1e-4);

// Fixed-sweep PGS; x starts at zero, rows are visited in order each sweep,
// and every update is projected to its (possibly friction-coupled) box.
std::pair<VecX, PgsRecord> pgs_solve(const MlcpProblem& P, int niter);

// Exact adjoint of the niter-sweep iterate map. Unclamped updates follow the
// Gauss-Seidel reversal; clamped updates send the adjoint to the active bound
// (friction-coupled bounds route to mu and the coupled normal impulse).
PgsGrads pgs_adjoint(const MlcpProblem& P, const PgsRecord& record, const VecX& x_bar);

// --- contact stage of one simulation step (used by step_forward) -------------

struct JColumn {
  int col = 0;         // qdot coordinate
  int body = 0;        // link owning the joint coordinate
  SpatialVec m_w;      // unit joint motion in world frame
  SpatialVec m_c;      // same, shifted to the contact point
};

struct ContactGeomRec {
  int kind = 0;  // 0 sphere/capsule endpoint vs plane, 1 sphere vs sphere
  int body_a = 0, body_b = -1;
  Vec3 off_a = Vec3::Zero(), off_b = Vec3::Zero();
  double Ra = 0, Rb = 0;
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();  // world shape centers
  Vec3 u = Vec3::Zero();                      // ca - cb (sphere-sphere)
  double dist = 0;
  Vec3 normal = Vec3::UnitZ(), point = Vec3::Zero();
  double depth = 0;
  int e_idx = 0;  // axis used for the tangent basis
  Vec3 t1u = Vec3::Zero(), t1 = Vec3::Zero(), t2 = Vec3::Zero();
};

struct ContactTape {
  std::vector<ContactPoint> contacts;
  std::vector<ContactGeomRec> geom;
  std::vector<std::vector<JColumn>> jcols_a, jcols_b;  // per contact
  CrbaTape crba;
  MatX Minv;
  MatX J;  // m x n_v
  MlcpProblem mlcp;
  VecX jq;     // J qdot (pre-step relative velocities)
  VecX jv;     // J v_free
  PgsRecord record;
  VecX x;      // impulses
  VecX w_aux;  // Minv J^T x
  size_t byte_size() const;
};

struct ContactStageConfig {
  double dt = 0.01;
  int pgs_iters = 50;
  double baumgarte = 0.2;
  double margin = 1e-4;
  double regularization = 1e-10;
};

// Contact geometry against the current world transforms.
std::vector<ContactGeomRec> detect_geoms(const RobotModel& model,
                                         const std::vector<SpatialTransform>& W, double margin);

// Assembles J, M^-1, and the MLCP for tape.geom (already detected).
void contact_assemble(const RobotModel& model, const SystemState& state, const AbaTape& aba_tape,
                      const VecX& v_free, const ContactStageConfig& cfg, ContactTape& tape);

// Runs detection + assembly + solve; returns the post-impulse velocity
// (v_free when nothing touches). Fills `tape`.
VecX contact_stage(const RobotModel& model, const SystemState& state, const AbaTape& aba_tape,
                   const VecX& v_free, const ContactStageConfig& cfg, ContactTape& tape);

// Reverse of contact_stage. Consumes the adjoint of the post-impulse
// velocity, returns the adjoint of v_free, and accumulates pose/velocity/
// parameter adjoints into the shared workspace.
VecX contact_stage_backward(const RobotModel& model, const SystemState& state,
                            const AbaTape& aba_tape, const ContactTape& tape, const VecX& v_free,
                            const ContactStageConfig& cfg, const VecX& vpost_bar,
                            const ParamMask& mask, AbaAdjointWorkspace& ws);

}  // namespace arti
