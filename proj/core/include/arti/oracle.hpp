#pragma once

#include <functional>
#include <random>
#include <string>

#include "arti/model.hpp"

// Independent verification machinery: a dense forward-dynamics oracle built
// on inverse dynamics (no articulated-inertia recursion), central finite
// differences, and a randomized dot-product test for forward/adjoint operator
// pairs. Imports forward operators only; never the adjoint code paths it is
// checking.

namespace arti {

struct FdConfig {
  double h = 1e-6;  // central differences only
  double rel_tol = 1e-5;
  double abs_floor = 1e-9;
};

struct OracleResult {
  std::string name;
  double analytic = 0;  // adjoint-side value of the worst trial
  double numeric = 0;   // fd-side value of the worst trial
  double worst_rel_err = 0;
  int failing_index = -1;  // worst trial index
  uint64_t seed = 0;
  bool pass(double tol) const { return worst_rel_err < tol; }
};

// Recursive Newton-Euler inverse dynamics (gravity included):
// tau = M(q) qdd + h(q, qdot).
VecX rnea(const RobotModel& model, const VecX& q, const VecX& qdot, const VecX& qdd);

// Mass matrix assembled column-by-column with unit-acceleration probes.
MatX dense_mass_matrix(const RobotModel& model, const VecX& q);

// Dense oracle for contact-free forward dynamics: solves
// M qdd = tau_applied - h with an O(n^2..n^3) method.
VecX dense_forward_dynamics(const RobotModel& model, const SystemState& state,
                            const ControlInput& u);

using VecFn = std::function<VecX(const VecX&)>;

// Central differences, one probe pair per coordinate.
MatX fd_jacobian(const VecFn& fn, const VecX& at, const FdConfig& cfg = {});
VecX fd_gradient(const std::function<double(const VecX&)>& fn, const VecX& at,
                 const FdConfig& cfg = {});

// A forward/adjoint pair flattened to plain vectors for the harness.
struct DotTestOp {
  std::string name;
  int dim_in = 0;
  int dim_out = 0;
  VecFn fwd;
  std::function<VecX(const VecX&, const VecX&)> vjp;  // (theta, y_bar) -> theta_bar
  std::function<VecX(std::mt19937_64&)> sample;       // base points (valid inputs)
};

// For `trials` random (theta, delta, y_bar): compares <y_bar, Dfwd(theta) delta>
// (central differences) against <vjp(theta, y_bar), delta>.
OracleResult adjoint_dot_test(const DotTestOp& op, int trials, uint64_t seed,
                              const FdConfig& cfg = {});

// The full operator catalog (transforms, crosses, dyad ops, matrix ops,
// quaternion ops) wired up for the dot test.
std::vector<DotTestOp> standard_operator_suite();

}  // namespace arti
