#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "arti/oracle.hpp"
#include "arti/step.hpp"
#include "test_util.hpp"

using namespace arti;
using namespace arti::testutil;

TEST_CASE("free-falling floating base accelerates at gravity") {
  std::mt19937_64 rng(31);
  RobotModel model = random_chain(rng, 1, true);
  model.links[0].collision.clear();
  SystemState state = default_state(model);
  AbaTape tape;
  const VecX qdd = aba_forward(model, state, ControlInput{VecX::Zero(0)}, tape);
  CHECK((qdd.head<3>()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(qdd.segment<3>(3).isApprox(Vec3(0, 0, -9.81), 1e-12));

  // rotated base: body-frame acceleration is R^T g
  SystemState rot = random_state(rng, model, 0.0);
  rot.qdot.setZero();
  const VecX qdd2 = aba_forward(model, rot, ControlInput{VecX::Zero(0)}, tape);
  const Quat q(rot.q[0], rot.q[1], rot.q[2], rot.q[3]);
  const Vec3 expect = quat_to_matrix(q).transpose() * Vec3(0, 0, -9.81);
  CHECK((qdd2.segment<3>(3) - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("point-mass pendulum closed form") {
  const RobotModel model = point_pendulum();
  for (const double q : {0.0, 0.3, M_PI / 2, -1.2}) {
    SystemState state = default_state(model);
    state.q[0] = q;
    AbaTape tape;
    const VecX qdd = aba_forward(model, state, ControlInput{VecX::Zero(1)}, tape);
    CHECK(qdd[0] == doctest::Approx(point_pendulum_qdd(model, q)).epsilon(1e-12));
  }
}

TEST_CASE("ABA matches the dense oracle on random chains") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const bool floating = trial % 3 == 0;
    const RobotModel model = random_chain(rng, n, floating, 0.3);
    const SystemState state = random_state(rng, model);
    const ControlInput u{random_vec(rng, model.n_u, 2.0)};
    AbaTape tape;
    const VecX qdd = aba_forward(model, state, u, tape);
    const VecX dense = dense_forward_dynamics(model, state, u);
    CAPTURE(n);
    CAPTURE(floating);
    CHECK((qdd - dense).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("mass matrix from CRBA matches the probing oracle") {
  std::mt19937_64 rng(33);
  for (const bool floating : {false, true}) {
    const RobotModel model = random_chain(rng, 5, floating);
    const SystemState state = random_state(rng, model);
    AbaTape tape;
    aba_forward(model, state, ControlInput{VecX::Zero(model.n_u)}, tape);
    CrbaTape crba_tape;
    crba(model, tape, crba_tape);
    const MatX M_dense = dense_mass_matrix(model, state.q);
    CAPTURE(floating);
    CHECK((crba_tape.M - M_dense).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("tape is regenerated bitwise") {
  std::mt19937_64 rng(34);
  const RobotModel model = random_chain(rng, 5, true);
  const SystemState state = random_state(rng, model);
  const ControlInput u{random_vec(rng, model.n_u)};
  AbaTape t1, t2;
  const VecX a1 = aba_forward(model, state, u, t1);
  const VecX a2 = aba_forward(model, state, u, t2);
  CHECK(memcmp(a1.data(), a2.data(), sizeof(double) * a1.size()) == 0);
  for (size_t i = 0; i < t1.body.size(); ++i) {
    CHECK(memcmp(t1.body[i].v.to6().data(), t2.body[i].v.to6().data(), 48) == 0);
    CHECK(t1.body[i].IA.to66() == t2.body[i].IA.to66());
  }
}

TEST_CASE("free-fall adjoint example") {
  std::mt19937_64 rng(35);
  RobotModel model = random_chain(rng, 1, true);
  model.links[0].collision.clear();
  const SystemState state = default_state(model);
  AbaTape tape;
  aba_forward(model, state, ControlInput{VecX::Zero(0)}, tape);
  VecX seed = VecX::Zero(6);
  seed[5] = 1.0;  // vertical acceleration
  const DynamicsDerivatives d = aba_adjoint(model, state, ControlInput{VecX::Zero(0)}, tape, seed);
  CHECK(d.u_bar.size() == 0);
  CHECK(d.q_bar.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(d.qdot_bar.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pendulum adjoint closed form at q = 0") {
  const RobotModel model = point_pendulum();
  const SystemState state = default_state(model);
  AbaTape tape;
  aba_forward(model, state, ControlInput{VecX::Zero(1)}, tape);
  VecX seed(1);
  seed << 0.37;
  const DynamicsDerivatives d = aba_adjoint(model, state, ControlInput{VecX::Zero(1)}, tape, seed);
  const double l = 1.0, mass = 1.0, I = model.links[0].inertia(1, 1);
  const double dqdd_dq = -mass * 9.81 * l / (mass * l * l + I);  // cos(0) = 1
  CHECK(d.q_bar[0] == doctest::Approx(dqdd_dq * 0.37).epsilon(1e-10));
}

namespace {

// Assembles the adjoint-side Jacobians row by row and compares against
// central differences probed in the tangent chart. Near-zero entries are
// compared against a floor scaled by the Jacobian magnitude so fd roundoff
// on exact zeros does not register as relative error.
void check_aba_jacobians(const RobotModel& model, const SystemState& state, const ControlInput& u,
                         double tol) {
  AbaTape tape;
  aba_forward(model, state, u, tape);
  const int nv = model.n_v;

  MatX Jq(nv, nv), Jv(nv, nv), Ju(nv, model.n_u);
  for (int i = 0; i < nv; ++i) {
    VecX seed = VecX::Zero(nv);
    seed[i] = 1.0;
    const DynamicsDerivatives d = aba_adjoint(model, state, u, tape, seed);
    Jq.row(i) = d.q_bar.transpose();
    Jv.row(i) = d.qdot_bar.transpose();
    Ju.row(i) = d.u_bar.transpose();
  }

  const double h = 1e-6;
  AbaTape scratch;
  MatX Fq(nv, nv), Fv(nv, nv), Fu(nv, model.n_u);
  for (int j = 0; j < 2 * nv; ++j) {
    VecX delta = VecX::Zero(2 * nv);
    delta[j] = 1.0;
    const SystemState sp = state_perturb(model, state, delta, h);
    const SystemState sm = state_perturb(model, state, delta, -h);
    const VecX fd =
        (aba_forward(model, sp, u, scratch) - aba_forward(model, sm, u, scratch)) / (2 * h);
    if (j < nv) Fq.col(j) = fd;
    else Fv.col(j - nv) = fd;
  }
  for (int j = 0; j < model.n_u; ++j) {
    VecX up = u.u, um = u.u;
    up[j] += h;
    um[j] -= h;
    Fu.col(j) = (aba_forward(model, state, ControlInput{up}, scratch) -
                 aba_forward(model, state, ControlInput{um}, scratch)) /
                (2 * h);
  }

  auto compare = [&](const MatX& analytic, const MatX& fd, const char* which) {
    const double floor = std::max(1e-3 * fd.cwiseAbs().maxCoeff(), 1e-9);
    for (int i = 0; i < analytic.rows(); ++i)
      for (int j = 0; j < analytic.cols(); ++j) {
        CAPTURE(which);
        CAPTURE(i);
        CAPTURE(j);
        CHECK(rel_err(analytic(i, j), fd(i, j), floor) < tol);
      }
  };
  compare(Jq, Fq, "dqdd/dq");
  compare(Jv, Fv, "dqdd/dqdot");
  compare(Ju, Fu, "dqdd/du");
}

}  // namespace

TEST_CASE("aba_adjoint matches finite differences on a 3-link chain") {
  std::mt19937_64 rng(36);
  const RobotModel model = random_chain(rng, 3, false, 0.2);
  const SystemState state = random_state(rng, model);
  const ControlInput u{random_vec(rng, model.n_u, 2.0)};
  check_aba_jacobians(model, state, u, 1e-5);
}

TEST_CASE("aba_adjoint matches finite differences with a floating base") {
  std::mt19937_64 rng(37);
  RobotModel model = random_chain(rng, 3, true, 0.1);
  for (auto& link : model.links) link.collision.clear();
  const SystemState state = random_state(rng, model);
  const ControlInput u{random_vec(rng, model.n_u, 2.0)};
  check_aba_jacobians(model, state, u, 2e-5);
}

TEST_CASE("parameter adjoints match finite differences") {
  std::mt19937_64 rng(38);
  const RobotModel model = random_chain(rng, 3, false, 0.4);
  const SystemState state = random_state(rng, model);
  const ControlInput u{random_vec(rng, model.n_u)};
  ParamMask mask;
  mask.mass = mask.com = mask.inertia = mask.damping = true;

  AbaTape tape;
  aba_forward(model, state, u, tape);
  const VecX seed = random_vec(rng, model.n_v);
  const DynamicsDerivatives d = aba_adjoint(model, state, u, tape, seed, mask);

  const double h = 1e-6;
  AbaTape scratch;
  for (size_t li = 0; li < model.links.size(); ++li) {
    // mass
    {
      RobotModel mp = model, mm = model;
      mp.links[li].mass += h;
      mm.links[li].mass -= h;
      const double fd = seed.dot(aba_forward(mp, state, u, scratch) -
                                 aba_forward(mm, state, u, scratch)) /
                        (2 * h);
      CHECK(rel_err(d.params.mass[li], fd, 1e-7) < 1e-5);
    }
    // com (x component)
    {
      RobotModel mp = model, mm = model;
      mp.links[li].com.x() += h;
      mm.links[li].com.x() -= h;
      const double fd = seed.dot(aba_forward(mp, state, u, scratch) -
                                 aba_forward(mm, state, u, scratch)) /
                        (2 * h);
      CHECK(rel_err(d.params.com[li].x(), fd, 1e-7) < 1e-5);
    }
    // inertia (yy)
    {
      RobotModel mp = model, mm = model;
      mp.links[li].inertia(1, 1) += h;
      mm.links[li].inertia(1, 1) -= h;
      const double fd = seed.dot(aba_forward(mp, state, u, scratch) -
                                 aba_forward(mm, state, u, scratch)) /
                        (2 * h);
      CHECK(rel_err(d.params.inertia[li](1, 1), fd, 1e-7) < 1e-5);
    }
    // damping
    {
      RobotModel mp = model, mm = model;
      mp.links[li].joint.damping += h;
      mm.links[li].joint.damping -= h;
      const double fd = seed.dot(aba_forward(mp, state, u, scratch) -
                                 aba_forward(mm, state, u, scratch)) /
                        (2 * h);
      CHECK(rel_err(d.params.damping[li], fd, 1e-7) < 2e-5);
    }
  }
}

TEST_CASE("mass matrix is symmetric positive definite across scenes") {
  std::mt19937_64 rng(39);
  for (const char* name : {"pendulum_3", "chain_6", "arm9"}) {
    const Scene scene = load(name);
    for (int t = 0; t < 50; ++t) {
      const SystemState state = random_state(rng, scene.model);
      const MatX M = dense_mass_matrix(scene.model, state.q);
      CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-9);
      Eigen::SelfAdjointEigenSolver<MatX> es(M);
      CAPTURE(name);
      CHECK(es.eigenvalues().minCoeff() > 0);
    }
  }
}

TEST_CASE("tape mismatch is detected") {
  std::mt19937_64 rng(40);
  const RobotModel m1 = random_chain(rng, 3, false);
  const RobotModel m2 = random_chain(rng, 5, false);
  const SystemState s1 = random_state(rng, m1);
  AbaTape tape;
  aba_forward(m1, s1, ControlInput{VecX::Zero(m1.n_u)}, tape);
  CHECK_THROWS_AS(
      aba_adjoint(m2, random_state(rng, m2), ControlInput{VecX::Zero(m2.n_u)}, tape,
                  VecX::Zero(m2.n_v)),
      TapeMismatch);
}

TEST_CASE("aba_adjoint covers prismatic joints") {
  RobotModel model;
  for (int i = 0; i < 3; ++i) {
    LinkSpec link;
    link.parent = i - 1;
    link.joint.kind = i == 1 ? JointKind::prismatic : JointKind::revolute;
    link.joint.axis = i == 1 ? Vec3::UnitZ() : Vec3::UnitY();
    link.joint.parent_to_joint =
        SpatialTransform(Mat3::Identity(), i == 0 ? Vec3::Zero() : Vec3(0.05, 0, -0.35));
    link.joint.damping = 0.1 * i;
    link.mass = 0.8;
    link.com = Vec3(0.02, -0.01, -0.2);
    link.inertia = Mat3::Identity() * 0.02;
    model.links.push_back(link);
  }
  model.finalize();
  std::mt19937_64 rng(41);
  const SystemState state = random_state(rng, model);
  const ControlInput u{random_vec(rng, model.n_u, 2.0)};
  check_aba_jacobians(model, state, u, 1e-5);
}
