#include <doctest.h>

#include "arti/matx.hpp"
#include "arti/oracle.hpp"
#include "arti/spatial.hpp"
#include "test_util.hpp"

using namespace arti;

TEST_CASE("operator catalog passes the adjoint dot test") {
  for (const DotTestOp& op : standard_operator_suite()) {
    const OracleResult r = adjoint_dot_test(op, 100, 42);
    CAPTURE(op.name);
    CAPTURE(r.failing_index);
    CHECK(r.worst_rel_err < 1e-5);
  }
}

TEST_CASE("st_apply identity and worked examples") {
  const SpatialVec a(Vec3(1, 2, 3), Vec3(4, 5, 6));
  const SpatialVec b = st_apply(StMode::apply, SpatialTransform::identity(), a);
  CHECK(b.w == Vec3(1, 2, 3));
  CHECK(b.v == Vec3(4, 5, 6));

  // E = I, r = e_z, a = ([1,0,0], 0): b = [a1, a2 - r x a1] = ([1,0,0], [0,-1,0])
  const SpatialTransform X(Mat3::Identity(), Vec3(0, 0, 1));
  const SpatialVec c = st_apply(StMode::apply, X, SpatialVec(Vec3(1, 0, 0), Vec3::Zero()));
  CHECK(c.w.isApprox(Vec3(1, 0, 0)));
  CHECK(c.v.isApprox(Vec3(0, -1, 0)));
}

TEST_CASE("transform round trips") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Quat q(normal(rng), normal(rng), normal(rng), normal(rng));
    q = quat_normalize(q);
    const SpatialTransform X(quat_to_matrix(q).transpose(),
                             Vec3(normal(rng), normal(rng), normal(rng)));
    const SpatialVec a(Vec3(normal(rng), normal(rng), normal(rng)),
                       Vec3(normal(rng), normal(rng), normal(rng)));
    const SpatialVec r1 = st_apply(StMode::apply_inv, X, st_apply(StMode::apply, X, a));
    const SpatialVec r2 = st_apply(StMode::apply_invtrans, X, st_apply(StMode::apply_trans, X, a));
    CHECK((r1.to6() - a.to6()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r2.to6() - a.to6()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("st_apply adjoint r_bar worked example") {
  const SpatialTransform X(Mat3::Identity(), Vec3(0, 0, 1));
  const SpatialVec a(Vec3(1, 0, 0), Vec3::Zero());
  const SpatialVec b_bar(Vec3::Zero(), Vec3(0, 1, 0));
  const StApplyGrad g = st_apply_adjoint(StMode::apply, X, a, b_bar);
  // r_bar = (E^T b_bar2) x a1 = [0,1,0] x [1,0,0] = [0,0,-1]
  CHECK(g.X.r.isApprox(Vec3(0, 0, -1)));
  // identity transform passes the vector adjoint through
  const StApplyGrad gid = st_apply_adjoint(StMode::apply, SpatialTransform::identity(),
                                           SpatialVec(Vec3::Zero(), Vec3::Zero()),
                                           SpatialVec(Vec3(1, 0, 0), Vec3::Zero()));
  CHECK(gid.a.w.isApprox(Vec3(1, 0, 0)));
  CHECK(gid.a.v.isApprox(Vec3::Zero()));
}

TEST_CASE("st_multiply identities") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Quat q = quat_normalize(Quat(normal(rng), normal(rng), normal(rng), normal(rng)));
  const SpatialTransform X2(quat_to_matrix(q).transpose(), Vec3(0.3, -0.2, 0.9));
  const SpatialTransform r = st_multiply(SpatialTransform::identity(), X2);
  CHECK(r.E.isApprox(X2.E));
  CHECK(r.r.isApprox(X2.r));

  const SpatialTransform X1(Mat3::Identity(), Vec3(1, 0, 0));
  const SpatialTransform r2 = st_multiply(X1, SpatialTransform::identity());
  CHECK(r2.E.isApprox(Mat3::Identity()));
  CHECK(r2.r.isApprox(Vec3(1, 0, 0)));
}

TEST_CASE("cross product operators") {
  const SpatialVec aligned(Vec3(1, 0, 0), Vec3(1, 0, 0));
  const SpatialVec z = crossm(aligned, aligned);
  CHECK(z.to6().cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.kind == VecKind::motion);

  const SpatialVec f = crossf(SpatialVec(Vec3(0, 0, 1), Vec3::Zero()),
                              SpatialVec(Vec3(1, 0, 0), Vec3::Zero(), VecKind::force));
  CHECK(f.w.isApprox(Vec3(0, 1, 0)));
  CHECK(f.v.isApprox(Vec3::Zero()));
  CHECK(f.kind == VecKind::force);
}

TEST_CASE("dyad operators worked examples") {
  SpatialDyad ones;
  ones.m11 = ones.m12 = ones.m21 = ones.m22 = Mat3::Identity();
  const SpatialVec r = mul_ori(ones, SpatialVec(Vec3(1, 2, 3), Vec3(4, 5, 6)));
  CHECK(r.w.isApprox(Vec3(5, 7, 9)));
  CHECK(r.v.isApprox(Vec3(5, 7, 9)));

  const SpatialDyad sd = st2sd(SpatialTransform::identity());
  CHECK(sd.m11.isApprox(Mat3::Identity()));
  CHECK(sd.m12.isZero());
  CHECK(sd.m21.isZero());
  CHECK(sd.m22.isApprox(Mat3::Identity()));
}

TEST_CASE("matrix operators worked examples") {
  const MatX I = MatX::Identity(4, 4);
  CHECK(mat_inverse(I).isApprox(I));
  MatX bb = MatX::Random(4, 4);
  CHECK(mat_inverse_adjoint(I, bb).isApprox(-bb));

  MatX B = MatX::Random(5, 5);
  CHECK(mat_AtBA(MatX::Identity(5, 5), B).isApprox(B));
  MatX cb = MatX::Random(5, 5);
  CHECK(mat_AtBA_adjoint(MatX::Identity(5, 5), B, cb).b.isApprox(cb));
}

TEST_CASE("quaternion operators") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Quat q(0.1, -0.4, 0.2, 0.88);
  const Quat r = quat_mul_qt(q, Quat::identity());
  CHECK(r.x == doctest::Approx(q.x));
  CHECK(r.w == doctest::Approx(q.w));

  for (int t = 0; t < 50; ++t) {
    const Quat q1(normal(rng), normal(rng), normal(rng), normal(rng));
    const Quat q2(normal(rng), normal(rng), normal(rng), normal(rng));
    const Quat p = quat_mul_qt(q1, q2);
    CHECK(std::abs(p.norm() - q1.norm() * q2.norm()) < 1e-12 * std::max(1.0, p.norm()));
  }
}

TEST_CASE("adjoint linearity in the output seed") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const DotTestOp& op : standard_operator_suite()) {
    const VecX theta = op.sample(rng);
    const VecX y1 = testutil::random_vec(rng, op.dim_out);
    const VecX y2 = testutil::random_vec(rng, op.dim_out);
    const double alpha = normal(rng), beta = normal(rng);
    const VecX lhs = op.vjp(theta, alpha * y1 + beta * y2);
    const VecX rhs = alpha * op.vjp(theta, y1) + beta * op.vjp(theta, y2);
    CAPTURE(op.name);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("error paths") {
  SpatialVec bad(Vec3(std::nan(""), 0, 0), Vec3::Zero());
  CHECK_THROWS_AS(st_apply(StMode::apply, SpatialTransform::identity(), bad), NonFiniteInput);
  CHECK_THROWS_AS(crossm(bad, bad), NonFiniteInput);

  MatX singular = MatX::Zero(3, 3);
  singular(0, 0) = 1;
  singular(1, 1) = 1;
  CHECK_THROWS_AS(mat_inverse(singular), SingularMatrix);
  CHECK_THROWS_AS(mat_vec(MatX::Identity(2, 2), VecX::Zero(3)), ShapeMismatch);
  CHECK_THROWS_AS(quat_normalize(Quat(0, 0, 0, 0)), ZeroNormQuaternion);
}

TEST_CASE("dot-test harness flags a corrupted adjoint") {
  DotTestOp bad;
  bad.name = "crossf_sign_flipped";
  bad.dim_in = 12;
  bad.dim_out = 6;
  bad.fwd = [](const VecX& t) {
    return crossf(SpatialVec(t.segment<3>(0), t.segment<3>(3)),
                  SpatialVec(t.segment<3>(6), t.segment<3>(9)))
        .to6();
  };
  bad.vjp = [](const VecX& t, const VecX& yb) {
    const PairGrad g = crossf_adjoint(SpatialVec(t.segment<3>(0), t.segment<3>(3)),
                                      SpatialVec(t.segment<3>(6), t.segment<3>(9)),
                                      SpatialVec::from6(yb));
    VecX out(12);
    out << -g.a.to6(), -g.b.to6();  // deliberately sign flipped
    return out;
  };
  bad.sample = [](std::mt19937_64& rng) { return testutil::random_vec(rng, 12); };
  const OracleResult r = adjoint_dot_test(bad, 100, 9);
  CHECK(r.worst_rel_err > 1.0);
  CHECK(r.worst_rel_err == doctest::Approx(2.0).epsilon(0.2));
  CHECK(r.failing_index >= 0);

  // identity operator sanity check
  DotTestOp ident;
  ident.name = "identity";
  ident.dim_in = 6;
  ident.dim_out = 6;
  ident.fwd = [](const VecX& t) { return t; };
  ident.vjp = [](const VecX&, const VecX& yb) { return yb; };
  ident.sample = [](std::mt19937_64& rng) { return testutil::random_vec(rng, 6); };
  CHECK(adjoint_dot_test(ident, 50, 1).worst_rel_err < 1e-8);
}
