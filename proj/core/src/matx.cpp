#include "arti/matx.hpp"

#include <Eigen/LU>

namespace arti {

namespace {
void require(bool cond, const char* msg) {
  if (!cond) throw ShapeMismatch(msg);
}
}  // namespace

VecX mat_vec(const MatX& m, const VecX& a) {
  require(m.cols() == a.size(), "mat_vec: shape mismatch");
  if (!finite(m) || !finite(a)) throw NonFiniteInput("mat_vec: non-finite input");
  return m * a;
}

MatVecGrad mat_vec_adjoint(const MatX& m, const VecX& a, const VecX& out_bar) {
  require(m.rows() == out_bar.size() && m.cols() == a.size(), "mat_vec_adjoint: shape mismatch");
  return {out_bar * a.transpose(), m.transpose() * out_bar};
}

MatX mat_mul(const MatX& a, const MatX& b) {
  require(a.cols() == b.rows(), "mat_mul: shape mismatch");
  if (!finite(a) || !finite(b)) throw NonFiniteInput("mat_mul: non-finite input");
  return a * b;
}

MatMulGrad mat_mul_adjoint(const MatX& a, const MatX& b, const MatX& out_bar) {
  require(out_bar.rows() == a.rows() && out_bar.cols() == b.cols(),
          "mat_mul_adjoint: shape mismatch");
  return {out_bar * b.transpose(), a.transpose() * out_bar};
}

MatX mat_AtBA(const MatX& a, const MatX& b) {
  require(b.rows() == b.cols() && a.rows() == b.rows(), "mat_AtBA: shape mismatch");
  if (!finite(a) || !finite(b)) throw NonFiniteInput("mat_AtBA: non-finite input");
  return a.transpose() * b * a;
}

AtBAGrad mat_AtBA_adjoint(const MatX& a, const MatX& b, const MatX& c_bar) {
  require(c_bar.rows() == a.cols() && c_bar.cols() == a.cols(), "mat_AtBA_adjoint: shape mismatch");
  AtBAGrad g;
  g.a = b * a * c_bar.transpose() + b.transpose() * a * c_bar;
  g.b = a * c_bar * a.transpose();
  return g;
}

MatX mat_three(const MatX& a, const MatX& b, const MatX& c) {
  require(a.cols() == b.rows() && b.cols() == c.rows(), "mat_three: shape mismatch");
  if (!finite(a) || !finite(b) || !finite(c)) throw NonFiniteInput("mat_three: non-finite input");
  return a * b * c;
}

ThreeMatGrad mat_three_adjoint(const MatX& a, const MatX& b, const MatX& c, const MatX& m_bar) {
  require(m_bar.rows() == a.rows() && m_bar.cols() == c.cols(), "mat_three_adjoint: shape mismatch");
  ThreeMatGrad g;
  g.a = m_bar * c.transpose() * b.transpose();
  g.b = a.transpose() * m_bar * c.transpose();
  g.c = b.transpose() * a.transpose() * m_bar;
  return g;
}

MatX mat_inverse(const MatX& a) {
  require(a.rows() == a.cols(), "mat_inverse: matrix not square");
  if (!finite(a)) throw NonFiniteInput("mat_inverse: non-finite input");
  Eigen::PartialPivLU<MatX> lu(a);
  const VecX diag = lu.matrixLU().diagonal();
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
  if (diag.cwiseAbs().minCoeff() < 1e-12 * scale)
    throw SingularMatrix("mat_inverse: pivot below 1e-12 threshold");
  return lu.inverse();
}

MatX mat_inverse_adjoint(const MatX& inv_value, const MatX& out_bar) {
  return -inv_value.transpose() * out_bar * inv_value.transpose();
}

}  // namespace arti
