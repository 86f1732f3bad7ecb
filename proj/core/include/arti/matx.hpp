#pragma once

#include "arti/types.hpp"

// Dense linear-algebra operators with reverse-mode adjoints, used by the
// articulated-inertia solves and the contact system assembly.

namespace arti {

struct MatVecGrad {
  MatX m;
  VecX a;
};
struct MatMulGrad {
  MatX a;
  MatX b;
};
struct AtBAGrad {
  MatX a;
  MatX b;
};
struct ThreeMatGrad {
  MatX a;
  MatX b;
  MatX c;
};

VecX mat_vec(const MatX& m, const VecX& a);
MatVecGrad mat_vec_adjoint(const MatX& m, const VecX& a, const VecX& out_bar);

MatX mat_mul(const MatX& a, const MatX& b);
MatMulGrad mat_mul_adjoint(const MatX& a, const MatX& b, const MatX& out_bar);

// c = a^T b a
MatX mat_AtBA(const MatX& a, const MatX& b);
AtBAGrad mat_AtBA_adjoint(const MatX& a, const MatX& b, const MatX& c_bar);

// m = a b c
MatX mat_three(const MatX& a, const MatX& b, const MatX& c);
ThreeMatGrad mat_three_adjoint(const MatX& a, const MatX& b, const MatX& c, const MatX& m_bar);

// Partial-pivot LU inverse; throws SingularMatrix when a pivot falls below
// 1e-12 relative to the largest entry. The adjoint needs only the inverse
// value: a_bar = -b^T out_bar b^T.
MatX mat_inverse(const MatX& a);
MatX mat_inverse_adjoint(const MatX& inv_value, const MatX& out_bar);

}  // namespace arti
