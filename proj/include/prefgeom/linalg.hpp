#pragma once

#include <vector>

#include "prefgeom/rng.hpp"
#include "prefgeom/types.hpp"

namespace prefgeom {

// Orthonormal basis Q (d x k) of a subspace; validated on construction:
// max|Q^T Q - I| <= 1e-8.
struct SubspaceBasis {
  Matrix Q;

  explicit SubspaceBasis(Matrix q);

  Index ambient_dim() const { return Q.rows(); }
  Index subspace_dim() const { return Q.cols(); }
};

double dot(const Vector& u, const Vector& v);
double cosine(const Vector& u, const Vector& v);
Vector normalize(const Vector& v);

// v = v_S + v_perp with v_S = Q Q^T v.
struct SplitResult {
  Vector in_subspace;
  Vector perp;
};
SplitResult project_split(const Vector& v, const SubspaceBasis& basis);

// Modified Gram-Schmidt with one reorthogonalization pass. Throws on
// numerically rank-deficient input (residual below 1e-10 of the column scale).
SubspaceBasis orthonormalize(const Matrix& m);

struct SvdResult {
  Matrix u;                      // rows x r
  std::vector<double> singular;  // descending, nonnegative
  Matrix v;                      // cols x r
};

// One-sided Jacobi SVD for small matrices (<= 256 per side). Off-diagonal
// convergence threshold 1e-12, at most 60 sweeps.
SvdResult svd_small(const Matrix& m);

// Singular values of Q1^T Q2, clamped to [0, 1], descending.
std::vector<double> principal_angle_cosines(const SubspaceBasis& q1, const SubspaceBasis& q2);

// Sampling helpers shared by the synthetic generator and tests.
Vector random_unit_vector(Rng& rng, Index dim);
Matrix random_gaussian_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0);
SubspaceBasis random_orthonormal_basis(Rng& rng, Index dim, Index k);

} // namespace prefgeom
