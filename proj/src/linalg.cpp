#include "prefgeom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace prefgeom {

SubspaceBasis::SubspaceBasis(Matrix q) : Q(std::move(q)) {
  require(Q.rows() > 0 && Q.cols() > 0, "SubspaceBasis: empty matrix");
  require(Q.cols() <= Q.rows(), "SubspaceBasis: more columns than ambient dimension");
  Matrix gram = Q.transpose() * Q;
  gram.diagonal().array() -= 1.0;
  require(gram.cwiseAbs().maxCoeff() <= 1e-8, "SubspaceBasis: columns not orthonormal");
}

double dot(const Vector& u, const Vector& v) {
  require(u.size() == v.size(), "dot: dimension mismatch");
  return u.dot(v);
}

double cosine(const Vector& u, const Vector& v) {
  require(u.size() == v.size(), "cosine: dimension mismatch");
  const double nu = u.norm();
  const double nv = v.norm();
  require(nu > 1e-12 && nv > 1e-12, "cosine: zero-norm input");
  return u.dot(v) / (nu * nv);
}

Vector normalize(const Vector& v) {
  const double n = v.norm();
  require(n > 1e-12, "normalize: near-zero norm");
  return v / n;
}

SplitResult project_split(const Vector& v, const SubspaceBasis& basis) {
  require(v.size() == basis.ambient_dim(), "project_split: dimension mismatch");
  Vector in_s = basis.Q * (basis.Q.transpose() * v);
  Vector perp = v - in_s;
  return {std::move(in_s), std::move(perp)};
}

SubspaceBasis orthonormalize(const Matrix& m) {
  require(m.rows() > 0 && m.cols() > 0, "orthonormalize: empty matrix");
  Matrix q = m;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Index j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < j; ++i) {
        q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      }
    }
    const double n = q.col(j).norm();
    require(n > 1e-10 * scale, "orthonormalize: rank-deficient input");
    q.col(j) /= n;
  }
  return SubspaceBasis(std::move(q));
}

namespace {

// Hestenes one-sided Jacobi on a matrix with rows >= cols: columns are
// rotated pairwise until mutually orthogonal, then sigma_j = ||a_j||.
SvdResult svd_tall(Matrix a) {
  const Index n = a.cols();
  Matrix v = Matrix::Identity(n, n);
  const double frob = a.norm();
  const double tol = 1e-12 * std::max(frob * frob, 1e-300);
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a.col(p).dot(a.col(q));
        const double app = a.col(p).squaredNorm();
        const double aqq = a.col(q).squaredNorm();
        off = std::max(off, std::abs(apq));
        if (std::abs(apq) <= tol) continue;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < a.rows(); ++i) {
          const double aip = a(i, p);
          const double aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (Index i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    if (off <= tol) break;
  }

  SvdResult out;
  out.singular.resize(static_cast<std::size_t>(n));
  out.u = Matrix::Zero(a.rows(), n);
  out.v = Matrix(n, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) norms[static_cast<std::size_t>(j)] = a.col(j).norm();
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)];
  });
  for (Index j = 0; j < n; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    const double sigma = norms[static_cast<std::size_t>(src)];
    out.singular[static_cast<std::size_t>(j)] = sigma;
    out.v.col(j) = v.col(src);
    if (sigma > 0.0) {
      out.u.col(j) = a.col(src) / sigma;
    } else if (j < a.rows()) {
      out.u.col(j).setZero();
      out.u(j, j) = 1.0;  // arbitrary orthogonal completion for the null part
    }
  }
  return out;
}

}  // namespace

SvdResult svd_small(const Matrix& m) {
  require(m.rows() > 0 && m.cols() > 0, "svd_small: empty matrix");
  require(m.rows() <= 256 && m.cols() <= 256, "svd_small: matrix larger than 256 per side");
  if (m.rows() >= m.cols()) return svd_tall(m);
  SvdResult t = svd_tall(m.transpose());
  std::swap(t.u, t.v);
  return t;
}

std::vector<double> principal_angle_cosines(const SubspaceBasis& q1, const SubspaceBasis& q2) {
  require(q1.ambient_dim() == q2.ambient_dim(), "principal_angle_cosines: ambient dims differ");
  Matrix cross = q1.Q.transpose() * q2.Q;
  SvdResult svd = svd_small(cross);
  for (double& s : svd.singular) s = std::clamp(s, 0.0, 1.0);
  return svd.singular;
}

Vector random_unit_vector(Rng& rng, Index dim) {
  Vector v(dim);
  double n = 0.0;
  do {
    for (Index i = 0; i < dim; ++i) v[i] = rng.normal();
    n = v.norm();
  } while (n <= 1e-12);
  return v / n;
}

Matrix random_gaussian_matrix(Rng& rng, Index rows, Index cols, double scale) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
  return m;
}

SubspaceBasis random_orthonormal_basis(Rng& rng, Index dim, Index k) {
  require(k <= dim, "random_orthonormal_basis: k > dim");
  return orthonormalize(random_gaussian_matrix(rng, dim, k));
}

} // namespace prefgeom
