#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "prefgeom/linalg.hpp"
#include "prefgeom/types.hpp"

namespace prefgeom {

// score(a, x) = cos(a, x)
struct CosineScorer {};

// score(a, x) = psi(a)^T (B + lambda * P_perp) psi(x), with B kept in
// S-coordinates (k x k symmetric) so B = P_S B P_S holds by construction.
struct BilinearScorer {
  Matrix b_coords;            // k x k, symmetric
  double lambda = 1.0;
  std::shared_ptr<const SubspaceBasis> basis;
};

// score(a, x) = -||L^T a - L^T x||^2
struct IdealPointScorer {
  Matrix l;  // d x r
};

// score(a, x) = <L^T a, L^T x>
struct InnerProductScorer {
  Matrix l;  // d x r
};

// score(a, x) = -||L_a^T a - L_x^T x||^2
struct AsymmetricScorer {
  Matrix l_anchor;  // d x r
  Matrix l_item;    // d x r
};

// score(a, x) = -||phi(a) - phi(x)||^2 with phi(v) = W2^T tanh(W1^T v + b1);
// the same network is applied to anchor and item.
struct MlpScorer {
  Matrix w1;  // d x h
  Vector b1;  // h
  Matrix w2;  // h x r
};

struct Scorer {
  std::variant<CosineScorer, BilinearScorer, IdealPointScorer, InnerProductScorer,
               AsymmetricScorer, MlpScorer>
      variant;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::string tag() const;
};

double score(const Scorer& s, const Vector& a, const Vector& x);
double margin(const Scorer& s, const Vector& a, const Vector& p, const Vector& n);

// Eq-2-style additive split of the cosine margin for unit-norm inputs.
struct MarginDecomposition {
  double delta_s = 0.0;     // in-subspace margin
  double delta_t = 0.0;     // nuisance margin
  double delta_norm = 0.0;  // item-norm difference within S
  double full_margin = 0.0; // cosine margin; equals delta_s + delta_t
};

MarginDecomposition decompose_cosine_margin(const Vector& a, const Vector& p, const Vector& n,
                                            const SubspaceBasis& basis);

// Ideal-point margin split: 2<L^T a, L^T(p - n)> plus ||L^T n||^2 - ||L^T p||^2.
struct ProjectedMarginReport {
  double inner_product_margin = 0.0;
  double item_norm_term = 0.0;
};

ProjectedMarginReport projected_margin_report(const Matrix& l, const Vector& a,
                                              const Vector& p, const Vector& n);

Vector project_embedding(const Matrix& l, const Vector& x);

// Binary round-trip serialization; bit-exact.
void save_scorer(const Scorer& s, const std::string& path);
Scorer load_scorer(const std::string& path);

} // namespace prefgeom
