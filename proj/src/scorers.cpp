#include "prefgeom/scorers.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace prefgeom {

namespace {

Vector mlp_forward(const MlpScorer& m, const Vector& v) {
  Vector hidden = (m.w1.transpose() * v + m.b1).array().tanh();
  return m.w2.transpose() * hidden;
}

}  // namespace

std::string Scorer::tag() const {
  struct Visitor {
    std::string operator()(const CosineScorer&) const { return "cosine"; }
    std::string operator()(const BilinearScorer&) const { return "bilinear"; }
    std::string operator()(const IdealPointScorer&) const { return "ideal_point"; }
    std::string operator()(const InnerProductScorer&) const { return "inner_product"; }
    std::string operator()(const AsymmetricScorer&) const { return "asymmetric"; }
    std::string operator()(const MlpScorer&) const { return "mlp"; }
  };
  return std::visit(Visitor{}, variant);
}

double score(const Scorer& s, const Vector& a, const Vector& x) {
  require(a.size() == x.size(), "score: anchor/item dimension mismatch");
  struct Visitor {
    const Vector& a;
    const Vector& x;

    double operator()(const CosineScorer&) const { return cosine(a, x); }

    double operator()(const BilinearScorer& b) const {
      require(b.basis != nullptr, "score: bilinear scorer missing basis");
      require(a.size() == b.basis->ambient_dim(), "score: bilinear dimension mismatch");
      require(b.b_coords.rows() == b.basis->subspace_dim() &&
                  b.b_coords.cols() == b.basis->subspace_dim(),
              "score: bilinear B shape mismatch");
      const Matrix& q = b.basis->Q;
      Vector sa = q.transpose() * a;
      Vector sx = q.transpose() * x;
      // psi^T (B + lambda P_perp) psi = s_a^T B s_x + lambda (a.x - s_a.s_x)
      return sa.dot(b.b_coords * sx) + b.lambda * (a.dot(x) - sa.dot(sx));
    }

    double operator()(const IdealPointScorer& s) const {
      require(a.size() == s.l.rows(), "score: ideal_point dimension mismatch");
      return -(s.l.transpose() * (a - x)).squaredNorm();
    }

    double operator()(const InnerProductScorer& s) const {
      require(a.size() == s.l.rows(), "score: inner_product dimension mismatch");
      return (s.l.transpose() * a).dot(s.l.transpose() * x);
    }

    double operator()(const AsymmetricScorer& s) const {
      require(a.size() == s.l_anchor.rows() && x.size() == s.l_item.rows(),
              "score: asymmetric dimension mismatch");
      return -(s.l_anchor.transpose() * a - s.l_item.transpose() * x).squaredNorm();
    }

    double operator()(const MlpScorer& m) const {
      require(a.size() == m.w1.rows(), "score: mlp dimension mismatch");
      return -(mlp_forward(m, a) - mlp_forward(m, x)).squaredNorm();
    }
  };
  return std::visit(Visitor{a, x}, s.variant);
}

double margin(const Scorer& s, const Vector& a, const Vector& p, const Vector& n) {
  return score(s, a, p) - score(s, a, n);
}

MarginDecomposition decompose_cosine_margin(const Vector& a, const Vector& p, const Vector& n,
                                            const SubspaceBasis& basis) {
  for (const Vector* v : {&a, &p, &n}) {
    require(std::abs(v->norm() - 1.0) <= 1e-9, "decompose_cosine_margin: input not unit-norm");
  }
  auto [as, at] = project_split(a, basis);
  auto [ps, pt] = project_split(p, basis);
  auto [ns, nt] = project_split(n, basis);
  MarginDecomposition d;
  d.delta_s = as.dot(ps - ns);
  d.delta_t = at.dot(pt - nt);
  d.delta_norm = ns.squaredNorm() - ps.squaredNorm();
  d.full_margin = a.dot(p) - a.dot(n);
  return d;
}

ProjectedMarginReport projected_margin_report(const Matrix& l, const Vector& a,
                                              const Vector& p, const Vector& n) {
  require(a.size() == l.rows() && p.size() == l.rows() && n.size() == l.rows(),
          "projected_margin_report: dimension mismatch");
  Vector la = l.transpose() * a;
  Vector lp = l.transpose() * p;
  Vector ln = l.transpose() * n;
  ProjectedMarginReport r;
  r.inner_product_margin = 2.0 * la.dot(lp - ln);
  r.item_norm_term = ln.squaredNorm() - lp.squaredNorm();
  return r;
}

Vector project_embedding(const Matrix& l, const Vector& x) {
  require(x.size() == l.rows(), "project_embedding: dimension mismatch");
  return l.transpose() * x;
}

namespace {

constexpr char kMagic[8] = {'P', 'G', 'S', 'C', 'R', '0', '1', '\n'};

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  require(in.good(), "load_scorer: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  require(in.good(), "load_scorer: truncated string");
  return s;
}

// Row-major doubles, raw bit pattern; round-trip is bit-exact.
void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits;
      double v = m(i, j);
      std::memcpy(&bits, &v, 8);
      write_u64(out, bits);
    }
  }
}

Matrix read_matrix(std::istream& in) {
  const Index rows = static_cast<Index>(read_u64(in));
  const Index cols = static_cast<Index>(read_u64(in));
  require(rows >= 0 && cols >= 0 && rows <= (1 << 20) && cols <= (1 << 20),
          "load_scorer: implausible matrix shape");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      std::uint64_t bits = read_u64(in);
      double v;
      std::memcpy(&v, &bits, 8);
      m(i, j) = v;
    }
  }
  return m;
}

}  // namespace

void save_scorer(const Scorer& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "save_scorer: cannot open " + path);
  out.write(kMagic, 8);
  write_string(out, s.tag());
  write_u64(out, s.seed);
  write_string(out, s.config_hash);

  struct Visitor {
    std::ostream& out;
    void operator()(const CosineScorer&) const {}
    void operator()(const BilinearScorer& b) const {
      write_matrix(out, b.b_coords);
      std::uint64_t bits;
      std::memcpy(&bits, &b.lambda, 8);
      write_u64(out, bits);
      write_matrix(out, b.basis->Q);
    }
    void operator()(const IdealPointScorer& s) const { write_matrix(out, s.l); }
    void operator()(const InnerProductScorer& s) const { write_matrix(out, s.l); }
    void operator()(const AsymmetricScorer& s) const {
      write_matrix(out, s.l_anchor);
      write_matrix(out, s.l_item);
    }
    void operator()(const MlpScorer& m) const {
      write_matrix(out, m.w1);
      write_matrix(out, m.b1);
      write_matrix(out, m.w2);
    }
  };
  std::visit(Visitor{out}, s.variant);
  require(out.good(), "save_scorer: write failed for " + path);
}

Scorer load_scorer(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "load_scorer: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kMagic, 8) == 0,
          "load_scorer: bad magic in " + path);
  const std::string tag = read_string(in);
  Scorer s;
  s.seed = read_u64(in);
  s.config_hash = read_string(in);

  if (tag == "cosine") {
    s.variant = CosineScorer{};
  } else if (tag == "bilinear") {
    BilinearScorer b;
    b.b_coords = read_matrix(in);
    std::uint64_t bits = read_u64(in);
    std::memcpy(&b.lambda, &bits, 8);
    b.basis = std::make_shared<SubspaceBasis>(read_matrix(in));
    s.variant = std::move(b);
  } else if (tag == "ideal_point") {
    s.variant = IdealPointScorer{read_matrix(in)};
  } else if (tag == "inner_product") {
    s.variant = InnerProductScorer{read_matrix(in)};
  } else if (tag == "asymmetric") {
    Matrix la = read_matrix(in);
    Matrix lx = read_matrix(in);
    s.variant = AsymmetricScorer{std::move(la), std::move(lx)};
  } else if (tag == "mlp") {
    Matrix w1 = read_matrix(in);
    Matrix b1m = read_matrix(in);
    Matrix w2 = read_matrix(in);
    require(b1m.cols() == 1, "load_scorer: mlp bias must be a column");
    s.variant = MlpScorer{std::move(w1), Vector(b1m.col(0)), std::move(w2)};
  } else {
    throw Error("load_scorer: unknown variant tag '" + tag + "'");
  }
  return s;
}

} // namespace prefgeom
