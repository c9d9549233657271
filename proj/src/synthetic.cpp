#include "prefgeom/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "prefgeom/train.hpp"

namespace prefgeom {

Regime regime_from_string(const std::string& s) {
  if (s == "hard") return Regime::hard;
  if (s == "natural") return Regime::natural;
  if (s == "neutral") return Regime::neutral;
  throw Error("unknown regime '" + s + "' (expected hard|natural|neutral)");
}

std::string regime_to_string(Regime r) {
  switch (r) {
    case Regime::hard: return "hard";
    case Regime::natural: return "natural";
    case Regime::neutral: return "neutral";
  }
  return "?";
}

void SyntheticConfig::validate() const {
  require(subspace_dim >= 1 && subspace_dim < ambient_dim,
          "SyntheticConfig: need 1 <= k < d");
  require(subspace_dim >= 2,
          "SyntheticConfig: the controlled-angle construction needs k >= 2");
  require(ambient_dim - subspace_dim >= 2,
          "SyntheticConfig: nuisance coupling needs d - k >= 2");
  require(triplet_count >= 1, "SyntheticConfig: need N >= 1");
  require(signal_gap > 0.0, "SyntheticConfig: gamma must be > 0");
  require(nuisance_share >= 0.0 && nuisance_share < 1.0,
          "SyntheticConfig: eta must be in [0, 1)");
  require(correlation >= 0.0 && correlation <= 1.0, "SyntheticConfig: rho must be in [0, 1]");
  require(noise >= 0.0, "SyntheticConfig: sigma must be >= 0");
  require(signal_gap <= 2.0, "SyntheticConfig: gamma > 2 leaves no feasible cosine placement");
}

std::string SyntheticConfig::summary() const {
  std::ostringstream ss;
  ss << "ambient_dim=" << ambient_dim << "\nsubspace_dim=" << subspace_dim
     << "\ntriplet_count=" << triplet_count << "\nsignal_gap=" << signal_gap
     << "\nnuisance_share=" << nuisance_share << "\nregime=" << regime_to_string(regime)
     << "\ncorrelation=" << correlation << "\nnoise=" << noise << "\nseed=" << seed << "\n";
  return ss.str();
}

namespace {

// Unit vector orthogonal to u (both in R^k, k >= 2).
Vector random_unit_orthogonal(Rng& rng, const Vector& u) {
  for (;;) {
    Vector w = random_unit_vector(rng, u.size());
    w -= w.dot(u) * u;
    const double n = w.norm();
    if (n > 1e-8) return w / n;
  }
}

// Unit vector at the given cosine from u.
Vector unit_at_cosine(Rng& rng, const Vector& u, double c) {
  c = std::clamp(c, -1.0, 1.0);
  Vector w = random_unit_orthogonal(rng, u);
  return c * u + std::sqrt(std::max(0.0, 1.0 - c * c)) * w;
}

// Unit nuisance direction coupled to z_ref with strength rho.
Vector coupled_unit(Rng& rng, const Vector& z_ref, double rho) {
  Vector fresh = random_unit_vector(rng, z_ref.size());
  Vector z = rho * z_ref + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * fresh;
  const double n = z.norm();
  if (n <= 1e-12) return fresh;
  return z / n;
}

}  // namespace

SyntheticData generate(const SyntheticConfig& config) {
  config.validate();
  const Index d = config.ambient_dim;
  const Index k = config.subspace_dim;
  const Index kp = d - k;
  const double eta = config.nuisance_share;
  const double s_scale = std::sqrt(1.0 - eta);
  const double t_scale = std::sqrt(eta);

  Rng root(config.seed);
  Rng basis_rng = root.split(1);
  // One full orthonormal frame; first k columns span S, the rest S-perp.
  SubspaceBasis frame = random_orthonormal_basis(basis_rng, d, d);
  Matrix q = frame.Q.leftCols(k);
  Matrix q_perp = frame.Q.rightCols(kp);

  Rng draw = root.split(2);

  SyntheticData data{PlantedModel{SubspaceBasis(q), config, {}}, EmbeddingStore{}, {}};
  data.model.delta_s.reserve(config.triplet_count);
  data.triplets.reserve(config.triplet_count);

  for (std::size_t i = 0; i < config.triplet_count; ++i) {
    Vector u = random_unit_vector(draw, k);
    // Place p and n at controlled cosines from u; gap gamma keeps Delta_S > 0
    // by construction when sigma = 0.
    const double c_n = draw.uniform(-1.0, 1.0 - config.signal_gap);
    double cp = c_n + config.signal_gap;
    double cn = c_n;
    if (config.noise > 0.0) {
      cp += config.noise * draw.normal();
      cn += config.noise * draw.normal();
    }
    cp = std::clamp(cp, -1.0, 1.0);
    cn = std::clamp(cn, -1.0, 1.0);
    Vector sp = unit_at_cosine(draw, u, cp);
    Vector sn = unit_at_cosine(draw, u, cn);

    Vector za = random_unit_vector(draw, kp);
    Vector zp, zn;
    switch (config.regime) {
      case Regime::hard:
        zn = coupled_unit(draw, za, config.correlation);
        zp = random_unit_vector(draw, kp);
        break;
      case Regime::natural:
        zp = coupled_unit(draw, za, config.correlation);
        zn = random_unit_vector(draw, kp);
        break;
      case Regime::neutral:
        zp = random_unit_vector(draw, kp);
        zn = random_unit_vector(draw, kp);
        break;
    }

    auto embed = [&](const Vector& s, const Vector& z) -> Vector {
      Vector v = q * (s_scale * s);
      if (eta > 0.0) v += q_perp * (t_scale * z);
      return v;
    };

    const std::string suffix = std::to_string(i);
    data.store.insert("a" + suffix, embed(u, za));
    data.store.insert("p" + suffix, embed(sp, zp));
    data.store.insert("n" + suffix, embed(sn, zn));
    data.triplets.push_back({"a" + suffix, "p" + suffix, "n" + suffix, std::nullopt});
    data.model.delta_s.push_back((1.0 - eta) * (cp - cn));
  }
  return data;
}

namespace {

struct MarginSamples {
  std::vector<double> delta_b;
  std::vector<double> delta_t;
};

MarginSamples margin_samples(const Matrix& b_coords, const SyntheticData& data) {
  const Matrix& q = data.model.basis.Q;
  const Index k = q.cols();
  require(b_coords.rows() == k && b_coords.cols() == k,
          "margin_samples: B must be k x k in S-coordinates");
  require((b_coords - b_coords.transpose()).cwiseAbs().maxCoeff() <= 1e-9,
          "margin_samples: B must be symmetric");
  MarginSamples out;
  out.delta_b.reserve(data.triplets.size());
  out.delta_t.reserve(data.triplets.size());
  for (const Triplet& t : data.triplets) {
    const Vector& a = data.store.get(t.anchor_id);
    const Vector& p = data.store.get(t.pos_id);
    const Vector& n = data.store.get(t.neg_id);
    Vector sa = q.transpose() * a;
    Vector sdiff = q.transpose() * (p - n);
    const double delta_b = sa.dot(b_coords * sdiff);
    const double delta_t = a.dot(p - n) - sa.dot(sdiff);
    out.delta_b.push_back(delta_b);
    out.delta_t.push_back(delta_t);
  }
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

HardConditionReport verify_hard_condition(const SyntheticData& data, int n_bins) {
  require(data.triplets.size() >= 1000, "verify_hard_condition: need >= 1000 triplets");
  require(n_bins >= 1, "verify_hard_condition: need >= 1 bin");
  MarginSamples s = margin_samples(Matrix::Identity(data.model.basis.subspace_dim(),
                                                    data.model.basis.subspace_dim()),
                                   data);
  std::vector<std::size_t> order(s.delta_b.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.delta_b[a] < s.delta_b[b]; });

  HardConditionReport report;
  const std::size_t n = order.size();
  bool all_nonpositive = true;
  bool any_strictly_negative = false;
  for (int b = 0; b < n_bins; ++b) {
    const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(n_bins);
    const std::size_t hi = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(n_bins);
    if (hi <= lo) continue;  // empty bins collapsed
    std::vector<double> dts;
    dts.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) dts.push_back(s.delta_t[order[i]]);
    MeanSe m = mean_se(dts);
    HardConditionBin bin;
    bin.delta_s_lo = s.delta_b[order[lo]];
    bin.delta_s_hi = s.delta_b[order[hi - 1]];
    bin.count = hi - lo;
    bin.mean_delta_t = m.mean;
    bin.se_delta_t = m.se;
    report.bins.push_back(bin);
    if (m.mean > 3.0 * m.se) all_nonpositive = false;
    if (m.mean < -3.0 * m.se) any_strictly_negative = true;
  }
  report.verdict = all_nonpositive && any_strictly_negative;
  return report;
}

RiskEstimate empirical_risk(const Matrix& b_coords, double lambda, const SyntheticData& data) {
  MarginSamples s = margin_samples(b_coords, data);
  std::vector<double> losses(s.delta_b.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    losses[i] = bt_loss(s.delta_b[i] + lambda * s.delta_t[i]);
  }
  MeanSe m = mean_se(losses);
  return {m.mean, m.se};
}

RiskCurve risk_curve(const Matrix& b_coords, const std::vector<double>& lambda_grid,
                     const SyntheticData& data) {
  require(lambda_grid.size() >= 2, "risk_curve: need at least 2 grid points");
  require(std::is_sorted(lambda_grid.begin(), lambda_grid.end()),
          "risk_curve: lambda grid must be ascending");
  MarginSamples s = margin_samples(b_coords, data);
  const std::size_t n = s.delta_b.size();

  RiskCurve curve;
  std::vector<double> prev_losses;
  for (double lambda : lambda_grid) {
    std::vector<double> losses(n);
    for (std::size_t i = 0; i < n; ++i) {
      losses[i] = bt_loss(s.delta_b[i] + lambda * s.delta_t[i]);
    }
    MeanSe m = mean_se(losses);
    RiskCurvePoint pt;
    pt.lambda = lambda;
    pt.risk = m.mean;
    pt.se = m.se;
    if (!prev_losses.empty()) {
      // Paired per-triplet differences: common random triplets across lambdas.
      std::vector<double> diffs(n);
      for (std::size_t i = 0; i < n; ++i) diffs[i] = losses[i] - prev_losses[i];
      MeanSe dm = mean_se(diffs);
      pt.paired_increase = dm.mean;
      pt.paired_increase_se = dm.se;
    }
    curve.points.push_back(pt);
    prev_losses = std::move(losses);
  }

  bool all_up = true, all_down = true, all_flat = true;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& pt = curve.points[i];
    const double thresh = 3.0 * pt.paired_increase_se;
    if (!(pt.paired_increase > thresh)) all_up = false;
    if (!(pt.paired_increase < -thresh)) all_down = false;
    // Flat compares against the sampling noise of the risk estimate itself;
    // the paired SE is far tighter (losses are near-identical across lambda)
    // and would flag the loss's own curvature as a trend.
    if (std::abs(pt.paired_increase) > 3.0 * pt.se) all_flat = false;
  }
  curve.verdict = all_up ? "increasing" : all_down ? "decreasing" : all_flat ? "flat" : "mixed";
  return curve;
}

DerivativeReport derivative_at_zero(const Matrix& b_coords, const SyntheticData& data) {
  MarginSamples s = margin_samples(b_coords, data);
  const std::size_t n = s.delta_b.size();
  std::vector<double> identity_samples(n);
  std::vector<double> fd_samples(n);
  const double h = 1e-3;
  for (std::size_t i = 0; i < n; ++i) {
    identity_samples[i] = bt_grad_margin(s.delta_b[i]) * s.delta_t[i];
    fd_samples[i] = (bt_loss(s.delta_b[i] + h * s.delta_t[i]) -
                     bt_loss(s.delta_b[i] - h * s.delta_t[i])) /
                    (2.0 * h);
  }
  MeanSe est = mean_se(identity_samples);
  MeanSe fd = mean_se(fd_samples);
  DerivativeReport r;
  r.estimate = est.mean;
  r.se = est.se;
  r.fd_estimate = fd.mean;
  r.fd_se = fd.se;
  r.agrees = std::abs(est.mean - fd.mean) <= 3.0 * std::sqrt(est.se * est.se + fd.se * fd.se);
  return r;
}

} // namespace prefgeom
