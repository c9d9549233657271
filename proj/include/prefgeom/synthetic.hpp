#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prefgeom/ingest.hpp"
#include "prefgeom/linalg.hpp"

namespace prefgeom {

enum class Regime { hard, natural, neutral };

Regime regime_from_string(const std::string& s);
std::string regime_to_string(Regime r);

struct SyntheticConfig {
  Index ambient_dim = 64;
  Index subspace_dim = 8;
  std::size_t triplet_count = 10000;
  double signal_gap = 0.5;        // gamma: in-subspace cosine gap between p and n
  double nuisance_share = 0.5;    // eta: squared-norm share of the perp component
  Regime regime = Regime::hard;
  double correlation = 0.8;       // rho: nuisance coupling strength
  double noise = 0.0;             // sigma: Gaussian noise on the in-subspace gap
  std::uint64_t seed = 0;

  void validate() const;
  std::string summary() const;
};

struct PlantedModel {
  SubspaceBasis basis;            // Q, d x k
  SyntheticConfig config;
  std::vector<double> delta_s;    // ground-truth in-subspace margin per triplet
};

struct SyntheticData {
  PlantedModel model;
  EmbeddingStore store;           // ids a<i>, p<i>, n<i>
  TripletSet triplets;
};

SyntheticData generate(const SyntheticConfig& config);

// Binned conditional-mean surrogate for E[Delta_T | G] <= 0: triplets are
// binned by quantiles of Delta_S; per-bin mean Delta_T with standard errors.
struct HardConditionBin {
  double delta_s_lo = 0.0;
  double delta_s_hi = 0.0;
  std::size_t count = 0;
  double mean_delta_t = 0.0;
  double se_delta_t = 0.0;
};

struct HardConditionReport {
  std::vector<HardConditionBin> bins;
  bool verdict = false;  // all bin means <= 0 within 3 SE, at least one < -3 SE
};

HardConditionReport verify_hard_condition(const SyntheticData& data, int n_bins = 10);

struct RiskEstimate {
  double value = 0.0;
  double se = 0.0;
};

// Sample mean of l(Delta_B + lambda * Delta_T) with B given in S-coordinates
// (defaults to the identity on S, i.e. B = P_S).
RiskEstimate empirical_risk(const Matrix& b_coords, double lambda,
                            const SyntheticData& data);

struct RiskCurvePoint {
  double lambda = 0.0;
  double risk = 0.0;
  double se = 0.0;
  double paired_increase = 0.0;     // risk(lambda_i) - risk(lambda_{i-1})
  double paired_increase_se = 0.0;  // SE of the per-triplet paired difference
};

struct RiskCurve {
  std::vector<RiskCurvePoint> points;
  // "increasing"/"decreasing": every step beyond 3 paired-difference SEs;
  // "flat": every step within 3 SEs of the risk estimate; else "mixed".
  std::string verdict;
};

RiskCurve risk_curve(const Matrix& b_coords, const std::vector<double>& lambda_grid,
                     const SyntheticData& data);

struct DerivativeReport {
  double estimate = 0.0;      // mean of l'(Delta_B) * Delta_T
  double se = 0.0;
  double fd_estimate = 0.0;   // central finite difference of the risk at 0
  double fd_se = 0.0;
  bool agrees = false;        // |estimate - fd| <= 3 * combined SE
};

DerivativeReport derivative_at_zero(const Matrix& b_coords, const SyntheticData& data);

} // namespace prefgeom
