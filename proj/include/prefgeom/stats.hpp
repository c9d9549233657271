#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace prefgeom {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Paired Wilcoxon signed-rank, two-sided. Zero differences are dropped, ties
// get average ranks. Exact null by sign enumeration for n <= 20; tie- and
// continuity-corrected normal approximation above.
TestResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& pairs);

// Two-sided exact McNemar: min(1, 2 * P[Bin(b+c, 1/2) <= min(b, c)]),
// evaluated in log space.
double mcnemar_exact(std::uint64_t b, std::uint64_t c);
double mcnemar_exact_log10(std::uint64_t b, std::uint64_t c);

TestResult paired_t(const std::vector<std::pair<double, double>>& pairs);

// Tie-aware Spearman rank correlation.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap of the mean; deterministic per seed.
BootstrapCi bootstrap_ci(const std::vector<double>& values, std::size_t n_boot,
                         double level, std::uint64_t seed);

// Shared numeric helpers (exposed for oracle tests).
double normal_cdf(double z);
double log_binom_tail_le(std::uint64_t n, std::uint64_t k);  // log P[Bin(n,1/2) <= k]
double regularized_incomplete_beta(double a, double b, double x);
std::vector<double> average_ranks(const std::vector<double>& values);

} // namespace prefgeom
