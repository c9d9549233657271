#include "prefgeom/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prefgeom/rng.hpp"
#include "prefgeom/types.hpp"

namespace prefgeom {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

TestResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> diffs;
  for (const auto& [x, y] : pairs) {
    const double d = x - y;
    if (d != 0.0) diffs.push_back(d);
  }
  require(!diffs.empty(), "wilcoxon_signed_rank: all differences are zero");
  const std::size_t n = diffs.size();

  std::vector<double> abs_d(n);
  for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(diffs[i]);
  std::vector<double> ranks = average_ranks(abs_d);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) w_plus += ranks[i];
  }

  TestResult res;
  res.statistic = w_plus;

  if (n <= 20) {
    // Exact null: W+ distribution over all 2^n sign assignments of the
    // tie-adjusted rank multiset, via subset-sum counting on doubled ranks.
    std::vector<long> r2(n);
    long total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = std::lround(2.0 * ranks[i]);
      total2 += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = total2; s >= r2[i]; --s) {
        count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r2[i])];
      }
    }
    const long w2 = std::lround(2.0 * w_plus);
    double below = 0.0, above = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= w2) below += count[static_cast<std::size_t>(s)];
      if (s >= w2) above += count[static_cast<std::size_t>(s)];
    }
    const double denom = std::pow(2.0, static_cast<double>(n));
    res.p_value = std::min(1.0, 2.0 * std::min(below, above) / denom);
    return res;
  }

  // Tie-corrected normal approximation with continuity correction.
  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<double> sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += (t * t * t - t);
      i = j + 1;
    }
  }
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  require(var > 0.0, "wilcoxon_signed_rank: zero variance (all magnitudes tied?)");
  const double centered = w_plus - mu;
  const double cc = centered > 0 ? -0.5 : centered < 0 ? 0.5 : 0.0;
  const double z = (centered + cc) / std::sqrt(var);
  res.p_value = std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
  return res;
}

double log_binom_tail_le(std::uint64_t n, std::uint64_t k) {
  require(k <= n, "log_binom_tail_le: k > n");
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  // logsumexp over j = 0..k of log C(n, j)
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(k + 1);
  const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::uint64_t j = 0; j <= k; ++j) {
    terms[j] = lg_n1 - std::lgamma(static_cast<double>(j) + 1.0) -
               std::lgamma(static_cast<double>(n - j) + 1.0);
    max_term = std::max(max_term, terms[j]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum) + log_half_n;
}

double mcnemar_exact_log10(std::uint64_t b, std::uint64_t c) {
  require(b + c >= 1, "mcnemar_exact: b + c must be >= 1");
  const double log_p = std::log(2.0) + log_binom_tail_le(b + c, std::min(b, c));
  return std::min(0.0, log_p) / std::log(10.0);
}

double mcnemar_exact(std::uint64_t b, std::uint64_t c) {
  return std::pow(10.0, mcnemar_exact_log10(b, c));
}

double regularized_incomplete_beta(double a, double b, double x) {
  require(x >= 0.0 && x <= 1.0, "regularized_incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // Continued fraction (modified Lentz); converges fast when x < (a+1)/(a+b+2).
  auto betacf = [](double a, double b, double x) {
    const double tiny = 1e-300;
    const double eps = 1e-15;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
      const double m2 = 2.0 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < eps) break;
    }
    return h;
  };
  const double ln_front = a * std::log(x) + b * std::log1p(-x) + std::lgamma(a + b) -
                          std::lgamma(a) - std::lgamma(b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * betacf(a, b, x) / a;
  }
  return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) + std::lgamma(a + b) -
                        std::lgamma(a) - std::lgamma(b)) *
                   betacf(b, a, 1.0 - x) / b;
}

TestResult paired_t(const std::vector<std::pair<double, double>>& pairs) {
  require(pairs.size() >= 2, "paired_t: need n >= 2");
  const double n = static_cast<double>(pairs.size());
  double mean = 0.0;
  for (const auto& [x, y] : pairs) mean += (x - y);
  mean /= n;
  double ss = 0.0;
  for (const auto& [x, y] : pairs) {
    const double d = (x - y) - mean;
    ss += d * d;
  }
  require(ss > 0.0, "paired_t: zero variance of differences");
  const double sd = std::sqrt(ss / (n - 1.0));
  const double t = mean / (sd / std::sqrt(n));
  const double nu = n - 1.0;
  TestResult res;
  res.statistic = t;
  res.p_value = regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
  return res;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "spearman: length mismatch");
  require(x.size() >= 2, "spearman: need n >= 2");
  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  require(sxx > 0.0 && syy > 0.0, "spearman: constant input");
  return sxy / std::sqrt(sxx * syy);
}

BootstrapCi bootstrap_ci(const std::vector<double>& values, std::size_t n_boot,
                         double level, std::uint64_t seed) {
  require(values.size() >= 2, "bootstrap_ci: need n >= 2");
  require(n_boot >= 1, "bootstrap_ci: need n_boot >= 1");
  require(level > 0.0 && level < 1.0, "bootstrap_ci: level must be in (0, 1)");
  Rng rng(seed);
  const std::size_t n = values.size();
  std::vector<double> stats(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += values[rng.uniform_int(n)];
    }
    stats[b] = sum / static_cast<double>(n);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - level;
  auto pick = [&](double q) {
    const double pos = q * static_cast<double>(n_boot - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(n_boot - 1, lo + 1);
    const double frac = pos - static_cast<double>(lo);
    return stats[lo] * (1.0 - frac) + stats[hi] * frac;
  };
  return {pick(alpha / 2.0), pick(1.0 - alpha / 2.0)};
}

} // namespace prefgeom
