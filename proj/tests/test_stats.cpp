#include <cmath>

#include "doctest.h"
#include "prefgeom/rng.hpp"
#include "prefgeom/stats.hpp"
#include "prefgeom/types.hpp"

using namespace prefgeom;

TEST_CASE("average_ranks handles ties with midranks") {
  auto r = average_ranks({10.0, 20.0, 20.0, 30.0});
  CHECK(r == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  CHECK(average_ranks({5.0}) == std::vector<double>{1.0});
  auto all_tied = average_ranks({1.0, 1.0, 1.0});
  CHECK(all_tied == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("wilcoxon hand-computed exact cases") {
  // three positive differences: W+ = 6, two-sided p = 2 * (1/8)
  TestResult r = wilcoxon_signed_rank({{2.0, 1.0}, {4.0, 2.0}, {9.0, 6.0}});
  CHECK(r.statistic == doctest::Approx(6.0));
  CHECK(r.p_value == doctest::Approx(0.25).epsilon(1e-12));

  // zero differences are dropped before ranking
  TestResult with_zero = wilcoxon_signed_rank({{1.0, 1.0}, {2.0, 1.0}, {4.0, 2.0}, {9.0, 6.0}});
  CHECK(with_zero.statistic == doctest::Approx(6.0));
  CHECK(with_zero.p_value == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(wilcoxon_signed_rank({{1.0, 1.0}, {2.0, 2.0}}), Error);
}

namespace {

// Independent oracle: full enumeration of all 2^n sign assignments.
double wilcoxon_enumeration_p(const std::vector<double>& diffs) {
  std::vector<double> abs_d;
  for (double d : diffs) abs_d.push_back(std::abs(d));
  std::vector<double> ranks = average_ranks(abs_d);
  double w_obs = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0.0) w_obs += ranks[i];
  }
  const std::size_t n = diffs.size();
  std::size_t le = 0, ge = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) w += ranks[i];
    }
    if (w <= w_obs + 1e-9) ++le;
    if (w >= w_obs - 1e-9) ++ge;
  }
  const double p = 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
  return std::min(1.0, p);
}

}  // namespace

TEST_CASE("wilcoxon exact path matches sign enumeration on random data") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(9);
    std::vector<std::pair<double, double>> pairs;
    std::vector<double> diffs;
    for (std::size_t i = 0; i < n; ++i) {
      // quantized to force ties in the magnitudes
      double d = (static_cast<double>(rng.uniform_int(9)) - 4.0) / 2.0;
      if (d == 0.0) d = 0.5;
      pairs.push_back({d, 0.0});
      diffs.push_back(d);
    }
    TestResult r = wilcoxon_signed_rank(pairs);
    CHECK(r.p_value == doctest::Approx(wilcoxon_enumeration_p(diffs)).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon large-n approximation behaves sensibly") {
  Rng rng(78);
  std::vector<std::pair<double, double>> null_pairs, shifted;
  for (int i = 0; i < 60; ++i) {
    const double x = rng.normal();
    null_pairs.push_back({x, 0.0});
    shifted.push_back({x + 2.0, 0.0});
  }
  TestResult pn = wilcoxon_signed_rank(null_pairs);
  TestResult ps = wilcoxon_signed_rank(shifted);
  CHECK(pn.p_value > 0.01);
  CHECK(ps.p_value < 1e-6);
  CHECK(ps.p_value <= 1.0);
}

TEST_CASE("mcnemar exact: hand values, symmetry, caps") {
  CHECK(mcnemar_exact(3, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(mcnemar_exact(0, 3) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(mcnemar_exact(5, 5) == doctest::Approx(1.0));
  // b=2, c=8: 2 * P[Bin(10, 1/2) <= 2] = 2 * 56/1024
  CHECK(mcnemar_exact(2, 8) == doctest::Approx(112.0 / 1024.0).epsilon(1e-12));
  CHECK_THROWS_AS(mcnemar_exact(0, 0), Error);
}

TEST_CASE("log_binom_tail_le matches direct summation") {
  // P[Bin(4, 1/2) <= 2] = 11/16
  CHECK(std::exp(log_binom_tail_le(4, 2)) == doctest::Approx(11.0 / 16.0).epsilon(1e-12));
  CHECK(std::exp(log_binom_tail_le(4, 4)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::exp(log_binom_tail_le(10, 0)) == doctest::Approx(1.0 / 1024.0).epsilon(1e-12));
  CHECK_THROWS_AS(log_binom_tail_le(3, 4), Error);
}

TEST_CASE("mcnemar survives huge counts in log space") {
  // would underflow double precision if computed directly
  const double lg = mcnemar_exact_log10(20000, 5000);
  CHECK(lg < -1000.0);
  CHECK(std::isfinite(lg));
  CHECK(mcnemar_exact(20000, 5000) == 0.0);  // denormal flush is fine here
}

TEST_CASE("regularized incomplete beta: closed forms") {
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(0.5, 0.5, 0.25) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-10));  // (2/pi) asin(sqrt(x))
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
  const double x = 0.73;
  CHECK(regularized_incomplete_beta(2.5, 1.5, x) ==
        doctest::Approx(1.0 - regularized_incomplete_beta(1.5, 2.5, 1.0 - x)).epsilon(1e-12));
  CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), Error);
}

TEST_CASE("paired t-test reproduces a textbook value") {
  // differences {1,2,3,4,5}: t = 3 / (sqrt(2.5)/sqrt(5)) = 4.2426, df = 4
  std::vector<std::pair<double, double>> pairs{{1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}};
  TestResult r = paired_t(pairs);
  CHECK(r.statistic == doctest::Approx(4.242640687).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.013243).epsilon(1e-3));
  CHECK_THROWS_AS(paired_t({{1, 0}}), Error);
  CHECK_THROWS_AS(paired_t({{1, 0}, {1, 0}}), Error);  // zero variance
}

TEST_CASE("spearman: monotone transforms, reversal, ties") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y{1, 8, 27, 64, 125};  // monotone, nonlinear
  CHECK(spearman(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(spearman(x, rev) == doctest::Approx(-1.0).epsilon(1e-12));
  // hand-computed midrank case
  std::vector<double> xt{1, 2, 2, 3};
  std::vector<double> yt{1, 2, 3, 4};
  CHECK(spearman(xt, yt) == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)).epsilon(1e-12));
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), Error);
}

TEST_CASE("bootstrap_ci is deterministic, ordered, and centered sanely") {
  Rng rng(5);
  std::vector<double> data;
  for (int i = 0; i < 200; ++i) data.push_back(rng.normal() + 10.0);
  BootstrapCi a = bootstrap_ci(data, 2000, 0.95, 42);
  BootstrapCi b = bootstrap_ci(data, 2000, 0.95, 42);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  CHECK(a.lo < a.hi);
  CHECK(a.lo < 10.2);
  CHECK(a.hi > 9.8);
  BootstrapCi wide = bootstrap_ci(data, 2000, 0.99, 42);
  CHECK(wide.lo <= a.lo);
  CHECK(wide.hi >= a.hi);
  CHECK_THROWS_AS(bootstrap_ci({1.0}, 100, 0.95, 0), Error);
  CHECK_THROWS_AS(bootstrap_ci(data, 0, 0.95, 0), Error);
  CHECK_THROWS_AS(bootstrap_ci(data, 100, 1.0, 0), Error);
}

TEST_CASE("normal_cdf reference points") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-8));
  CHECK(normal_cdf(-1.959963985) == doctest::Approx(0.025).epsilon(1e-6));
}
