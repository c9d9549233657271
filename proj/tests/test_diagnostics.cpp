#include <cmath>

#include "doctest.h"
#include "prefgeom/diagnostics.hpp"

using namespace prefgeom;

namespace {

Vector unit2(double c) {
  Vector v(2);
  v << c, std::sqrt(std::max(0.0, 1.0 - c * c));
  return v;
}

Scorer cosine_scorer() {
  Scorer s;
  s.variant = CosineScorer{};
  return s;
}

}  // namespace

TEST_CASE("triplet_accuracy: micro, macro, ties count as incorrect") {
  EmbeddingStore store;
  Vector e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  store.insert("u1", e1);
  store.insert("u2", e1);
  store.insert("near", unit2(0.9));
  store.insert("far", unit2(0.1));
  store.insert("mid_a", unit2(0.5));
  Vector mirror(2);
  mirror << 0.5, -std::sqrt(0.75);  // same cosine to u2? no - to u1
  store.insert("mid_b", mirror);

  TripletSet triplets = {
      {"u1", "near", "far", std::nullopt},   // correct
      {"u1", "near", "mid_a", std::nullopt}, // correct
      {"u2", "mid_a", "mid_b", std::nullopt} // tie margin vs u1... anchor u2=e1, cos equal -> tie
  };
  EvalReport r = triplet_accuracy(cosine_scorer(), triplets, store);
  CHECK(r.outcomes == std::vector<int>{1, 1, 0});
  CHECK(r.micro == doctest::Approx(2.0 / 3.0));
  CHECK(r.participant_accuracy.at("u1") == doctest::Approx(1.0));
  CHECK(r.participant_accuracy.at("u2") == doctest::Approx(0.0));
  CHECK(r.macro == doctest::Approx(0.5));
  CHECK(r.scorer_id == "cosine");
  CHECK_THROWS_AS(triplet_accuracy(cosine_scorer(), {}, store), Error);
}

TEST_CASE("proximity_bands: pooled quantile cuts and per-band approval") {
  EmbeddingStore store;
  Vector anchor(2);
  anchor << 1, 0;
  store.insert("u", anchor);
  VoteTable votes;
  votes.kind = VoteKind::binary;
  for (int i = 0; i < 10; ++i) {
    const double c = 0.05 + 0.1 * i;
    const std::string sid = "s" + std::to_string(i);
    store.insert(sid, unit2(c));
    votes.records.push_back({"u", sid, c >= 0.5 ? 1 : 0});
  }
  auto bands = proximity_bands(votes, cosine_scorer(), store, 5);
  REQUIRE(bands.size() == 5);
  std::size_t total = 0;
  for (const auto& b : bands) total += b.count;
  CHECK(total == 10);
  for (const auto& b : bands) CHECK(b.count == 2);
  CHECK(bands[0].approval_rate == doctest::Approx(0.0));
  CHECK(bands[1].approval_rate == doctest::Approx(0.0));
  CHECK(bands[2].approval_rate == doctest::Approx(0.5));
  CHECK(bands[3].approval_rate == doctest::Approx(1.0));
  CHECK(bands[4].approval_rate == doctest::Approx(1.0));
  // monotone edges
  for (std::size_t i = 1; i < bands.size(); ++i) CHECK(bands[i].sim_lo >= bands[i - 1].sim_lo);

  VoteTable likert;
  likert.kind = VoteKind::likert;
  CHECK_THROWS_AS(proximity_bands(likert, cosine_scorer(), store, 5), Error);
}

TEST_CASE("paired_model_comparison: discordant counts, shares, optional tests") {
  EvalReport a, b;
  a.outcomes = {1, 1, 0, 0};
  b.outcomes = {1, 0, 1, 0};
  a.participant_accuracy = {{"u1", 1.0}, {"u2", 0.5}};
  b.participant_accuracy = {{"u1", 0.5}, {"u2", 0.5}};
  TripletSet triplets(4, Triplet{"u", "p", "n", std::nullopt});
  PairedComparison cmp = paired_model_comparison(a, b, triplets);
  CHECK(cmp.b == 1);
  CHECK(cmp.c == 1);
  CHECK(cmp.mcnemar_p == doctest::Approx(1.0));
  CHECK(cmp.win_share == doctest::Approx(0.5));
  CHECK(cmp.tie_share == doctest::Approx(0.5));
  CHECK(cmp.loss_share == doctest::Approx(0.0));
  REQUIRE(cmp.wilcoxon.has_value());
  CHECK(cmp.wilcoxon->p_value == doctest::Approx(1.0));  // single nonzero diff
  CHECK(cmp.t_test.has_value());

  // all-tied participants: both optional tests unset
  EvalReport c = a;
  PairedComparison same = paired_model_comparison(a, a, triplets);
  CHECK(same.b == 0);
  CHECK(same.c == 0);
  CHECK(same.mcnemar_p == doctest::Approx(1.0));
  CHECK_FALSE(same.wilcoxon.has_value());
  CHECK_FALSE(same.t_test.has_value());
  CHECK(same.tie_share == doctest::Approx(1.0));

  EvalReport short_report = a;
  short_report.outcomes = {1};
  CHECK_THROWS_AS(paired_model_comparison(short_report, b, triplets), Error);
}

TEST_CASE("kmeans recovers separated blobs deterministically") {
  Rng rng(3);
  std::vector<Vector> pts;
  for (int i = 0; i < 30; ++i) {
    Vector v(2);
    v << 10.0 + 0.1 * rng.normal(), 10.0 + 0.1 * rng.normal();
    pts.push_back(v);
  }
  for (int i = 0; i < 30; ++i) {
    Vector v(2);
    v << -10.0 + 0.1 * rng.normal(), -10.0 + 0.1 * rng.normal();
    pts.push_back(v);
  }
  KmeansResult r = kmeans(pts, 2, 7, 3);
  // first 30 in one cluster, last 30 in the other
  for (int i = 1; i < 30; ++i) CHECK(r.assignments[i] == r.assignments[0]);
  for (int i = 31; i < 60; ++i) CHECK(r.assignments[i] == r.assignments[30]);
  CHECK(r.assignments[0] != r.assignments[30]);

  KmeansResult again = kmeans(pts, 2, 7, 3);
  CHECK(r.assignments == again.assignments);
  CHECK(r.inertia == again.inertia);

  KmeansResult one = kmeans(pts, 1, 7);
  CHECK(one.inertia > r.inertia);
  CHECK_THROWS_AS(kmeans(pts, 0, 7), Error);
  CHECK_THROWS_AS(kmeans({}, 1, 7), Error);
}

TEST_CASE("cluster_coherence on a perfectly coherent fixture") {
  std::map<std::string, int> clusters{{"u1", 0}, {"u2", 0}, {"u3", 1}, {"u4", 1}};
  std::map<std::string, std::string> authors{{"s1", "u1"}, {"s3", "u3"}};
  VoteTable votes;
  votes.kind = VoteKind::binary;
  votes.records = {{"u2", "s1", 1},  // within own cluster, agrees
                   {"u2", "s3", 0},  // across, disagrees
                   {"u4", "s3", 1},
                   {"u4", "s1", 0}};
  CoherenceResult r = cluster_coherence(clusters, votes, authors, 20, 1);
  CHECK(r.within == doctest::Approx(1.0));
  CHECK(r.across == doctest::Approx(0.0));
  REQUIRE(r.lift.has_value());
  CHECK(*r.lift == doctest::Approx(1.0));
  CHECK(r.users_excluded == 2);  // the authors cast no votes
  CHECK(r.shuffle_mean_abs_lift >= 0.0);
  CHECK(r.shuffle_mean_abs_lift <= 1.0);

  // single cluster: no across votes, lift undefined
  std::map<std::string, int> mono{{"u1", 0}, {"u2", 0}};
  CoherenceResult single = cluster_coherence(mono, votes, authors, 0, 1);
  CHECK_FALSE(single.lift.has_value());
}

TEST_CASE("likert_correlation is 1 on a monotone fixture and honors exclusions") {
  EmbeddingStore store;
  Vector anchor(2);
  anchor << 1, 0;
  store.insert("t1", anchor);
  std::vector<LikertRow> rows;
  for (int i = 0; i < 5; ++i) {
    const double c = 0.1 + 0.2 * i;
    store.insert("s" + std::to_string(i), unit2(c));
    rows.push_back({"u1", "s" + std::to_string(i), i});  // rating grows with cosine
  }
  std::vector<Participant> parts{{"u1", {"t1"}}};
  CHECK(likert_correlation(parts, rows, cosine_scorer(), store) == doctest::Approx(1.0));

  // excluding the rated statement from a multi-text anchor pool changes the anchor
  std::vector<Participant> pooled{{"u1", {"t1", "s4"}}};
  std::map<std::pair<std::string, std::string>, std::set<std::string>> excl;
  for (const auto& r : rows) excl[{r.participant_id, r.statement_id}] = {r.statement_id};
  const double with_excl = likert_correlation(pooled, rows, cosine_scorer(), store, excl);
  CHECK(std::isfinite(with_excl));
  CHECK_THROWS_AS(likert_correlation(parts, {rows[0]}, cosine_scorer(), store), Error);
}

TEST_CASE("subspace_report: identical, rotated, orthogonal spans") {
  Rng rng(9);
  SubspaceBasis full = random_orthonormal_basis(rng, 10, 6);
  Matrix a = full.Q.leftCols(3);
  Matrix b = full.Q.rightCols(3);

  SubspaceReport same = subspace_report(a, a);
  CHECK(same.median_cosine == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(same.min_cosine == doctest::Approx(1.0).epsilon(1e-10));

  // arbitrary (non-orthonormal) matrix with the same column span
  Matrix mixed = a * random_gaussian_matrix(rng, 3, 3);
  SubspaceReport span = subspace_report(a, mixed);
  CHECK(span.min_cosine == doctest::Approx(1.0).epsilon(1e-9));

  SubspaceReport orth = subspace_report(a, b);
  CHECK(std::abs(orth.max_cosine) < 1e-10);
  CHECK(orth.cosines.size() == 3);

  CHECK_THROWS_AS(subspace_report(a, random_gaussian_matrix(rng, 8, 3)), Error);
}
