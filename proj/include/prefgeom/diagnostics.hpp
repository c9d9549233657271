#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prefgeom/ingest.hpp"
#include "prefgeom/scorers.hpp"
#include "prefgeom/stats.hpp"

namespace prefgeom {

struct EvalReport {
  std::vector<int> outcomes;                         // 0/1 per triplet, input order
  std::map<std::string, double> participant_accuracy;
  double micro = 0.0;  // triplet-weighted
  double macro = 0.0;  // participant-weighted
  std::string scorer_id;
};

// Outcome = 1 iff margin > 0; a zero margin counts as incorrect.
EvalReport triplet_accuracy(const Scorer& s, const TripletSet& triplets,
                            const EmbeddingStore& store);

struct ProximityBand {
  double sim_lo = 0.0;
  double sim_hi = 0.0;
  std::size_t count = 0;
  double approval_rate = 0.0;
};

// Pools (similarity, vote) pairs across participants, cuts at global
// quantiles; bands are left-closed, right-open except the last.
std::vector<ProximityBand> proximity_bands(const VoteTable& votes, const Scorer& scorer,
                                           const EmbeddingStore& store, int n_bands = 5);

struct PairedComparison {
  std::uint64_t b = 0;  // A correct, B wrong
  std::uint64_t c = 0;  // B correct, A wrong
  double mcnemar_p = 1.0;
  std::optional<TestResult> wilcoxon;  // unset when all participant deltas are zero
  std::optional<TestResult> t_test;    // unset when delta variance is zero
  double win_share = 0.0;              // participants where A beats B
  double tie_share = 0.0;
  double loss_share = 0.0;
};

PairedComparison paired_model_comparison(const EvalReport& a, const EvalReport& b,
                                         const TripletSet& triplets);

struct KmeansResult {
  std::vector<int> assignments;
  Matrix centroids;  // k x dim
  double inertia = 0.0;
};

// k-means++ seeding, Lloyd iterations to an assignment fixpoint; empty
// clusters are re-seeded from the farthest point. Deterministic per seed.
KmeansResult kmeans(const std::vector<Vector>& vectors, int k, std::uint64_t seed,
                    int restarts = 1, int max_iter = 200);

struct CoherenceResult {
  double within = 0.0;
  double across = 0.0;
  std::optional<double> lift;          // unset with a single cluster
  double shuffle_mean_abs_lift = 0.0;  // mean |lift| over label permutations
  std::size_t users_excluded = 0;      // users with no eligible votes on a side
};

// comment_author maps statement id -> author participant id; user_cluster maps
// participant id -> cluster label.
CoherenceResult cluster_coherence(const std::map<std::string, int>& user_cluster,
                                  const VoteTable& votes,
                                  const std::map<std::string, std::string>& comment_author,
                                  int n_permutations = 50, std::uint64_t seed = 0);

struct LikertRow {
  std::string participant_id;
  std::string statement_id;
  int rating;
};

// Pooled Spearman between scorer similarity and Likert rating; the anchor pool
// excludes the participant's justification text about the rated statement
// (exclusions maps (participant, statement) -> excluded anchor text ids).
double likert_correlation(const std::vector<Participant>& participants,
                          const std::vector<LikertRow>& rows, const Scorer& scorer,
                          const EmbeddingStore& store,
                          const std::map<std::pair<std::string, std::string>,
                                         std::set<std::string>>& exclusions = {});

struct SubspaceReport {
  std::vector<double> cosines;  // descending principal-angle cosines
  double max_cosine = 0.0;
  double median_cosine = 0.0;
  double min_cosine = 0.0;
};

SubspaceReport subspace_report(const Matrix& l1, const Matrix& l2);

} // namespace prefgeom
