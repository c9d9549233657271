#include "prefgeom/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace prefgeom {

EvalReport triplet_accuracy(const Scorer& s, const TripletSet& triplets,
                            const EmbeddingStore& store) {
  require(!triplets.empty(), "triplet_accuracy: empty triplet set");
  EvalReport report;
  report.scorer_id = s.tag();
  report.outcomes.reserve(triplets.size());
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_participant;  // correct, total
  std::size_t correct = 0;
  for (const Triplet& t : triplets) {
    const double m = margin(s, store.get(t.anchor_id), store.get(t.pos_id), store.get(t.neg_id));
    const int ok = m > 0.0 ? 1 : 0;
    report.outcomes.push_back(ok);
    correct += static_cast<std::size_t>(ok);
    auto& [c, n] = per_participant[t.anchor_id];
    c += static_cast<std::size_t>(ok);
    ++n;
  }
  report.micro = static_cast<double>(correct) / static_cast<double>(triplets.size());
  double macro_sum = 0.0;
  for (const auto& [pid, cn] : per_participant) {
    const double acc = static_cast<double>(cn.first) / static_cast<double>(cn.second);
    report.participant_accuracy[pid] = acc;
    macro_sum += acc;
  }
  report.macro = macro_sum / static_cast<double>(per_participant.size());
  return report;
}

std::vector<ProximityBand> proximity_bands(const VoteTable& votes, const Scorer& scorer,
                                           const EmbeddingStore& store, int n_bands) {
  require(votes.kind == VoteKind::binary, "proximity_bands: needs binary votes");
  require(n_bands >= 1, "proximity_bands: need >= 1 band");
  std::vector<std::pair<double, int>> pairs;  // (similarity, vote)
  pairs.reserve(votes.records.size());
  for (const VoteRecord& r : votes.records) {
    pairs.emplace_back(score(scorer, store.get(r.participant_id), store.get(r.statement_id)),
                       r.value);
  }
  require(pairs.size() >= static_cast<std::size_t>(n_bands),
          "proximity_bands: fewer pairs than bands");

  std::vector<double> sims(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) sims[i] = pairs[i].first;
  std::sort(sims.begin(), sims.end());
  // Global quantile edges over the pooled pairs.
  std::vector<double> edges;
  for (int b = 1; b < n_bands; ++b) {
    edges.push_back(sims[pairs.size() * static_cast<std::size_t>(b) /
                         static_cast<std::size_t>(n_bands)]);
  }

  std::vector<std::size_t> counts(static_cast<std::size_t>(n_bands), 0);
  std::vector<std::size_t> approvals(static_cast<std::size_t>(n_bands), 0);
  for (const auto& [sim, vote] : pairs) {
    // Left-closed, right-open except the last band: a value equal to an edge
    // belongs to the band above it.
    std::size_t band = static_cast<std::size_t>(
        std::distance(edges.begin(), std::upper_bound(edges.begin(), edges.end(), sim)));
    counts[band] += 1;
    approvals[band] += static_cast<std::size_t>(vote);
  }

  std::vector<ProximityBand> bands;
  for (int b = 0; b < n_bands; ++b) {
    ProximityBand band;
    band.sim_lo = b == 0 ? sims.front() : edges[static_cast<std::size_t>(b - 1)];
    band.sim_hi = b == n_bands - 1 ? sims.back() : edges[static_cast<std::size_t>(b)];
    band.count = counts[static_cast<std::size_t>(b)];
    band.approval_rate = band.count == 0
                             ? 0.0
                             : static_cast<double>(approvals[static_cast<std::size_t>(b)]) /
                                   static_cast<double>(band.count);
    bands.push_back(band);
  }
  return bands;
}

PairedComparison paired_model_comparison(const EvalReport& a, const EvalReport& b,
                                         const TripletSet& triplets) {
  require(a.outcomes.size() == triplets.size() && b.outcomes.size() == triplets.size(),
          "paired_model_comparison: outcome/triplet universe mismatch");
  PairedComparison cmp;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (a.outcomes[i] == 1 && b.outcomes[i] == 0) ++cmp.b;
    if (a.outcomes[i] == 0 && b.outcomes[i] == 1) ++cmp.c;
  }
  cmp.mcnemar_p = (cmp.b + cmp.c == 0) ? 1.0 : mcnemar_exact(cmp.b, cmp.c);

  require(a.participant_accuracy.size() == b.participant_accuracy.size(),
          "paired_model_comparison: participant sets differ");
  std::vector<std::pair<double, double>> pairs;
  std::size_t wins = 0, ties = 0, losses = 0;
  for (const auto& [pid, acc_a] : a.participant_accuracy) {
    auto it = b.participant_accuracy.find(pid);
    require(it != b.participant_accuracy.end(),
            "paired_model_comparison: participant '" + pid + "' missing in B");
    pairs.emplace_back(acc_a, it->second);
    if (acc_a > it->second) ++wins;
    else if (acc_a < it->second) ++losses;
    else ++ties;
  }
  const double n = static_cast<double>(pairs.size());
  cmp.win_share = static_cast<double>(wins) / n;
  cmp.tie_share = static_cast<double>(ties) / n;
  cmp.loss_share = static_cast<double>(losses) / n;

  bool any_nonzero = false;
  for (const auto& [x, y] : pairs) any_nonzero |= (x != y);
  if (any_nonzero) {
    cmp.wilcoxon = wilcoxon_signed_rank(pairs);
    double mean = 0.0;
    for (const auto& [x, y] : pairs) mean += x - y;
    mean /= n;
    double ss = 0.0;
    for (const auto& [x, y] : pairs) ss += ((x - y) - mean) * ((x - y) - mean);
    if (ss > 0.0 && pairs.size() >= 2) cmp.t_test = paired_t(pairs);
  }
  return cmp;
}

namespace {

double sq_dist(const Vector& a, const Vector& b) { return (a - b).squaredNorm(); }

KmeansResult kmeans_once(const std::vector<Vector>& vectors, int k, Rng& rng, int max_iter) {
  const std::size_t n = vectors.size();
  const Index dim = vectors[0].size();

  // k-means++ seeding
  Matrix centroids(k, dim);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.uniform_int(n);
  centroids.row(0) = vectors[first].transpose();
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], sq_dist(vectors[i], Vector(centroids.row(c - 1))));
      total += min_d2[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = rng.uniform_int(n);
    }
    centroids.row(c) = vectors[chosen].transpose();
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(vectors[i], Vector(centroids.row(c)));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, dim);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(assign[i]) += vectors[i].transpose();
      counts[static_cast<std::size_t>(assign[i])] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        // Re-seed an empty cluster from the point farthest from its centroid.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_dist(vectors[i], Vector(centroids.row(assign[i])));
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.row(c) = vectors[far].transpose();
      } else {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }

  KmeansResult res;
  res.assignments = std::move(assign);
  res.centroids = std::move(centroids);
  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res.inertia += sq_dist(vectors[i], Vector(res.centroids.row(res.assignments[i])));
  }
  return res;
}

}  // namespace

KmeansResult kmeans(const std::vector<Vector>& vectors, int k, std::uint64_t seed,
                    int restarts, int max_iter) {
  require(!vectors.empty(), "kmeans: no vectors");
  require(k >= 1 && static_cast<std::size_t>(k) <= vectors.size(), "kmeans: need 1 <= k <= n");
  Rng root(seed);
  KmeansResult best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Rng run = root.split(static_cast<std::uint64_t>(r));
    KmeansResult res = kmeans_once(vectors, k, run, max_iter);
    if (res.inertia < best_inertia) {
      best_inertia = res.inertia;
      best = std::move(res);
    }
  }
  return best;
}

namespace {

// Macro-averaged within/across rates for one labeling. Per cluster, user rates
// are vote-weighted (each user's rate weighted by their eligible-vote count),
// then clusters are macro-averaged.
struct LiftAccum {
  double within = 0.0;
  double across = 0.0;
  std::optional<double> lift;
  std::size_t users_excluded = 0;
};

LiftAccum coherence_for_labels(const std::map<std::string, int>& user_cluster,
                               const VoteTable& votes,
                               const std::map<std::string, std::string>& comment_author) {
  struct UserCounts {
    std::size_t within_votes = 0, within_agrees = 0;
    std::size_t across_votes = 0, across_agrees = 0;
  };
  std::map<std::string, UserCounts> per_user;
  for (const VoteRecord& r : votes.records) {
    auto uc = user_cluster.find(r.participant_id);
    if (uc == user_cluster.end()) continue;
    auto author_it = comment_author.find(r.statement_id);
    if (author_it == comment_author.end()) continue;
    auto ac = user_cluster.find(author_it->second);
    if (ac == user_cluster.end()) continue;
    UserCounts& counts = per_user[r.participant_id];
    if (ac->second == uc->second) {
      counts.within_votes += 1;
      counts.within_agrees += static_cast<std::size_t>(r.value);
    } else {
      counts.across_votes += 1;
      counts.across_agrees += static_cast<std::size_t>(r.value);
    }
  }

  struct ClusterAccum {
    double within_num = 0.0, within_den = 0.0;
    double across_num = 0.0, across_den = 0.0;
  };
  std::map<int, ClusterAccum> per_cluster;
  LiftAccum out;
  for (const auto& [uid, c] : user_cluster) {
    if (!per_user.count(uid)) ++out.users_excluded;  // no eligible votes at all
  }
  for (const auto& [uid, counts] : per_user) {
    const int c = user_cluster.at(uid);
    ClusterAccum& acc = per_cluster[c];
    if (counts.within_votes == 0 && counts.across_votes == 0) {
      ++out.users_excluded;
      continue;
    }
    if (counts.within_votes > 0) {
      acc.within_num += static_cast<double>(counts.within_agrees);
      acc.within_den += static_cast<double>(counts.within_votes);
    }
    if (counts.across_votes > 0) {
      acc.across_num += static_cast<double>(counts.across_agrees);
      acc.across_den += static_cast<double>(counts.across_votes);
    }
  }

  double within_sum = 0.0, across_sum = 0.0;
  std::size_t within_clusters = 0, across_clusters = 0;
  for (const auto& [c, acc] : per_cluster) {
    if (acc.within_den > 0.0) {
      within_sum += acc.within_num / acc.within_den;
      ++within_clusters;
    }
    if (acc.across_den > 0.0) {
      across_sum += acc.across_num / acc.across_den;
      ++across_clusters;
    }
  }
  out.within = within_clusters > 0 ? within_sum / static_cast<double>(within_clusters) : 0.0;
  out.across = across_clusters > 0 ? across_sum / static_cast<double>(across_clusters) : 0.0;

  std::set<int> distinct;
  for (const auto& [_, c] : user_cluster) distinct.insert(c);
  if (distinct.size() >= 2 && across_clusters > 0) {
    out.lift = out.within - out.across;
  }
  return out;
}

}  // namespace

CoherenceResult cluster_coherence(const std::map<std::string, int>& user_cluster,
                                  const VoteTable& votes,
                                  const std::map<std::string, std::string>& comment_author,
                                  int n_permutations, std::uint64_t seed) {
  require(votes.kind == VoteKind::binary, "cluster_coherence: needs binary votes");
  require(!user_cluster.empty(), "cluster_coherence: no users");
  LiftAccum base = coherence_for_labels(user_cluster, votes, comment_author);

  CoherenceResult res;
  res.within = base.within;
  res.across = base.across;
  res.lift = base.lift;
  res.users_excluded = base.users_excluded;

  if (n_permutations > 0 && base.lift) {
    std::vector<std::string> users;
    std::vector<int> labels;
    for (const auto& [uid, c] : user_cluster) {
      users.push_back(uid);
      labels.push_back(c);
    }
    Rng rng(seed);
    double abs_sum = 0.0;
    std::size_t valid = 0;
    for (int p = 0; p < n_permutations; ++p) {
      std::vector<int> shuffled = labels;
      rng.shuffle(shuffled);
      std::map<std::string, int> permuted;
      for (std::size_t i = 0; i < users.size(); ++i) permuted[users[i]] = shuffled[i];
      LiftAccum perm = coherence_for_labels(permuted, votes, comment_author);
      if (perm.lift) {
        abs_sum += std::abs(*perm.lift);
        ++valid;
      }
    }
    res.shuffle_mean_abs_lift = valid > 0 ? abs_sum / static_cast<double>(valid) : 0.0;
  }
  return res;
}

double likert_correlation(
    const std::vector<Participant>& participants, const std::vector<LikertRow>& rows,
    const Scorer& scorer, const EmbeddingStore& store,
    const std::map<std::pair<std::string, std::string>, std::set<std::string>>& exclusions) {
  require(rows.size() >= 2, "likert_correlation: need >= 2 rating rows");
  std::map<std::string, const Participant*> by_id;
  for (const Participant& p : participants) by_id[p.id] = &p;

  std::vector<double> sims;
  std::vector<double> ratings;
  for (const LikertRow& row : rows) {
    auto it = by_id.find(row.participant_id);
    require(it != by_id.end(), "likert_correlation: unknown participant " + row.participant_id);
    std::set<std::string> exclude;
    auto ex = exclusions.find({row.participant_id, row.statement_id});
    if (ex != exclusions.end()) exclude = ex->second;
    Vector anchor = pool_anchor(*it->second, store, exclude);
    sims.push_back(score(scorer, anchor, store.get(row.statement_id)));
    ratings.push_back(static_cast<double>(row.rating));
  }
  return spearman(sims, ratings);
}

SubspaceReport subspace_report(const Matrix& l1, const Matrix& l2) {
  require(l1.rows() == l2.rows(), "subspace_report: ambient dims differ");
  SubspaceBasis q1 = orthonormalize(l1);
  SubspaceBasis q2 = orthonormalize(l2);
  SubspaceReport rep;
  rep.cosines = principal_angle_cosines(q1, q2);
  rep.max_cosine = rep.cosines.front();
  rep.min_cosine = rep.cosines.back();
  const std::size_t n = rep.cosines.size();
  rep.median_cosine = (n % 2 == 1) ? rep.cosines[n / 2]
                                   : 0.5 * (rep.cosines[n / 2 - 1] + rep.cosines[n / 2]);
  return rep;
}

} // namespace prefgeom
