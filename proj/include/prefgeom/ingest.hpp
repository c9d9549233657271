#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prefgeom/linalg.hpp"
#include "prefgeom/types.hpp"

namespace prefgeom {

// Id-indexed dense embeddings, unit-norm after load when requested.
class EmbeddingStore {
public:
  EmbeddingStore() = default;

  void insert(const std::string& id, Vector v, std::optional<std::string> text = std::nullopt);
  bool contains(const std::string& id) const { return entries_.count(id) > 0; }
  const Vector& get(const std::string& id) const;
  const std::optional<std::string>& text(const std::string& id) const;

  Index dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> ids() const;  // sorted

private:
  struct Entry {
    Vector vec;
    std::optional<std::string> text;
  };
  Index dim_ = 0;
  std::map<std::string, Entry> entries_;
};

struct LoadReport {
  std::size_t renormalized = 0;  // vectors whose norm drifted > 1e-6 from 1
};

// JSON-lines file: {"id": ..., "vector": [...], "text": ...?} per line.
EmbeddingStore load_embeddings(const std::string& path, bool expect_unit,
                               LoadReport* report = nullptr);
void save_embeddings(const EmbeddingStore& store, const std::string& path);

// Sidecar manifest next to an embeddings file: dim, count, content hash.
void write_manifest(const std::string& data_path, const EmbeddingStore& store);

enum class VoteKind { binary, likert };

struct VoteRecord {
  std::string participant_id;
  std::string statement_id;
  int value;
};

struct VoteTable {
  VoteKind kind = VoteKind::binary;
  std::vector<VoteRecord> records;
  std::size_t passes_dropped = 0;
};

// CSV with header participant_id,statement_id,value. "pass" rows are dropped
// and counted; duplicates and out-of-range values are errors.
VoteTable load_votes(const std::string& path, VoteKind kind);

struct Triplet {
  std::string anchor_id;
  std::string pos_id;
  std::string neg_id;
  std::optional<double> strength;  // value(pos) - value(neg) when derived from votes
};

using TripletSet = std::vector<Triplet>;

TripletSet load_triplets(const std::string& path);
void save_triplets(const TripletSet& triplets, const std::string& path);

struct Participant {
  std::string id;
  std::vector<std::string> anchor_text_ids;
};

// One triplet per discordant rated pair per participant; the anchor field is
// the participant id (resolved to a pooled vector at scoring time).
TripletSet build_triplets(const VoteTable& votes);

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

Split split_participants(std::vector<std::string> ids,
                         double train_frac, double val_frac, double test_frac,
                         std::uint64_t seed);

// Mean of the participant's non-excluded anchor embeddings, renormalized.
Vector pool_anchor(const Participant& p, const EmbeddingStore& store,
                   const std::set<std::string>& exclude = {});

// Inserts one pooled anchor vector per participant under the participant id.
void materialize_anchors(const std::vector<Participant>& participants,
                         EmbeddingStore& store);

} // namespace prefgeom
