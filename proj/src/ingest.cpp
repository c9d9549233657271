#include "prefgeom/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prefgeom/hashing.hpp"

namespace prefgeom {

using nlohmann::json;

void EmbeddingStore::insert(const std::string& id, Vector v, std::optional<std::string> text) {
  require(!entries_.count(id), "EmbeddingStore: duplicate id '" + id + "'");
  require(v.allFinite(), "EmbeddingStore: non-finite entry in vector '" + id + "'");
  if (dim_ == 0) {
    dim_ = v.size();
  } else {
    require(v.size() == dim_, "EmbeddingStore: dimension mismatch for id '" + id + "'");
  }
  entries_.emplace(id, Entry{std::move(v), std::move(text)});
}

const Vector& EmbeddingStore::get(const std::string& id) const {
  auto it = entries_.find(id);
  require(it != entries_.end(), "EmbeddingStore: missing id '" + id + "'");
  return it->second.vec;
}

const std::optional<std::string>& EmbeddingStore::text(const std::string& id) const {
  auto it = entries_.find(id);
  require(it != entries_.end(), "EmbeddingStore: missing id '" + id + "'");
  return it->second.text;
}

std::vector<std::string> EmbeddingStore::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

EmbeddingStore load_embeddings(const std::string& path, bool expect_unit, LoadReport* report) {
  std::ifstream in(path);
  require(in.good(), "load_embeddings: cannot open " + path);
  EmbeddingStore store;
  LoadReport local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("load_embeddings: malformed line " + std::to_string(line_no) + ": " + e.what());
    }
    require(rec.contains("id") && rec.contains("vector"),
            "load_embeddings: line " + std::to_string(line_no) + " missing id or vector");
    const std::string id = rec["id"].get<std::string>();
    const auto& arr = rec["vector"];
    require(arr.is_array() && !arr.empty(),
            "load_embeddings: line " + std::to_string(line_no) + " vector not a nonempty array");
    Vector v(static_cast<Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = arr[i].get<double>();
    require(v.allFinite(), "load_embeddings: line " + std::to_string(line_no) + " non-finite entry");
    if (expect_unit) {
      const double n = v.norm();
      require(n > 1e-12, "load_embeddings: line " + std::to_string(line_no) + " zero vector");
      if (std::abs(n - 1.0) > 1e-6) ++local.renormalized;
      v /= n;
    }
    std::optional<std::string> text;
    if (rec.contains("text")) text = rec["text"].get<std::string>();
    store.insert(id, std::move(v), std::move(text));
  }
  if (report) *report = local;
  return store;
}

void save_embeddings(const EmbeddingStore& store, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_embeddings: cannot open " + path);
  for (const std::string& id : store.ids()) {
    json rec;
    rec["id"] = id;
    json arr = json::array();
    const Vector& v = store.get(id);
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    rec["vector"] = std::move(arr);
    if (store.text(id)) rec["text"] = *store.text(id);
    out << rec.dump() << "\n";
  }
}

void write_manifest(const std::string& data_path, const EmbeddingStore& store) {
  json m;
  m["dim"] = store.dim();
  m["count"] = store.size();
  m["content_hash"] = hash_file_hex(data_path);
  std::ofstream out(data_path + ".manifest.json");
  require(out.good(), "write_manifest: cannot open " + data_path + ".manifest.json");
  out << m.dump(2) << "\n";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

}  // namespace

VoteTable load_votes(const std::string& path, VoteKind kind) {
  std::ifstream in(path);
  require(in.good(), "load_votes: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "load_votes: empty file " + path);
  require(strip(line) == "participant_id,statement_id,value",
          "load_votes: unexpected header '" + line + "'");

  VoteTable table;
  table.kind = kind;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split_csv_line(line);
    require(fields.size() == 3, "load_votes: line " + std::to_string(line_no) + " needs 3 fields");
    const std::string pid = strip(fields[0]);
    const std::string sid = strip(fields[1]);
    const std::string val = strip(fields[2]);
    if (val == "pass") {
      ++table.passes_dropped;
      continue;
    }
    int value = 0;
    try {
      std::size_t pos = 0;
      value = std::stoi(val, &pos);
      require(pos == val.size(), "trailing characters");
    } catch (const std::exception&) {
      throw Error("load_votes: line " + std::to_string(line_no) + " bad value '" + val + "'");
    }
    const int max_value = (kind == VoteKind::binary) ? 1 : 6;
    require(value >= 0 && value <= max_value,
            "load_votes: line " + std::to_string(line_no) + " value out of range");
    require(seen.emplace(pid, sid).second,
            "load_votes: duplicate (participant, statement) at line " + std::to_string(line_no));
    table.records.push_back({pid, sid, value});
  }
  return table;
}

TripletSet load_triplets(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_triplets: cannot open " + path);
  TripletSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("load_triplets: malformed line " + std::to_string(line_no) + ": " + e.what());
    }
    Triplet t;
    t.anchor_id = rec.at("anchor").get<std::string>();
    t.pos_id = rec.at("pos").get<std::string>();
    t.neg_id = rec.at("neg").get<std::string>();
    if (rec.contains("strength")) t.strength = rec["strength"].get<double>();
    require(t.pos_id != t.neg_id, "load_triplets: line " + std::to_string(line_no) + " pos == neg");
    out.push_back(std::move(t));
  }
  return out;
}

void save_triplets(const TripletSet& triplets, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_triplets: cannot open " + path);
  for (const Triplet& t : triplets) {
    json rec;
    rec["anchor"] = t.anchor_id;
    rec["pos"] = t.pos_id;
    rec["neg"] = t.neg_id;
    if (t.strength) rec["strength"] = *t.strength;
    out << rec.dump() << "\n";
  }
}

TripletSet build_triplets(const VoteTable& votes) {
  std::map<std::string, std::vector<std::pair<std::string, int>>> by_participant;
  for (const VoteRecord& r : votes.records) {
    by_participant[r.participant_id].emplace_back(r.statement_id, r.value);
  }
  TripletSet out;
  for (auto& [pid, rated] : by_participant) {
    std::sort(rated.begin(), rated.end());
    for (std::size_t i = 0; i < rated.size(); ++i) {
      for (std::size_t j = i + 1; j < rated.size(); ++j) {
        if (rated[i].second == rated[j].second) continue;
        const auto& hi = rated[i].second > rated[j].second ? rated[i] : rated[j];
        const auto& lo = rated[i].second > rated[j].second ? rated[j] : rated[i];
        out.push_back({pid, hi.first, lo.first,
                       static_cast<double>(hi.second - lo.second)});
      }
    }
  }
  return out;
}

Split split_participants(std::vector<std::string> ids,
                         double train_frac, double val_frac, double test_frac,
                         std::uint64_t seed) {
  require(ids.size() >= 3, "split_participants: need at least 3 participants");
  require(train_frac > 0 && val_frac > 0 && test_frac > 0,
          "split_participants: fractions must be positive");
  require(std::abs(train_frac + val_frac + test_frac - 1.0) <= 1e-9,
          "split_participants: fractions must sum to 1");
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  const std::size_t n = ids.size();
  const std::size_t n_val = static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n)));
  const std::size_t n_test = static_cast<std::size_t>(std::floor(test_frac * static_cast<double>(n)));
  // remainder goes to train
  const std::size_t n_train = n - n_val - n_test;
  Split s;
  s.seed = seed;
  s.train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
  s.val.assign(ids.begin() + static_cast<long>(n_train),
               ids.begin() + static_cast<long>(n_train + n_val));
  s.test.assign(ids.begin() + static_cast<long>(n_train + n_val), ids.end());
  return s;
}

Vector pool_anchor(const Participant& p, const EmbeddingStore& store,
                   const std::set<std::string>& exclude) {
  require(!p.anchor_text_ids.empty(), "pool_anchor: participant has no anchor ids");
  Vector sum = Vector::Zero(store.dim());
  std::size_t used = 0;
  for (const std::string& id : p.anchor_text_ids) {
    if (exclude.count(id)) continue;
    sum += store.get(id);
    ++used;
  }
  require(used > 0, "pool_anchor: all anchors excluded for participant " + p.id);
  sum /= static_cast<double>(used);
  require(sum.norm() > 1e-12, "pool_anchor: pooled anchor has zero norm for " + p.id);
  return normalize(sum);
}

void materialize_anchors(const std::vector<Participant>& participants, EmbeddingStore& store) {
  for (const Participant& p : participants) {
    store.insert(p.id, pool_anchor(p, store));
  }
}

} // namespace prefgeom
