#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "prefgeom/ingest.hpp"

using namespace prefgeom;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("prefgeom_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("load_embeddings parses jsonl, renormalizes, reports drift") {
  TempDir dir;
  const std::string p = dir.file("emb.jsonl");
  write_file(p,
             R"({"id":"a","vector":[1.0,0.0],"text":"hello"})" "\n"
             R"({"id":"b","vector":[3.0,4.0]})" "\n");
  LoadReport report;
  EmbeddingStore store = load_embeddings(p, true, &report);
  CHECK(store.size() == 2);
  CHECK(store.dim() == 2);
  CHECK(report.renormalized == 1);  // only b drifted
  CHECK(store.get("b")[0] == doctest::Approx(0.6));
  CHECK(store.get("b")[1] == doctest::Approx(0.8));
  CHECK(*store.text("a") == "hello");
  CHECK_FALSE(store.text("b").has_value());
  CHECK(store.ids() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("load_embeddings rejects duplicates, dim mismatch, bad rows") {
  TempDir dir;
  const std::string dup = dir.file("dup.jsonl");
  write_file(dup, R"({"id":"a","vector":[1,0]})" "\n" R"({"id":"a","vector":[0,1]})" "\n");
  CHECK_THROWS_AS(load_embeddings(dup, true), Error);

  const std::string mism = dir.file("mism.jsonl");
  write_file(mism, R"({"id":"a","vector":[1,0]})" "\n" R"({"id":"b","vector":[0,1,0]})" "\n");
  CHECK_THROWS_AS(load_embeddings(mism, true), Error);

  const std::string bad = dir.file("bad.jsonl");
  write_file(bad, "{not json\n");
  CHECK_THROWS_AS(load_embeddings(bad, true), Error);

  CHECK_THROWS_AS(load_embeddings(dir.file("missing.jsonl"), true), Error);
}

TEST_CASE("save_embeddings round-trips through load") {
  TempDir dir;
  EmbeddingStore store;
  Vector v(3);
  v << 1.0, 0.0, 0.0;
  store.insert("x", v, "a text");
  v << 0.0, 1.0, 0.0;
  store.insert("y", v);
  const std::string p = dir.file("out.jsonl");
  save_embeddings(store, p);
  EmbeddingStore back = load_embeddings(p, true);
  CHECK(back.size() == 2);
  CHECK((back.get("x") - store.get("x")).norm() < 1e-12);
  CHECK(*back.text("x") == "a text");
}

TEST_CASE("write_manifest records dim, count and content hash") {
  TempDir dir;
  EmbeddingStore store;
  Vector v(2);
  v << 1.0, 0.0;
  store.insert("x", v);
  const std::string p = dir.file("m.jsonl");
  save_embeddings(store, p);
  write_manifest(p, store);
  std::ifstream in(p + ".manifest.json");
  REQUIRE(in.good());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content.find("\"dim\": 2") != std::string::npos);
  CHECK(content.find("\"count\": 1") != std::string::npos);
  CHECK(content.find("content_hash") != std::string::npos);
}

TEST_CASE("load_votes: passes dropped and counted, ranges enforced") {
  TempDir dir;
  const std::string p = dir.file("votes.csv");
  write_file(p,
             "participant_id,statement_id,value\n"
             "u1,s1,1\n"
             "u1,s2,pass\n"
             "u2,s1,0\n");
  VoteTable t = load_votes(p, VoteKind::binary);
  CHECK(t.records.size() == 2);
  CHECK(t.passes_dropped == 1);
  CHECK(t.records[0].participant_id == "u1");
  CHECK(t.records[0].value == 1);

  const std::string range = dir.file("range.csv");
  write_file(range, "participant_id,statement_id,value\nu1,s1,2\n");
  CHECK_THROWS_AS(load_votes(range, VoteKind::binary), Error);
  // 2 is fine for likert (0..6)
  CHECK(load_votes(range, VoteKind::likert).records.size() == 1);
  const std::string likert_range = dir.file("lrange.csv");
  write_file(likert_range, "participant_id,statement_id,value\nu1,s1,7\n");
  CHECK_THROWS_AS(load_votes(likert_range, VoteKind::likert), Error);

  const std::string dup = dir.file("dup.csv");
  write_file(dup, "participant_id,statement_id,value\nu1,s1,1\nu1,s1,0\n");
  CHECK_THROWS_AS(load_votes(dup, VoteKind::binary), Error);

  const std::string header = dir.file("hdr.csv");
  write_file(header, "a,b,c\nu1,s1,1\n");
  CHECK_THROWS_AS(load_votes(header, VoteKind::binary), Error);
}

TEST_CASE("build_triplets emits one triplet per discordant pair with strengths") {
  VoteTable votes;
  votes.kind = VoteKind::likert;
  votes.records = {{"u1", "s1", 5}, {"u1", "s2", 2}, {"u1", "s3", 2}, {"u2", "s1", 0},
                   {"u2", "s2", 1}};
  TripletSet t = build_triplets(votes);
  // u1: (s1,s2), (s1,s3) discordant; (s2,s3) tied. u2: (s2,s1).
  REQUIRE(t.size() == 3);
  CHECK(t[0].anchor_id == "u1");
  CHECK(t[0].pos_id == "s1");
  CHECK(t[0].neg_id == "s2");
  CHECK(*t[0].strength == doctest::Approx(3.0));
  CHECK(t[1].pos_id == "s1");
  CHECK(t[1].neg_id == "s3");
  CHECK(t[2].anchor_id == "u2");
  CHECK(t[2].pos_id == "s2");
  CHECK(t[2].neg_id == "s1");
  CHECK(*t[2].strength == doctest::Approx(1.0));
}

TEST_CASE("triplets round-trip through jsonl") {
  TempDir dir;
  TripletSet t = {{"u1", "p", "n", 2.0}, {"u2", "x", "y", std::nullopt}};
  const std::string p = dir.file("t.jsonl");
  save_triplets(t, p);
  TripletSet back = load_triplets(p);
  REQUIRE(back.size() == 2);
  CHECK(back[0].anchor_id == "u1");
  CHECK(*back[0].strength == doctest::Approx(2.0));
  CHECK_FALSE(back[1].strength.has_value());

  const std::string same = dir.file("same.jsonl");
  write_file(same, R"({"anchor":"a","pos":"x","neg":"x"})" "\n");
  CHECK_THROWS_AS(load_triplets(same), Error);
}

TEST_CASE("split_participants is a seeded disjoint partition") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("u" + std::to_string(i));
  Split s = split_participants(ids, 0.6, 0.2, 0.2, 7);
  CHECK(s.train.size() == 6);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
  std::set<std::string> all;
  for (const auto& part : {s.train, s.val, s.test}) all.insert(part.begin(), part.end());
  CHECK(all.size() == 10);
  // determinism and order-independence of the input
  std::vector<std::string> shuffled(ids.rbegin(), ids.rend());
  Split s2 = split_participants(shuffled, 0.6, 0.2, 0.2, 7);
  CHECK(s.train == s2.train);
  CHECK(s.val == s2.val);

  CHECK_THROWS_AS(split_participants(ids, 0.5, 0.2, 0.2, 7), Error);
  CHECK_THROWS_AS(split_participants({"a", "b"}, 0.4, 0.3, 0.3, 7), Error);
}

TEST_CASE("pool_anchor averages, renormalizes, honors exclusions") {
  EmbeddingStore store;
  Vector v(2);
  v << 1.0, 0.0;
  store.insert("t1", v);
  v << 0.0, 1.0;
  store.insert("t2", v);
  Participant p{"u1", {"t1", "t2"}};
  Vector pooled = pool_anchor(p, store);
  CHECK(pooled.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pooled[0] == doctest::Approx(std::sqrt(0.5)));
  Vector only1 = pool_anchor(p, store, {"t2"});
  CHECK(only1[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(pool_anchor(p, store, {"t1", "t2"}), Error);

  materialize_anchors({p}, store);
  CHECK(store.contains("u1"));
  CHECK((store.get("u1") - pooled).norm() < 1e-12);
}
