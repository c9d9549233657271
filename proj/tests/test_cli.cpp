#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "prefgeom/hashing.hpp"
#include "prefgeom/types.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCli = PREFGEOM_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("prefgeom_cli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("cli: missing input exits 1 naming the flag") {
  TempDir dir;
  const std::string cmd = std::string(kCli) + " eval --embeddings " + dir.file("nope.jsonl") +
                          " --triplets " + dir.file("nope2.jsonl") + " --scorer cosine --out " +
                          dir.file("out") + " 2>" + dir.file("err.txt");
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 1);
  const std::string err = slurp(dir.file("err.txt"));
  CHECK(err.find("--embeddings") != std::string::npos);
}

TEST_CASE("cli: unknown option exits 1") {
  CHECK(run_cli("synthetic --definitely-not-a-flag 3") == 1);
  CHECK(run_cli("") == 1);  // subcommand required
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli: synthetic risk-curve defaults to the hard verdict, rerun identical") {
  TempDir dir;
  const std::string base = "synthetic --d 24 --k 4 --n 3000 --seeds 0 risk-curve --out ";
  REQUIRE(run_cli(base + dir.file("a.txt")) == 0);
  REQUIRE(run_cli(base + dir.file("b.txt")) == 0);
  const std::string a = slurp(dir.file("a.txt"));
  CHECK(a == slurp(dir.file("b.txt")));
  CHECK(a.find("verdict\tincreasing") != std::string::npos);
  CHECK(a.find("# prefgeom-report v1") != std::string::npos);
  CHECK(a.find("config_hash=") != std::string::npos);
  // config snapshot written next to the output
  CHECK(fs::exists(dir.file("a.txt.config")));
}

TEST_CASE("cli: synthetic generate + verify, verify fails after tampering") {
  TempDir dir;
  REQUIRE(run_cli("synthetic --d 16 --k 4 --n 50 --seeds 1 generate --out " + dir.file("syn")) ==
          0);
  CHECK(fs::exists(dir.file("syn.embeddings.jsonl")));
  CHECK(fs::exists(dir.file("syn.triplets.jsonl")));
  CHECK(fs::exists(dir.file("syn.embeddings.jsonl.manifest.json")));

  // eval the cosine baseline on the generated data; deterministic output
  const std::string eval_cmd = "eval --embeddings " + dir.file("syn.embeddings.jsonl") +
                               " --triplets " + dir.file("syn.triplets.jsonl") +
                               " --scorer cosine --out ";
  REQUIRE(run_cli(eval_cmd + dir.file("eval_a.txt")) == 0);
  REQUIRE(run_cli(eval_cmd + dir.file("eval_b.txt")) == 0);
  CHECK(slurp(dir.file("eval_a.txt")) == slurp(dir.file("eval_b.txt")));

  CHECK(run_cli("verify --file " + dir.file("eval_a.txt")) == 0);
  // tamper with an input the report hashed
  std::ofstream(dir.file("syn.triplets.jsonl"), std::ios::app) << "\n";
  CHECK(run_cli("verify --file " + dir.file("eval_a.txt")) == 1);
}

TEST_CASE("cli: triplets -> fit -> eval -> angles round trip") {
  TempDir dir;
  // four participants ensure a nonempty three-way split
  write_file(dir.file("votes.csv"),
             "participant_id,statement_id,value\n"
             "u1,s1,1\nu1,s2,0\nu2,s1,1\nu2,s3,0\nu3,s2,1\nu3,s3,0\nu4,s1,0\nu4,s2,1\n");
  REQUIRE(run_cli("triplets --votes " + dir.file("votes.csv") + " --split 0.5,0.25,0.25 --seed 3 --out " +
                  dir.file("t")) == 0);
  CHECK(fs::exists(dir.file("t.train.jsonl")));
  CHECK(fs::exists(dir.file("t.val.jsonl")));
  CHECK(fs::exists(dir.file("t.test.jsonl")));

  // synthetic data gives us a store + triplets for a real fit
  REQUIRE(run_cli("synthetic --d 16 --k 4 --n 240 --seeds 2 generate --out " + dir.file("syn")) ==
          0);
  // split the generated triplets by line for train/val
  {
    std::ifstream in(dir.file("syn.triplets.jsonl"));
    std::ofstream train(dir.file("train.jsonl")), val(dir.file("val.jsonl"));
    std::string line;
    int i = 0;
    while (std::getline(in, line)) ((i++ % 4 == 0) ? val : train) << line << "\n";
  }
  const std::string fit_cmd = "fit --embeddings " + dir.file("syn.embeddings.jsonl") +
                              " --train " + dir.file("train.jsonl") + " --val " +
                              dir.file("val.jsonl") +
                              " --rank 4 --epochs 15 --lr 0.05 --seed 0 --out ";
  REQUIRE(run_cli(fit_cmd + dir.file("fa")) == 0);
  REQUIRE(run_cli(fit_cmd + dir.file("fb")) == 0);
  CHECK(slurp(dir.file("fa.scorer")) == slurp(dir.file("fb.scorer")));
  CHECK(slurp(dir.file("fa.report")) == slurp(dir.file("fb.report")));

  REQUIRE(run_cli("eval --embeddings " + dir.file("syn.embeddings.jsonl") + " --triplets " +
                  dir.file("val.jsonl") + " --scorer cosine --scorer " + dir.file("fa.scorer") +
                  " --out " + dir.file("ev.txt")) == 0);
  const std::string ev = slurp(dir.file("ev.txt"));
  CHECK(ev.find("ideal_point") != std::string::npos);
  CHECK(ev.find("cosine") != std::string::npos);

  REQUIRE(run_cli("angles --a " + dir.file("fa.scorer") + " --b " + dir.file("fb.scorer") +
                  " --out " + dir.file("ang.txt")) == 0);
  const std::string ang = slurp(dir.file("ang.txt"));
  // identical fits span the identical subspace
  CHECK(ang.find("median_cosine\t1") != std::string::npos);
}

TEST_CASE("cli: stats mcnemar from counts matches the library value") {
  TempDir dir;
  REQUIRE(run_cli("stats mcnemar --discordant-b 3 --discordant-c 0 --out " +
                  dir.file("mc.txt")) == 0);
  const std::string out = slurp(dir.file("mc.txt"));
  CHECK(out.find("p\t0.25") != std::string::npos);

  write_file(dir.file("a.txt"), "1\n1\n0\n0\n");
  write_file(dir.file("b.txt"), "1\n0\n1\n0\n");
  REQUIRE(run_cli("stats mcnemar --a " + dir.file("a.txt") + " --b " + dir.file("b.txt") +
                  " --out " + dir.file("mc2.txt")) == 0);
  const std::string out2 = slurp(dir.file("mc2.txt"));
  CHECK(out2.find("b\t1") != std::string::npos);
  CHECK(out2.find("c\t1") != std::string::npos);

  write_file(dir.file("va.txt"), "1.5\n2.0\n3.0\n4.0\n5.5\n");
  write_file(dir.file("vb.txt"), "1.0\n1.0\n1.0\n1.0\n1.0\n");
  REQUIRE(run_cli("stats wilcoxon --a " + dir.file("va.txt") + " --b " + dir.file("vb.txt") +
                  " --out " + dir.file("w.txt")) == 0);
  CHECK(slurp(dir.file("w.txt")).find("statistic\t15") != std::string::npos);
  REQUIRE(run_cli("stats paired-t --a " + dir.file("va.txt") + " --b " + dir.file("vb.txt") +
                  " --out " + dir.file("pt.txt")) == 0);
  CHECK(slurp(dir.file("pt.txt")).find("p\t") != std::string::npos);
}

TEST_CASE("cli: bands and cluster run on a small fixture") {
  TempDir dir;
  // embeddings: anchors u0/u1 and statements spread in angle
  std::ostringstream emb;
  emb << R"({"id":"u0","vector":[1.0,0.0]})" << "\n"
      << R"({"id":"u1","vector":[0.0,1.0]})" << "\n";
  std::ostringstream votes;
  votes << "participant_id,statement_id,value\n";
  for (int i = 0; i < 10; ++i) {
    const double c = -0.9 + 0.2 * i;
    emb << R"({"id":"s)" << i << R"(","vector":[)" << c << "," << std::sqrt(1.0 - c * c)
        << "]}" << "\n";
    votes << "u0,s" << i << "," << (c > 0 ? 1 : 0) << "\n";
    votes << "u1,s" << i << "," << (c > 0 ? 0 : 1) << "\n";
  }
  write_file(dir.file("emb.jsonl"), emb.str());
  write_file(dir.file("votes.csv"), votes.str());
  REQUIRE(run_cli("bands --embeddings " + dir.file("emb.jsonl") + " --votes " +
                  dir.file("votes.csv") + " --scorer cosine --bands 4 --out " +
                  dir.file("bands.txt")) == 0);
  CHECK(slurp(dir.file("bands.txt")).find("approval_rate") != std::string::npos);

  std::ostringstream authors;
  authors << "statement_id,author_id\n";
  for (int i = 0; i < 10; ++i) authors << "s" << i << "," << (i < 5 ? "u0" : "u1") << "\n";
  write_file(dir.file("authors.csv"), authors.str());
  REQUIRE(run_cli("cluster --embeddings " + dir.file("emb.jsonl") + " --votes " +
                  dir.file("votes.csv") + " --authors " + dir.file("authors.csv") +
                  " --k-list 2 --perms 5 --out " + dir.file("cl.txt")) == 0);
  CHECK(slurp(dir.file("cl.txt")).find("shuffle_mean_abs_lift") != std::string::npos);
}

TEST_CASE("cli: ingest reports counts and writes a manifest") {
  TempDir dir;
  write_file(dir.file("emb.jsonl"), R"({"id":"a","vector":[3.0,4.0]})" "\n");
  REQUIRE(run_cli("ingest --embeddings " + dir.file("emb.jsonl") + " --out " +
                  dir.file("ing.txt")) == 0);
  CHECK(fs::exists(dir.file("emb.jsonl.manifest.json")));
  const std::string out = slurp(dir.file("ing.txt"));
  CHECK(out.find("count=1") != std::string::npos);
  CHECK(out.find("renormalized=1") != std::string::npos);
}
