// prefgeom: command-line surface over the preference-geometry library.
//
// Subcommand style; every report embeds a format version, the resolved config
// hash, and content hashes of the input files, and a resolved-config snapshot
// is written next to each primary output. Identical config + inputs produce
// byte-identical outputs.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prefgeom/diagnostics.hpp"
#include "prefgeom/hashing.hpp"
#include "prefgeom/ingest.hpp"
#include "prefgeom/remote.hpp"
#include "prefgeom/scorers.hpp"
#include "prefgeom/stats.hpp"
#include "prefgeom/synthetic.hpp"
#include "prefgeom/train.hpp"

namespace {

using namespace prefgeom;

constexpr const char* kFormatVersion = "prefgeom-report v1";

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : split_commas(s)) out.push_back(std::stod(t));
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& t : split_commas(s)) out.push_back(std::stoull(t));
  require(!out.empty(), "empty seed list");
  return out;
}

// Accumulates a report; the header carries the format version, the resolved
// config (and its hash), and input manifest hashes.
class Report {
public:
  Report(std::string command, std::string config) : command_(std::move(command)) {
    config_ = std::move(config);
  }

  void add_input(const std::string& path) {
    inputs_.emplace_back(path, hash_file_hex(path));
  }

  void line(const std::string& s) { body_.push_back(s); }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open output file " + path);
    out << "# " << kFormatVersion << "\n";
    out << "# command=" << command_ << "\n";
    out << "# config_hash=" << hex64(fnv1a64(config_)) << "\n";
    for (const auto& [p, h] : inputs_) out << "# input=" << p << " hash=" << h << "\n";
    for (const auto& l : body_) out << l << "\n";
    require(out.good(), "write failed for " + path);

    std::ofstream snap(path + ".config", std::ios::binary);
    require(snap.good(), "cannot open config snapshot " + path + ".config");
    snap << config_;
    if (!config_.empty() && config_.back() != '\n') snap << "\n";
  }

  void print() const {
    for (const auto& l : body_) std::cout << l << "\n";
  }

private:
  std::string command_;
  std::string config_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> body_;
};

// Validation errors for missing inputs name the offending flag.
void need_file(const std::string& flag, const std::string& path) {
  require(std::filesystem::exists(path), flag + ": file not found: " + path);
}

VoteKind parse_kind(const std::string& kind) {
  if (kind == "binary") return VoteKind::binary;
  if (kind == "likert") return VoteKind::likert;
  throw Error("unknown vote kind '" + kind + "' (expected binary or likert)");
}

// CSV with header participant_id,text_id: which texts form each anchor pool.
std::vector<Participant> load_anchor_map(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open anchors file " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty anchors file " + path);
  require(line == "participant_id,text_id", "anchors file needs header participant_id,text_id");
  std::map<std::string, std::vector<std::string>> by_participant;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    require(comma != std::string::npos, "malformed anchors row: " + line);
    by_participant[line.substr(0, comma)].push_back(line.substr(comma + 1));
  }
  std::vector<Participant> out;
  for (auto& [id, texts] : by_participant) out.push_back({id, std::move(texts)});
  return out;
}

// CSV with header statement_id,author_id.
std::map<std::string, std::string> load_author_map(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open authors file " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty authors file " + path);
  require(line == "statement_id,author_id", "authors file needs header statement_id,author_id");
  std::map<std::string, std::string> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    require(comma != std::string::npos, "malformed authors row: " + line);
    out[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return out;
}

// One numeric value per line; '#' lines skipped.
std::vector<double> load_values(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open values file " + path);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(std::stod(line));
  }
  require(!out.empty(), "no values in " + path);
  return out;
}

Matrix scorer_projection(const Scorer& s) {
  if (const auto* ip = std::get_if<IdealPointScorer>(&s.variant)) return ip->l;
  if (const auto* in = std::get_if<InnerProductScorer>(&s.variant)) return in->l;
  if (const auto* as = std::get_if<AsymmetricScorer>(&s.variant)) return as->l_anchor;
  throw Error("scorer has no projection matrix (variant " + s.tag() + ")");
}

TrainConfig make_train_config(Index rank, const std::string& variant, const std::string& loss,
                              double lr, int epochs, int batch, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.rank = rank;
  cfg.variant = variant;
  if (loss == "bt") {
    cfg.loss = LossKind::bradley_terry;
  } else if (loss == "infonce") {
    cfg.loss = LossKind::infonce;
  } else {
    throw Error("unknown loss '" + loss + "' (expected bt or infonce)");
  }
  cfg.learning_rate = lr;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.seed = seed;
  return cfg;
}

SyntheticConfig make_synthetic_config(int d, int k, std::size_t n, double gamma, double eta,
                                      const std::string& regime, double rho, double sigma,
                                      std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.ambient_dim = d;
  cfg.subspace_dim = k;
  cfg.triplet_count = n;
  cfg.signal_gap = gamma;
  cfg.nuisance_share = eta;
  cfg.regime = regime_from_string(regime);
  cfg.correlation = rho;
  cfg.noise = sigma;
  cfg.seed = seed;
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"preference-geometry toolkit: margin decomposition, low-rank "
               "preference scorers, planted-subspace verification, diagnostics"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs", jobs, "upper bound on parallel independent fits (default 1)");

  // ---- ingest ----
  auto* c_ingest = app.add_subcommand("ingest", "load and validate embeddings/votes, write manifests");
  std::string in_embeddings, in_votes, in_kind = "binary", in_out;
  bool in_expect_unit = true;
  c_ingest->add_option("--embeddings", in_embeddings, "embeddings jsonl")->required();
  c_ingest->add_option("--votes", in_votes, "votes csv (optional)");
  c_ingest->add_option("--kind", in_kind, "binary|likert (default binary)");
  c_ingest->add_option("--out", in_out, "report path")->required();
  c_ingest->add_flag("!--no-unit", in_expect_unit, "skip unit-norm renormalization");

  // ---- triplets ----
  auto* c_triplets = app.add_subcommand("triplets", "build triplets from votes and split participants");
  std::string tr_votes, tr_kind = "binary", tr_split = "0.6,0.2,0.2", tr_out;
  std::uint64_t tr_seed = 0;
  c_triplets->add_option("--votes", tr_votes, "votes csv")->required();
  c_triplets->add_option("--kind", tr_kind, "binary|likert (default binary)");
  c_triplets->add_option("--split", tr_split, "train,val,test fractions (default 0.6,0.2,0.2)");
  c_triplets->add_option("--seed", tr_seed, "split seed (default 0)");
  c_triplets->add_option("--out", tr_out, "output prefix (writes <out>.{train,val,test}.jsonl)")->required();

  // ---- eval ----
  auto* c_eval = app.add_subcommand("eval", "triplet accuracy for one or more scorers");
  std::string ev_embeddings, ev_triplets, ev_out, ev_anchors;
  std::vector<std::string> ev_scorers;
  bool ev_outcomes = false;
  c_eval->add_option("--embeddings", ev_embeddings, "embeddings jsonl")->required();
  c_eval->add_option("--triplets", ev_triplets, "triplets jsonl")->required();
  c_eval->add_option("--scorer", ev_scorers, "scorer file (repeatable; 'cosine' for the baseline)")->required();
  c_eval->add_option("--anchors", ev_anchors, "participant anchor map csv (pooled anchors)");
  c_eval->add_flag("--outcomes", ev_outcomes, "also write per-triplet 0/1 outcome files");
  c_eval->add_option("--out", ev_out, "report path")->required();

  // ---- fit ----
  auto* c_fit = app.add_subcommand("fit", "fit a low-rank scorer on triplets");
  std::string ft_embeddings, ft_train, ft_val, ft_out, ft_variant = "ideal_point", ft_loss = "bt";
  std::string ft_anchors;
  int ft_rank = 20, ft_epochs = 300, ft_batch = 256;
  double ft_lr = 1e-2;
  std::uint64_t ft_seed = 0;
  c_fit->add_option("--embeddings", ft_embeddings, "embeddings jsonl")->required();
  c_fit->add_option("--train", ft_train, "training triplets jsonl")->required();
  c_fit->add_option("--val", ft_val, "validation triplets jsonl")->required();
  c_fit->add_option("--anchors", ft_anchors, "participant anchor map csv");
  c_fit->add_option("--rank", ft_rank, "projection rank r (default 20)");
  c_fit->add_option("--variant", ft_variant, "ideal_point|inner_product|asymmetric|mlp (default ideal_point)");
  c_fit->add_option("--loss", ft_loss, "bt|infonce (default bt)");
  c_fit->add_option("--lr", ft_lr, "learning rate (default 0.01)");
  c_fit->add_option("--epochs", ft_epochs, "epochs (default 300)");
  c_fit->add_option("--batch", ft_batch, "batch size (default 256)");
  c_fit->add_option("--seed", ft_seed, "seed (default 0)");
  c_fit->add_option("--out", ft_out, "output prefix (writes <out>.scorer and <out>.report)")->required();

  // ---- sweep ----
  auto* c_sweep = app.add_subcommand("sweep", "rank or data-size sweep with mean/std over seeds");
  std::string sw_embeddings, sw_train, sw_val, sw_test, sw_out, sw_mode = "rank";
  std::string sw_ranks = "1,2,4,8,16,32", sw_sizes, sw_seeds = "0,1,2,3,4";
  std::string sw_variant = "ideal_point", sw_loss = "bt", sw_anchors;
  int sw_epochs = 300, sw_batch = 256, sw_rank = 20;
  double sw_lr = 1e-2;
  c_sweep->add_option("--embeddings", sw_embeddings, "embeddings jsonl")->required();
  c_sweep->add_option("--train", sw_train, "training triplets jsonl")->required();
  c_sweep->add_option("--val", sw_val, "validation triplets jsonl")->required();
  c_sweep->add_option("--test", sw_test, "test triplets jsonl")->required();
  c_sweep->add_option("--anchors", sw_anchors, "participant anchor map csv");
  c_sweep->add_option("--mode", sw_mode, "rank|data (default rank)");
  c_sweep->add_option("--ranks", sw_ranks, "rank grid (default 1,2,4,8,16,32)");
  c_sweep->add_option("--sizes", sw_sizes, "training-set sizes for data mode");
  c_sweep->add_option("--rank", sw_rank, "rank for data mode (default 20)");
  c_sweep->add_option("--seeds", sw_seeds, "seed list (default 0,1,2,3,4)");
  c_sweep->add_option("--variant", sw_variant, "scorer variant (default ideal_point)");
  c_sweep->add_option("--loss", sw_loss, "bt|infonce (default bt)");
  c_sweep->add_option("--lr", sw_lr, "learning rate (default 0.01)");
  c_sweep->add_option("--epochs", sw_epochs, "epochs (default 300)");
  c_sweep->add_option("--batch", sw_batch, "batch size (default 256)");
  c_sweep->add_option("--out", sw_out, "report path")->required();

  // ---- synthetic ----
  auto* c_syn = app.add_subcommand("synthetic", "planted-subspace generator and risk checks");
  c_syn->require_subcommand(1);
  c_syn->fallthrough();
  int sy_d = 64, sy_k = 8;
  std::size_t sy_n = 10000;
  double sy_gamma = 0.5, sy_eta = 0.5, sy_rho = 0.8, sy_sigma = 0.0;
  std::string sy_regime = "hard", sy_seeds = "0", sy_out, sy_lambdas = "0,0.25,0.5,0.75,1";
  c_syn->add_option("--d", sy_d, "ambient dim (default 64)");
  c_syn->add_option("--k", sy_k, "subspace dim (default 8)");
  c_syn->add_option("--n", sy_n, "triplet count (default 10000)");
  c_syn->add_option("--gamma", sy_gamma, "in-subspace gap (default 0.5)");
  c_syn->add_option("--eta", sy_eta, "nuisance squared-norm share (default 0.5)");
  c_syn->add_option("--rho", sy_rho, "nuisance coupling (default 0.8)");
  c_syn->add_option("--sigma", sy_sigma, "gap noise (default 0)");
  c_syn->add_option("--regime", sy_regime, "hard|natural|neutral (default hard)");
  c_syn->add_option("--seeds", sy_seeds, "seed list (default 0)");
  c_syn->add_option("--out", sy_out, "output path / prefix")->required();
  auto* c_syn_gen = c_syn->add_subcommand("generate", "write embeddings + triplets for one seed");
  auto* c_syn_risk = c_syn->add_subcommand("risk-curve", "empirical risk over a lambda grid");
  c_syn_risk->add_option("--lambdas", sy_lambdas, "lambda grid (default 0,0.25,0.5,0.75,1)");
  auto* c_syn_deriv = c_syn->add_subcommand("derivative-at-zero", "derivative identity check at lambda=0");
  auto* c_syn_hard = c_syn->add_subcommand("verify-hard-condition", "binned E[Delta_T | Delta_S] check");

  // ---- bands ----
  auto* c_bands = app.add_subcommand("bands", "approval rate by proximity band");
  std::string bd_embeddings, bd_votes, bd_scorer, bd_out, bd_anchors;
  int bd_nbands = 5;
  c_bands->add_option("--embeddings", bd_embeddings, "embeddings jsonl")->required();
  c_bands->add_option("--votes", bd_votes, "binary votes csv")->required();
  c_bands->add_option("--scorer", bd_scorer, "scorer file or 'cosine'")->required();
  c_bands->add_option("--anchors", bd_anchors, "participant anchor map csv");
  c_bands->add_option("--bands", bd_nbands, "number of quantile bands (default 5)");
  c_bands->add_option("--out", bd_out, "report path")->required();

  // ---- stats ----
  auto* c_stats = app.add_subcommand("stats", "paired significance tests");
  c_stats->require_subcommand(1);
  std::string st_a, st_b, st_out;
  std::uint64_t st_bcount = 0, st_ccount = 0;
  auto* c_st_wilcoxon = c_stats->add_subcommand("wilcoxon", "signed-rank test over paired value files");
  auto* c_st_t = c_stats->add_subcommand("paired-t", "paired t-test over paired value files");
  for (auto* sub : {c_st_wilcoxon, c_st_t}) {
    sub->add_option("--a", st_a, "values file A (one per line)")->required();
    sub->add_option("--b", st_b, "values file B (one per line)")->required();
    sub->add_option("--out", st_out, "report path")->required();
  }
  auto* c_st_mcnemar = c_stats->add_subcommand("mcnemar", "exact McNemar from outcome files or counts");
  c_st_mcnemar->add_option("--a", st_a, "0/1 outcome file A");
  c_st_mcnemar->add_option("--b", st_b, "0/1 outcome file B");
  c_st_mcnemar->add_option("--discordant-b", st_bcount, "count: A correct, B wrong");
  c_st_mcnemar->add_option("--discordant-c", st_ccount, "count: B correct, A wrong");
  c_st_mcnemar->add_option("--out", st_out, "report path")->required();

  // ---- cluster ----
  auto* c_cluster = app.add_subcommand("cluster", "k-means user clusters + coherence lift with permutation null");
  std::string cl_embeddings, cl_votes, cl_authors, cl_out, cl_klist = "3,5,8,10";
  int cl_kmeans_seeds = 5, cl_perms = 50;
  std::uint64_t cl_seed = 0;
  c_cluster->add_option("--embeddings", cl_embeddings, "user embeddings jsonl (one vector per participant)")->required();
  c_cluster->add_option("--votes", cl_votes, "binary votes csv")->required();
  c_cluster->add_option("--authors", cl_authors, "statement author map csv")->required();
  c_cluster->add_option("--k-list", cl_klist, "cluster counts (default 3,5,8,10)");
  c_cluster->add_option("--kmeans-seeds", cl_kmeans_seeds, "k-means restarts (default 5)");
  c_cluster->add_option("--perms", cl_perms, "label permutations for the null (default 50)");
  c_cluster->add_option("--seed", cl_seed, "seed (default 0)");
  c_cluster->add_option("--out", cl_out, "report path")->required();

  // ---- likert ----
  auto* c_likert = app.add_subcommand("likert", "pooled Spearman between scorer similarity and Likert ratings");
  std::string lk_embeddings, lk_votes, lk_scorer, lk_anchors, lk_out;
  bool lk_exclude_rated = true;
  c_likert->add_option("--embeddings", lk_embeddings, "embeddings jsonl")->required();
  c_likert->add_option("--votes", lk_votes, "likert votes csv")->required();
  c_likert->add_option("--scorer", lk_scorer, "scorer file or 'cosine'")->required();
  c_likert->add_option("--anchors", lk_anchors, "participant anchor map csv")->required();
  c_likert->add_flag("!--keep-rated", lk_exclude_rated,
                     "keep the rated statement in the anchor pool");
  c_likert->add_option("--out", lk_out, "report path")->required();

  // ---- angles ----
  auto* c_angles = app.add_subcommand("angles", "principal angles between two fitted projections");
  std::string an_a, an_b, an_out;
  c_angles->add_option("--a", an_a, "scorer file A")->required();
  c_angles->add_option("--b", an_b, "scorer file B")->required();
  c_angles->add_option("--out", an_out, "report path")->required();

  // ---- embed ----
  auto* c_embed = app.add_subcommand("embed", "fetch embeddings from a remote endpoint");
  std::string em_input, em_endpoint, em_model, em_keyenv, em_out;
  int em_batch = 64, em_retries = 3;
  c_embed->add_option("--input", em_input, "jsonl of {\"id\", \"text\"} rows")->required();
  c_embed->add_option("--endpoint", em_endpoint, "endpoint url")->required();
  c_embed->add_option("--model", em_model, "model name")->required();
  c_embed->add_option("--key-env", em_keyenv, "env var holding the API key (never logged)");
  c_embed->add_option("--batch", em_batch, "batch size (default 64)");
  c_embed->add_option("--retries", em_retries, "retries on 429/5xx (default 3)");
  c_embed->add_option("--out", em_out, "embeddings jsonl output")->required();

  // ---- verify ----
  auto* c_verify = app.add_subcommand("verify", "re-check input hashes recorded in a report");
  std::string vf_file;
  c_verify->add_option("--file", vf_file, "report file to verify")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  auto load_scorer_or_cosine = [](const std::string& path) {
    if (path == "cosine") {
      Scorer s;
      s.variant = CosineScorer{};
      return s;
    }
    return load_scorer(path);
  };

  if (*c_ingest) {
    std::ostringstream cfg;
    cfg << "command=ingest\nembeddings=" << in_embeddings << "\nvotes=" << in_votes
        << "\nkind=" << in_kind << "\nexpect_unit=" << (in_expect_unit ? 1 : 0) << "\n";
    need_file("--embeddings", in_embeddings);
    if (!in_votes.empty()) need_file("--votes", in_votes);
    Report rep("ingest", cfg.str());
    rep.add_input(in_embeddings);
    LoadReport lr;
    EmbeddingStore store = load_embeddings(in_embeddings, in_expect_unit, &lr);
    write_manifest(in_embeddings, store);
    rep.line("embeddings\tcount=" + std::to_string(store.size()) + "\tdim=" +
             std::to_string(store.dim()) + "\trenormalized=" + std::to_string(lr.renormalized));
    if (!in_votes.empty()) {
      rep.add_input(in_votes);
      VoteTable votes = load_votes(in_votes, parse_kind(in_kind));
      rep.line("votes\tcount=" + std::to_string(votes.records.size()) +
               "\tpasses_dropped=" + std::to_string(votes.passes_dropped));
    }
    rep.write(in_out);
    rep.print();
    return 0;
  }

  if (*c_triplets) {
    std::ostringstream cfg;
    cfg << "command=triplets\nvotes=" << tr_votes << "\nkind=" << tr_kind
        << "\nsplit=" << tr_split << "\nseed=" << tr_seed << "\n";
    need_file("--votes", tr_votes);
    Report rep("triplets", cfg.str());
    rep.add_input(tr_votes);
    VoteTable votes = load_votes(tr_votes, parse_kind(tr_kind));
    TripletSet all = build_triplets(votes);
    std::vector<double> fracs = parse_doubles(tr_split);
    require(fracs.size() == 3, "--split needs three comma-separated fractions");
    std::set<std::string> pids;
    for (const auto& t : all) pids.insert(t.anchor_id);
    Split split = split_participants({pids.begin(), pids.end()}, fracs[0], fracs[1], fracs[2],
                                     tr_seed);
    auto subset = [&](const std::vector<std::string>& ids) {
      std::set<std::string> keep(ids.begin(), ids.end());
      TripletSet out;
      for (const auto& t : all) {
        if (keep.count(t.anchor_id)) out.push_back(t);
      }
      return out;
    };
    TripletSet train = subset(split.train), val = subset(split.val), test = subset(split.test);
    save_triplets(train, tr_out + ".train.jsonl");
    save_triplets(val, tr_out + ".val.jsonl");
    save_triplets(test, tr_out + ".test.jsonl");
    rep.line("participants\ttrain=" + std::to_string(split.train.size()) + "\tval=" +
             std::to_string(split.val.size()) + "\ttest=" + std::to_string(split.test.size()));
    rep.line("triplets\ttrain=" + std::to_string(train.size()) + "\tval=" +
             std::to_string(val.size()) + "\ttest=" + std::to_string(test.size()));
    rep.write(tr_out + ".report");
    rep.print();
    return 0;
  }

  if (*c_eval) {
    std::ostringstream cfg;
    cfg << "command=eval\nembeddings=" << ev_embeddings << "\ntriplets=" << ev_triplets
        << "\nanchors=" << ev_anchors << "\nscorers=";
    for (const auto& s : ev_scorers) cfg << s << ";";
    cfg << "\n";
    need_file("--embeddings", ev_embeddings);
    need_file("--triplets", ev_triplets);
    for (const auto& s : ev_scorers) {
      if (s != "cosine") need_file("--scorer", s);
    }
    Report rep("eval", cfg.str());
    rep.add_input(ev_embeddings);
    rep.add_input(ev_triplets);
    EmbeddingStore store = load_embeddings(ev_embeddings, true);
    if (!ev_anchors.empty()) {
      rep.add_input(ev_anchors);
      materialize_anchors(load_anchor_map(ev_anchors), store);
    }
    TripletSet triplets = load_triplets(ev_triplets);
    rep.line("scorer\tmicro\tmacro");
    for (std::size_t i = 0; i < ev_scorers.size(); ++i) {
      Scorer s = load_scorer_or_cosine(ev_scorers[i]);
      if (!(ev_scorers[i] == "cosine")) rep.add_input(ev_scorers[i]);
      EvalReport er = triplet_accuracy(s, triplets, store);
      rep.line(er.scorer_id + "\t" + fmt(er.micro) + "\t" + fmt(er.macro));
      if (ev_outcomes) {
        std::ofstream oc(ev_out + "." + std::to_string(i) + ".outcomes", std::ios::binary);
        require(oc.good(), "cannot open outcomes file");
        for (int v : er.outcomes) oc << v << "\n";
      }
    }
    rep.write(ev_out);
    rep.print();
    return 0;
  }

  if (*c_fit) {
    TrainConfig cfg = make_train_config(ft_rank, ft_variant, ft_loss, ft_lr, ft_epochs,
                                        ft_batch, ft_seed);
    need_file("--embeddings", ft_embeddings);
    need_file("--train", ft_train);
    need_file("--val", ft_val);
    Report rep("fit", cfg.summary());
    rep.add_input(ft_embeddings);
    rep.add_input(ft_train);
    rep.add_input(ft_val);
    EmbeddingStore store = load_embeddings(ft_embeddings, true);
    if (!ft_anchors.empty()) {
      rep.add_input(ft_anchors);
      materialize_anchors(load_anchor_map(ft_anchors), store);
    }
    FitResult res = fit(load_triplets(ft_train), load_triplets(ft_val), store, cfg);
    save_scorer(res.scorer, ft_out + ".scorer");
    rep.line("selected_epoch\t" + std::to_string(res.selected_epoch));
    rep.line("val_accuracy\t" + fmt(res.val_accuracy[static_cast<std::size_t>(res.selected_epoch)]));
    rep.line("epoch\ttrain_loss\tval_accuracy");
    for (std::size_t e = 0; e < res.train_loss.size(); ++e) {
      rep.line(std::to_string(e) + "\t" + fmt(res.train_loss[e]) + "\t" +
               fmt(res.val_accuracy[e]));
    }
    rep.write(ft_out + ".report");
    std::cout << "selected_epoch\t" << res.selected_epoch << "\nval_accuracy\t"
              << fmt(res.val_accuracy[static_cast<std::size_t>(res.selected_epoch)]) << "\n";
    return 0;
  }

  if (*c_sweep) {
    TrainConfig cfg = make_train_config(sw_rank, sw_variant, sw_loss, sw_lr, sw_epochs,
                                        sw_batch, 0);
    std::ostringstream cfgtext;
    cfgtext << "command=sweep\nmode=" << sw_mode << "\nranks=" << sw_ranks
            << "\nsizes=" << sw_sizes << "\nseeds=" << sw_seeds << "\n" << cfg.summary();
    need_file("--embeddings", sw_embeddings);
    need_file("--train", sw_train);
    need_file("--val", sw_val);
    need_file("--test", sw_test);
    Report rep("sweep", cfgtext.str());
    rep.add_input(sw_embeddings);
    rep.add_input(sw_train);
    rep.add_input(sw_val);
    rep.add_input(sw_test);
    EmbeddingStore store = load_embeddings(sw_embeddings, true);
    if (!sw_anchors.empty()) {
      rep.add_input(sw_anchors);
      materialize_anchors(load_anchor_map(sw_anchors), store);
    }
    TripletSet train = load_triplets(sw_train);
    TripletSet val = load_triplets(sw_val);
    TripletSet test = load_triplets(sw_test);
    std::vector<std::uint64_t> seeds = parse_seeds(sw_seeds);
    std::vector<SweepRow> rows;
    if (sw_mode == "rank") {
      std::vector<Index> ranks;
      for (const auto& t : split_commas(sw_ranks)) ranks.push_back(std::stol(t));
      rows = sweep_rank(ranks, seeds, train, val, test, store, cfg);
    } else if (sw_mode == "data") {
      require(!sw_sizes.empty(), "--sizes required in data mode");
      std::vector<std::size_t> sizes;
      for (const auto& t : split_commas(sw_sizes)) sizes.push_back(std::stoull(t));
      rows = sweep_data(sizes, seeds, train, val, test, store, cfg);
    } else {
      throw Error("unknown sweep mode '" + sw_mode + "'");
    }
    rep.line("x\tmean\tstd\tper_seed");
    for (const auto& r : rows) {
      std::string per;
      for (double v : r.per_seed) per += (per.empty() ? "" : ",") + fmt(v);
      rep.line(fmt(r.x) + "\t" + fmt(r.mean_accuracy) + "\t" + fmt(r.std_accuracy) + "\t" + per);
    }
    rep.write(sw_out);
    rep.print();
    return 0;
  }

  if (*c_syn) {
    std::vector<std::uint64_t> seeds = parse_seeds(sy_seeds);
    auto config_for = [&](std::uint64_t seed) {
      return make_synthetic_config(sy_d, sy_k, sy_n, sy_gamma, sy_eta, sy_regime, sy_rho,
                                   sy_sigma, seed);
    };
    std::ostringstream cfgtext;
    cfgtext << "command=synthetic\nseeds=" << sy_seeds << "\n" << config_for(seeds[0]).summary();

    if (*c_syn_gen) {
      require(seeds.size() == 1, "generate takes a single seed");
      SyntheticData data = generate(config_for(seeds[0]));
      save_embeddings(data.store, sy_out + ".embeddings.jsonl");
      write_manifest(sy_out + ".embeddings.jsonl", data.store);
      save_triplets(data.triplets, sy_out + ".triplets.jsonl");
      Report rep("synthetic-generate", cfgtext.str());
      rep.line("triplets\t" + std::to_string(data.triplets.size()));
      rep.line("embeddings\t" + std::to_string(data.store.size()));
      rep.write(sy_out + ".report");
      rep.print();
      return 0;
    }

    Report rep(*c_syn_risk ? "synthetic-risk-curve"
                           : *c_syn_deriv ? "synthetic-derivative-at-zero"
                                          : "synthetic-verify-hard-condition",
               cfgtext.str());
    for (std::uint64_t seed : seeds) {
      SyntheticData data = generate(config_for(seed));
      const Matrix b = Matrix::Identity(sy_k, sy_k);
      if (*c_syn_risk) {
        RiskCurve curve = risk_curve(b, parse_doubles(sy_lambdas), data);
        rep.line("seed=" + std::to_string(seed));
        rep.line("lambda\trisk\tse\tpaired_increase\tpaired_increase_se");
        for (const auto& p : curve.points) {
          rep.line(fmt(p.lambda) + "\t" + fmt(p.risk) + "\t" + fmt(p.se) + "\t" +
                   fmt(p.paired_increase) + "\t" + fmt(p.paired_increase_se));
        }
        rep.line("verdict\t" + curve.verdict);
      } else if (*c_syn_deriv) {
        DerivativeReport dr = derivative_at_zero(b, data);
        rep.line("seed=" + std::to_string(seed));
        rep.line("estimate\t" + fmt(dr.estimate) + "\tse\t" + fmt(dr.se));
        rep.line("finite_difference\t" + fmt(dr.fd_estimate) + "\tse\t" + fmt(dr.fd_se));
        rep.line(std::string("agrees\t") + (dr.agrees ? "yes" : "no"));
      } else {
        HardConditionReport hr = verify_hard_condition(data);
        rep.line("seed=" + std::to_string(seed));
        rep.line("delta_s_lo\tdelta_s_hi\tcount\tmean_delta_t\tse");
        for (const auto& bin : hr.bins) {
          rep.line(fmt(bin.delta_s_lo) + "\t" + fmt(bin.delta_s_hi) + "\t" +
                   std::to_string(bin.count) + "\t" + fmt(bin.mean_delta_t) + "\t" +
                   fmt(bin.se_delta_t));
        }
        rep.line(std::string("verdict\t") + (hr.verdict ? "satisfied" : "violated"));
      }
    }
    rep.write(sy_out);
    rep.print();
    return 0;
  }

  if (*c_bands) {
    std::ostringstream cfg;
    cfg << "command=bands\nembeddings=" << bd_embeddings << "\nvotes=" << bd_votes
        << "\nscorer=" << bd_scorer << "\nanchors=" << bd_anchors << "\nbands=" << bd_nbands
        << "\n";
    need_file("--embeddings", bd_embeddings);
    need_file("--votes", bd_votes);
    if (bd_scorer != "cosine") need_file("--scorer", bd_scorer);
    Report rep("bands", cfg.str());
    rep.add_input(bd_embeddings);
    rep.add_input(bd_votes);
    EmbeddingStore store = load_embeddings(bd_embeddings, true);
    if (!bd_anchors.empty()) {
      rep.add_input(bd_anchors);
      materialize_anchors(load_anchor_map(bd_anchors), store);
    }
    VoteTable votes = load_votes(bd_votes, VoteKind::binary);
    Scorer s = load_scorer_or_cosine(bd_scorer);
    if (bd_scorer != "cosine") rep.add_input(bd_scorer);
    std::vector<ProximityBand> bands = proximity_bands(votes, s, store, bd_nbands);
    rep.line("sim_lo\tsim_hi\tcount\tapproval_rate");
    for (const auto& band : bands) {
      rep.line(fmt(band.sim_lo) + "\t" + fmt(band.sim_hi) + "\t" + std::to_string(band.count) +
               "\t" + fmt(band.approval_rate));
    }
    rep.write(bd_out);
    rep.print();
    return 0;
  }

  if (*c_stats) {
    std::ostringstream cfg;
    cfg << "command=stats\na=" << st_a << "\nb=" << st_b << "\ndiscordant_b=" << st_bcount
        << "\ndiscordant_c=" << st_ccount << "\n";
    if (*c_st_mcnemar) {
      Report rep("stats-mcnemar", cfg.str());
      std::uint64_t b = st_bcount, c = st_ccount;
      if (!st_a.empty() || !st_b.empty()) {
        require(!st_a.empty() && !st_b.empty(), "mcnemar needs both --a and --b outcome files");
        rep.add_input(st_a);
        rep.add_input(st_b);
        std::vector<double> oa = load_values(st_a), ob = load_values(st_b);
        require(oa.size() == ob.size(), "outcome files differ in length");
        b = c = 0;
        for (std::size_t i = 0; i < oa.size(); ++i) {
          if (oa[i] == 1.0 && ob[i] == 0.0) ++b;
          if (oa[i] == 0.0 && ob[i] == 1.0) ++c;
        }
      }
      require(b + c >= 1, "mcnemar: no discordant pairs");
      rep.line("b\t" + std::to_string(b));
      rep.line("c\t" + std::to_string(c));
      rep.line("log10_p\t" + fmt(mcnemar_exact_log10(b, c)));
      rep.line("p\t" + fmt(mcnemar_exact(b, c)));
      rep.write(st_out);
      rep.print();
      return 0;
    }
    Report rep(*c_st_wilcoxon ? "stats-wilcoxon" : "stats-paired-t", cfg.str());
    rep.add_input(st_a);
    rep.add_input(st_b);
    std::vector<double> va = load_values(st_a), vb = load_values(st_b);
    require(va.size() == vb.size(), "value files differ in length");
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < va.size(); ++i) pairs.emplace_back(va[i], vb[i]);
    TestResult res = *c_st_wilcoxon ? wilcoxon_signed_rank(pairs) : paired_t(pairs);
    rep.line("statistic\t" + fmt(res.statistic));
    rep.line("p\t" + fmt(res.p_value));
    rep.write(st_out);
    rep.print();
    return 0;
  }

  if (*c_cluster) {
    std::ostringstream cfg;
    cfg << "command=cluster\nembeddings=" << cl_embeddings << "\nvotes=" << cl_votes
        << "\nauthors=" << cl_authors << "\nk_list=" << cl_klist
        << "\nkmeans_seeds=" << cl_kmeans_seeds << "\nperms=" << cl_perms
        << "\nseed=" << cl_seed << "\nuser_weighting=eligible_vote_count\n";
    need_file("--embeddings", cl_embeddings);
    need_file("--votes", cl_votes);
    need_file("--authors", cl_authors);
    Report rep("cluster", cfg.str());
    rep.add_input(cl_embeddings);
    rep.add_input(cl_votes);
    rep.add_input(cl_authors);
    EmbeddingStore store = load_embeddings(cl_embeddings, true);
    VoteTable votes = load_votes(cl_votes, VoteKind::binary);
    std::map<std::string, std::string> authors = load_author_map(cl_authors);
    std::vector<std::string> ids = store.ids();
    std::vector<Vector> vectors;
    for (const auto& id : ids) vectors.push_back(store.get(id));
    rep.line("k\twithin\tacross\tlift\tshuffle_mean_abs_lift\tusers_excluded");
    for (const auto& ktext : split_commas(cl_klist)) {
      const int k = std::stoi(ktext);
      KmeansResult km = kmeans(vectors, k, cl_seed, cl_kmeans_seeds);
      std::map<std::string, int> labels;
      for (std::size_t i = 0; i < ids.size(); ++i) labels[ids[i]] = km.assignments[i];
      CoherenceResult ch = cluster_coherence(labels, votes, authors, cl_perms, cl_seed);
      rep.line(std::to_string(k) + "\t" + fmt(ch.within) + "\t" + fmt(ch.across) + "\t" +
               (ch.lift ? fmt(*ch.lift) : std::string("n/a")) + "\t" +
               fmt(ch.shuffle_mean_abs_lift) + "\t" + std::to_string(ch.users_excluded));
    }
    rep.write(cl_out);
    rep.print();
    return 0;
  }

  if (*c_likert) {
    std::ostringstream cfg;
    cfg << "command=likert\nembeddings=" << lk_embeddings << "\nvotes=" << lk_votes
        << "\nscorer=" << lk_scorer << "\nanchors=" << lk_anchors
        << "\nexclude_rated=" << (lk_exclude_rated ? 1 : 0) << "\n";
    need_file("--embeddings", lk_embeddings);
    need_file("--votes", lk_votes);
    need_file("--anchors", lk_anchors);
    if (lk_scorer != "cosine") need_file("--scorer", lk_scorer);
    Report rep("likert", cfg.str());
    rep.add_input(lk_embeddings);
    rep.add_input(lk_votes);
    rep.add_input(lk_anchors);
    EmbeddingStore store = load_embeddings(lk_embeddings, true);
    VoteTable votes = load_votes(lk_votes, VoteKind::likert);
    std::vector<Participant> participants = load_anchor_map(lk_anchors);
    Scorer s = load_scorer_or_cosine(lk_scorer);
    if (lk_scorer != "cosine") rep.add_input(lk_scorer);
    std::vector<LikertRow> rows;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> exclusions;
    for (const auto& r : votes.records) {
      rows.push_back({r.participant_id, r.statement_id, r.value});
      if (lk_exclude_rated) {
        exclusions[{r.participant_id, r.statement_id}] = {r.statement_id};
      }
    }
    const double rho = likert_correlation(participants, rows, s, store, exclusions);
    rep.line("n\t" + std::to_string(rows.size()));
    rep.line("spearman\t" + fmt(rho));
    rep.write(lk_out);
    rep.print();
    return 0;
  }

  if (*c_angles) {
    std::ostringstream cfg;
    cfg << "command=angles\na=" << an_a << "\nb=" << an_b << "\n";
    need_file("--a", an_a);
    need_file("--b", an_b);
    Report rep("angles", cfg.str());
    rep.add_input(an_a);
    rep.add_input(an_b);
    SubspaceReport sr = subspace_report(scorer_projection(load_scorer(an_a)),
                                        scorer_projection(load_scorer(an_b)));
    rep.line("max_cosine\t" + fmt(sr.max_cosine));
    rep.line("median_cosine\t" + fmt(sr.median_cosine));
    rep.line("min_cosine\t" + fmt(sr.min_cosine));
    std::string all;
    for (double c : sr.cosines) all += (all.empty() ? "" : ",") + fmt(c);
    rep.line("cosines\t" + all);
    rep.write(an_out);
    rep.print();
    return 0;
  }

  if (*c_embed) {
    std::ostringstream cfg;
    cfg << "command=embed\ninput=" << em_input << "\nendpoint=" << em_endpoint
        << "\nmodel=" << em_model << "\nkey_env=" << em_keyenv << "\nbatch=" << em_batch
        << "\nretries=" << em_retries << "\n";
    need_file("--input", em_input);
    Report rep("embed", cfg.str());
    rep.add_input(em_input);
    std::ifstream in(em_input);
    require(in.good(), "cannot open input file " + em_input);
    std::vector<std::pair<std::string, std::string>> id_texts;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      require(j.contains("id") && j.contains("text"), "input rows need id and text");
      id_texts.emplace_back(j["id"].get<std::string>(), j["text"].get<std::string>());
    }
    RemoteConfig rc;
    rc.endpoint_url = em_endpoint;
    rc.model = em_model;
    rc.api_key_env = em_keyenv;
    rc.batch_size = em_batch;
    rc.retries = em_retries;
    EmbeddingStore store = fetch_embeddings_remote(id_texts, rc);
    save_embeddings(store, em_out);
    write_manifest(em_out, store);
    rep.line("fetched\t" + std::to_string(store.size()));
    rep.line("dim\t" + std::to_string(store.dim()));
    rep.write(em_out + ".report");
    rep.print();
    return 0;
  }

  if (*c_verify) {
    std::ifstream in(vf_file);
    require(in.good(), "cannot open report " + vf_file);
    std::string line;
    bool saw_version = false;
    std::size_t checked = 0;
    while (std::getline(in, line)) {
      if (line.rfind("# " + std::string(kFormatVersion), 0) == 0) saw_version = true;
      const std::string prefix = "# input=";
      if (line.rfind(prefix, 0) != 0) continue;
      auto hash_pos = line.rfind(" hash=");
      require(hash_pos != std::string::npos, "malformed input line: " + line);
      const std::string path = line.substr(prefix.size(), hash_pos - prefix.size());
      const std::string recorded = line.substr(hash_pos + 6);
      const std::string actual = hash_file_hex(path);
      if (recorded != actual) {
        std::cerr << "hash mismatch for " << path << ": recorded " << recorded << ", actual "
                  << actual << "\n";
        return 1;
      }
      ++checked;
    }
    require(saw_version, "not a prefgeom report: " + vf_file);
    std::cout << "verified\t" << checked << " input(s)\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const prefgeom::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
