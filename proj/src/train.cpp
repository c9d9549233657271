#include "prefgeom/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "prefgeom/hashing.hpp"

namespace prefgeom {

double bt_loss(double margin) {
  require(std::isfinite(margin), "bt_loss: non-finite margin");
  return std::log1p(std::exp(-std::abs(margin))) + std::max(-margin, 0.0);
}

double bt_grad_margin(double margin) {
  require(std::isfinite(margin), "bt_grad_margin: non-finite margin");
  // -sigmoid(-m), evaluated without overflow for large |m|
  if (margin >= 0.0) {
    const double e = std::exp(-margin);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(margin));
}

double infonce_loss(const Vector& anchor, const Vector& positive,
                    const std::vector<Vector>& negatives, double temperature) {
  require(!negatives.empty(), "infonce_loss: need at least one negative");
  require(temperature > 0.0, "infonce_loss: temperature must be positive");
  std::vector<double> logits;
  logits.reserve(negatives.size() + 1);
  logits.push_back(cosine(anchor, positive) / temperature);
  for (const Vector& n : negatives) logits.push_back(cosine(anchor, n) / temperature);
  const double m = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double l : logits) denom += std::exp(l - m);
  return -(logits[0] - m - std::log(denom));
}

std::string TrainConfig::summary() const {
  std::ostringstream ss;
  ss << "variant=" << variant << "\nrank=" << rank << "\nlearning_rate=" << learning_rate
     << "\nepochs=" << epochs << "\nbatch_size=" << batch_size << "\nseed=" << seed
     << "\nbeta1=" << beta1 << "\nbeta2=" << beta2 << "\nadam_eps=" << adam_eps
     << "\nweight_decay=" << weight_decay
     << "\nloss=" << (loss == LossKind::bradley_terry ? "bradley_terry" : "infonce")
     << "\ntemperature=" << temperature << "\ninit_scale=" << init_scale
     << "\nmlp_hidden=" << mlp_hidden << "\n";
  return ss.str();
}

Scorer Model::to_scorer() const {
  Scorer s;
  if (variant == "ideal_point") {
    s.variant = IdealPointScorer{params[0]};
  } else if (variant == "inner_product") {
    s.variant = InnerProductScorer{params[0]};
  } else if (variant == "asymmetric") {
    s.variant = AsymmetricScorer{params[0], params[1]};
  } else if (variant == "mlp") {
    s.variant = MlpScorer{params[0], Vector(params[1].col(0)), params[2]};
  } else {
    throw Error("Model::to_scorer: unknown variant " + variant);
  }
  return s;
}

Model init_model(const TrainConfig& config, Index dim, Rng& rng) {
  require(config.rank >= 1, "init_model: rank must be >= 1");
  auto gauss = [&](Index rows, Index cols, double fan_in) {
    return random_gaussian_matrix(rng, rows, cols, config.init_scale / std::sqrt(fan_in));
  };
  Model m;
  m.variant = config.variant;
  if (config.variant == "ideal_point" || config.variant == "inner_product") {
    m.params = {gauss(dim, config.rank, static_cast<double>(dim))};
  } else if (config.variant == "asymmetric") {
    m.params = {gauss(dim, config.rank, static_cast<double>(dim)),
                gauss(dim, config.rank, static_cast<double>(dim))};
  } else if (config.variant == "mlp") {
    m.params = {gauss(dim, config.mlp_hidden, static_cast<double>(dim)),
                Matrix::Zero(config.mlp_hidden, 1),
                gauss(config.mlp_hidden, config.rank, static_cast<double>(config.mlp_hidden))};
  } else {
    throw Error("init_model: unknown variant " + config.variant);
  }
  return m;
}

double score_and_grad(const Model& model, const Vector& a, const Vector& x,
                      std::vector<Matrix>* grads, double coeff) {
  if (model.variant == "ideal_point") {
    const Matrix& l = model.params[0];
    Vector diff = a - x;
    Vector proj = l.transpose() * diff;
    if (grads) (*grads)[0].noalias() += coeff * (-2.0) * diff * proj.transpose();
    return -proj.squaredNorm();
  }
  if (model.variant == "inner_product") {
    const Matrix& l = model.params[0];
    Vector la = l.transpose() * a;
    Vector lx = l.transpose() * x;
    if (grads) {
      (*grads)[0].noalias() += coeff * a * lx.transpose();
      (*grads)[0].noalias() += coeff * x * la.transpose();
    }
    return la.dot(lx);
  }
  if (model.variant == "asymmetric") {
    const Matrix& la = model.params[0];
    const Matrix& lx = model.params[1];
    Vector e = la.transpose() * a - lx.transpose() * x;
    if (grads) {
      (*grads)[0].noalias() += coeff * (-2.0) * a * e.transpose();
      (*grads)[1].noalias() += coeff * 2.0 * x * e.transpose();
    }
    return -e.squaredNorm();
  }
  if (model.variant == "mlp") {
    const Matrix& w1 = model.params[0];
    const Vector b1 = model.params[1].col(0);
    const Matrix& w2 = model.params[2];
    Vector ha = (w1.transpose() * a + b1).array().tanh();
    Vector hx = (w1.transpose() * x + b1).array().tanh();
    Vector e = w2.transpose() * (ha - hx);
    if (grads) {
      // d(score)/d(phi(a)) = -2e, d/d(phi(x)) = +2e
      Vector ga = coeff * (-2.0) * e;
      Vector gx = coeff * 2.0 * e;
      (*grads)[2].noalias() += ha * ga.transpose() + hx * gx.transpose();
      Vector qa = (w2 * ga).array() * (1.0 - ha.array().square());
      Vector qx = (w2 * gx).array() * (1.0 - hx.array().square());
      (*grads)[0].noalias() += a * qa.transpose() + x * qx.transpose();
      (*grads)[1].col(0).noalias() += qa + qx;
    }
    return -e.squaredNorm();
  }
  throw Error("score_and_grad: unknown variant " + model.variant);
}

double model_margin(const Model& model, const Vector& a, const Vector& p, const Vector& n) {
  return score_and_grad(model, a, p, nullptr, 0.0) - score_and_grad(model, a, n, nullptr, 0.0);
}

namespace {

struct ResolvedTriplet {
  const Vector* a;
  const Vector* p;
  const Vector* n;
};

std::vector<ResolvedTriplet> resolve(const TripletSet& triplets, const EmbeddingStore& store) {
  std::vector<ResolvedTriplet> out;
  out.reserve(triplets.size());
  for (const Triplet& t : triplets) {
    out.push_back({&store.get(t.anchor_id), &store.get(t.pos_id), &store.get(t.neg_id)});
  }
  return out;
}

double accuracy(const Model& model, const std::vector<ResolvedTriplet>& triplets) {
  if (triplets.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& t : triplets) {
    if (model_margin(model, *t.a, *t.p, *t.n) > 0.0) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(triplets.size());
}

struct Adam {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t t = 0;

  explicit Adam(const std::vector<Matrix>& params) {
    for (const Matrix& p : params) {
      m.push_back(Matrix::Zero(p.rows(), p.cols()));
      v.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }

  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
            const TrainConfig& cfg) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix g = grads[i];
      if (cfg.weight_decay > 0.0) g += cfg.weight_decay * params[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      Matrix mhat = m[i] / bc1;
      Matrix vhat = v[i] / bc2;
      params[i].array() -=
          cfg.learning_rate * mhat.array() / (vhat.array().sqrt() + cfg.adam_eps);
    }
  }
};

// Mean loss over one batch; grads accumulate d(mean loss)/d(params).
double batch_loss_and_grad(const Model& model, const std::vector<ResolvedTriplet>& triplets,
                           const std::vector<std::size_t>& batch, const TrainConfig& cfg,
                           std::vector<Matrix>* grads) {
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  if (cfg.loss == LossKind::bradley_terry) {
    for (std::size_t idx : batch) {
      const auto& t = triplets[idx];
      const double m = model_margin(model, *t.a, *t.p, *t.n);
      total += bt_loss(m);
      if (grads) {
        const double c = inv * bt_grad_margin(m);
        score_and_grad(model, *t.a, *t.p, grads, c);
        score_and_grad(model, *t.a, *t.n, grads, -c);
      }
    }
    return total * inv;
  }

  // InfoNCE with in-batch negatives: for each triplet, the candidates are its
  // own positive, its own negative, and the other batch members' positives.
  for (std::size_t bi = 0; bi < batch.size(); ++bi) {
    const auto& t = triplets[batch[bi]];
    std::vector<const Vector*> cands;
    cands.push_back(t.p);  // index 0 = positive
    cands.push_back(t.n);
    for (std::size_t bj = 0; bj < batch.size(); ++bj) {
      if (bj != bi) cands.push_back(triplets[batch[bj]].p);
    }
    std::vector<double> logits(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
      logits[i] = score_and_grad(model, *t.a, *cands[i], nullptr, 0.0) / cfg.temperature;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - mx);
    total += -(logits[0] - mx - std::log(denom));
    if (grads) {
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const double w = std::exp(logits[i] - mx) / denom - (i == 0 ? 1.0 : 0.0);
        score_and_grad(model, *t.a, *cands[i], grads, inv * w / cfg.temperature);
      }
    }
  }
  return total * inv;
}

}  // namespace

FitResult fit(const TripletSet& train_triplets, const TripletSet& val_triplets,
              const EmbeddingStore& store, const TrainConfig& config) {
  require(!train_triplets.empty(), "fit: empty training set");
  require(!val_triplets.empty(), "fit: empty validation set");
  auto train = resolve(train_triplets, store);
  auto val = resolve(val_triplets, store);

  Rng root(config.seed);
  Rng init_rng = root.split(0);
  Model model = init_model(config, store.dim(), init_rng);
  Adam adam(model.params);

  std::vector<Matrix> grads;
  for (const Matrix& p : model.params) grads.push_back(Matrix::Zero(p.rows(), p.cols()));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  FitResult result;
  result.seed = config.seed;
  result.config = config;

  double best_acc = -1.0;
  std::vector<Matrix> best_params = model.params;
  const std::size_t batch_size = static_cast<std::size_t>(std::max(1, config.batch_size));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng epoch_rng = root.split(static_cast<std::uint64_t>(epoch) + 1);
    epoch_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<std::size_t> batch(order.begin() + static_cast<long>(start),
                                     order.begin() + static_cast<long>(end));
      for (Matrix& g : grads) g.setZero();
      const double loss = batch_loss_and_grad(model, train, batch, config, &grads);
      require(std::isfinite(loss), "fit: non-finite loss at epoch " + std::to_string(epoch));
      adam.step(model.params, grads, config);
      epoch_loss += loss;
      ++n_batches;
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(n_batches));
    const double acc = accuracy(model, val);
    result.val_accuracy.push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      best_params = model.params;
      result.selected_epoch = epoch;
    }
  }

  Model best = model;
  best.params = std::move(best_params);
  result.scorer = best.to_scorer();
  result.scorer.seed = config.seed;
  result.scorer.config_hash = hex64(fnv1a64(config.summary()));
  return result;
}

double triplet_accuracy_simple(const Scorer& s, const TripletSet& triplets,
                               const EmbeddingStore& store) {
  require(!triplets.empty(), "triplet_accuracy_simple: empty triplet set");
  std::size_t correct = 0;
  for (const Triplet& t : triplets) {
    if (margin(s, store.get(t.anchor_id), store.get(t.pos_id), store.get(t.neg_id)) > 0.0) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(triplets.size());
}

namespace {

SweepRow aggregate(double x, std::vector<double> accs) {
  SweepRow row;
  row.x = x;
  row.per_seed = accs;
  const double n = static_cast<double>(accs.size());
  row.mean_accuracy = std::accumulate(accs.begin(), accs.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : accs) ss += (a - row.mean_accuracy) * (a - row.mean_accuracy);
  row.std_accuracy = accs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_rank(const std::vector<Index>& ranks,
                                 const std::vector<std::uint64_t>& seeds,
                                 const TripletSet& train_triplets, const TripletSet& val_triplets,
                                 const TripletSet& test_triplets, const EmbeddingStore& store,
                                 TrainConfig config) {
  std::vector<SweepRow> table;
  for (Index r : ranks) {
    std::vector<double> accs;
    for (std::uint64_t seed : seeds) {
      config.rank = r;
      config.seed = seed;
      FitResult res = fit(train_triplets, val_triplets, store, config);
      accs.push_back(triplet_accuracy_simple(res.scorer, test_triplets, store));
    }
    table.push_back(aggregate(static_cast<double>(r), std::move(accs)));
  }
  return table;
}

std::vector<SweepRow> sweep_data(const std::vector<std::size_t>& k_values,
                                 const std::vector<std::uint64_t>& seeds,
                                 const TripletSet& train_triplets, const TripletSet& val_triplets,
                                 const TripletSet& test_triplets, const EmbeddingStore& store,
                                 const TrainConfig& config) {
  std::vector<SweepRow> table;
  for (std::size_t k : k_values) {
    require(k >= 1 && k <= train_triplets.size(), "sweep_data: K outside [1, train size]");
    std::vector<double> accs;
    for (std::uint64_t seed : seeds) {
      // Seeded subsample without replacement, independent of the fit seed.
      std::vector<std::size_t> idx(train_triplets.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      Rng sub_rng = Rng(seed).split(0x5eed);
      sub_rng.shuffle(idx);
      TripletSet subset;
      subset.reserve(k);
      for (std::size_t i = 0; i < k; ++i) subset.push_back(train_triplets[idx[i]]);
      TrainConfig c = config;
      c.seed = seed;
      FitResult res = fit(subset, val_triplets, store, c);
      accs.push_back(triplet_accuracy_simple(res.scorer, test_triplets, store));
    }
    table.push_back(aggregate(static_cast<double>(k), std::move(accs)));
  }
  return table;
}

} // namespace prefgeom
