#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prefgeom/ingest.hpp"
#include "prefgeom/scorers.hpp"

namespace prefgeom {

// log(1 + exp(-m)), computed via the stable branch.
double bt_loss(double margin);
// d/dm bt_loss = -sigmoid(-m), always in (-1, 0).
double bt_grad_margin(double margin);

// -log softmax of cos(a, p)/tau against {p} + negatives, max-subtracted.
double infonce_loss(const Vector& anchor, const Vector& positive,
                    const std::vector<Vector>& negatives, double temperature);

enum class LossKind { bradley_terry, infonce };

struct TrainConfig {
  Index rank = 20;
  double learning_rate = 1e-2;
  int epochs = 300;
  int batch_size = 256;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  LossKind loss = LossKind::bradley_terry;
  double temperature = 0.05;         // infonce only
  std::string variant = "ideal_point";  // ideal_point | inner_product | asymmetric | mlp
  double init_scale = 1.0;
  Index mlp_hidden = 64;

  std::string summary() const;  // deterministic key=value text, hashed into outputs
};

// Trainable parameter blocks for one scorer variant.
struct Model {
  std::string variant;
  std::vector<Matrix> params;

  Scorer to_scorer() const;
};

Model init_model(const TrainConfig& config, Index dim, Rng& rng);

// score(a, x) under the model; accumulates coeff * d(score)/d(params) into
// grads when grads != nullptr (same shapes as params).
double score_and_grad(const Model& model, const Vector& a, const Vector& x,
                      std::vector<Matrix>* grads, double coeff);

double model_margin(const Model& model, const Vector& a, const Vector& p, const Vector& n);

struct FitResult {
  Scorer scorer;                   // parameters from the best validation epoch
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_accuracy;
  int selected_epoch = -1;         // argmax val accuracy, ties -> earliest
  std::uint64_t seed = 0;
  TrainConfig config;
};

FitResult fit(const TripletSet& train_triplets, const TripletSet& val_triplets,
              const EmbeddingStore& store, const TrainConfig& config);

struct SweepRow {
  double x = 0.0;  // rank or subsample size
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> per_seed;
};

std::vector<SweepRow> sweep_rank(const std::vector<Index>& ranks,
                                 const std::vector<std::uint64_t>& seeds,
                                 const TripletSet& train_triplets, const TripletSet& val_triplets,
                                 const TripletSet& test_triplets, const EmbeddingStore& store,
                                 TrainConfig config);

std::vector<SweepRow> sweep_data(const std::vector<std::size_t>& k_values,
                                 const std::vector<std::uint64_t>& seeds,
                                 const TripletSet& train_triplets, const TripletSet& val_triplets,
                                 const TripletSet& test_triplets, const EmbeddingStore& store,
                                 const TrainConfig& config);

// Fraction of triplets with strictly positive margin under the scorer.
double triplet_accuracy_simple(const Scorer& s, const TripletSet& triplets,
                               const EmbeddingStore& store);

} // namespace prefgeom
