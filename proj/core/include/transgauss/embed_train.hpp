#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "transgauss/adam.hpp"
#include "transgauss/autodiff.hpp"
#include "transgauss/gauss.hpp"
#include "transgauss/kb.hpp"
#include "transgauss/rng.hpp"

namespace transgauss {

enum class TrainMode { Single, Comp };
enum class ModelKind { TransE, TransGaussian };

struct EmbedTrainConfig {
  int dim = 30;
  double margin = 1.0;
  double lambda = 1e-3;
  int negatives = 10;
  AdamConfig adam{};
  int epochs = 200;
  int batch_size = 512;
  TrainMode mode = TrainMode::Comp;
  ModelKind model = ModelKind::TransGaussian;
  int path_count = 50000;   // COMP only
  int max_path_len = 2;     // COMP only
  std::uint64_t seed = 0;
  double eps = 1e-6;
  int eval_every = 10;      // validation cadence in epochs; <= 0 disables
};

struct TrainRecord {
  int epoch = 0;
  double hinge = 0.0;
  double reg = 0.0;
  double val_h1 = -1.0;  // -1 when not evaluated this epoch
};

/// One ranking example: subject, relation path (length 1 for plain triplets),
/// one observed object, and the full sorted answer set for filtering.
struct EmbedExample {
  int s = 0;
  RelationPath path;
  int o = 0;
  std::vector<int> answers;
};

double hinge(double margin, double pos_score, double neg_score);

/// k i.i.d. uniform draws (with replacement) from the filtered incorrect
/// object set of the example. Returns empty when no incorrect object exists.
std::vector<int> sample_negatives(const KnowledgeBase& kb, const EmbedExample& ex, int k,
                                  Rng& rng);

struct EmbedLossGraph {
  ad::Var loss;
  ad::Var hinge_mean;
  ad::Var reg;
  ad::Var entities;  // leaf over the entity table
  ad::Var deltas;    // leaf over the first trained_slots rows of the delta table
  ad::Var m_raws;    // same for m; invalid() in unit-variance (TransE) mode
};

/// Builds the batch objective on the tape:
///   mean_i mean_k [margin - score(pos_i) + score(neg_ik)]_+
///   + lambda * (|entities|^2 + |deltas|^2 + |m|^2)
/// binding the embedding tables as leaves so the caller can read table
/// gradients after backward().
EmbedLossGraph build_embedding_loss(ad::Tape& tape, const EmbeddingSet& emb, int trained_slots,
                                    const std::vector<const EmbedExample*>& batch,
                                    const std::vector<std::vector<int>>& negatives,
                                    const EmbedTrainConfig& cfg);

/// Triplets as single-step examples; COMP mode appends sampled paths.
std::vector<EmbedExample> make_training_examples(const KnowledgeBase& kb,
                                                 const EmbedTrainConfig& cfg);

struct EmbedTrainResult {
  EmbeddingSet emb;
  std::vector<TrainRecord> records;
};

/// Trains the embedding with Adam. The optional validate callback maps a
/// finalized embedding snapshot to a validation H@1 in [0,100]; when given,
/// the best-scoring snapshot is returned instead of the last epoch.
/// Bit-reproducible for a fixed config.
EmbedTrainResult train_embeddings(
    const KnowledgeBase& kb, const EmbedTrainConfig& cfg,
    const std::function<double(const EmbeddingSet&)>& validate = nullptr);

}  // namespace transgauss
