#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "transgauss/adam.hpp"
#include "transgauss/autodiff.hpp"
#include "transgauss/embed_train.hpp"
#include "transgauss/gauss.hpp"
#include "transgauss/kb.hpp"
#include "transgauss/rng.hpp"

namespace transgauss {

/// Lowercases, splits on whitespace and separates "?" "," "!" "." tokens.
/// Throws on an empty/blank question. Idempotent on its own joined output.
std::vector<std::string> tokenize(const std::string& question);

/// Token <-> index map with a reserved UNK slot at index 0. Non-special
/// tokens are assigned ids in lexicographic order, so construction is
/// deterministic for a given token multiset.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;

  Vocabulary() { tokens_.push_back("<unk>"); }
  explicit Vocabulary(const std::vector<std::string>& corpus_tokens);

  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocabulary from_token_list(std::vector<std::string> tokens_in_id_order);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

struct QAExample {
  std::string question;
  std::vector<std::string> tokens;
  std::vector<int> entities;  // the oracle entity list E(q)
  std::vector<int> answers;   // sorted answer set A(q)
  int family = 0;
};

/// JSON-lines dataset IO: {"question":..., "entities":[...], "answers":[...],
/// "family": n} per line. Names are resolved against the knowledge base;
/// unknown names are rejected.
std::vector<QAExample> load_examples_jsonl(const std::filesystem::path& file,
                                           const KnowledgeBase& kb);

struct QAConfig {
  int word_dim = 40;
  int hidden = 80;
  int mlp_hidden = 64;
  double margin = 1.0;
  double nu = 1e-3;      // l1 weight on the relation weights alpha
  double lambda = 1e-4;  // l2 weight on Theta
  bool reg_word_emb = true;
  int negatives = 10;
  AdamConfig adam{};
  int epochs = 100;
  int batch_size = 64;
  std::uint64_t seed = 0;
  int eval_every = 5;  // validation cadence in epochs; <= 0 disables
};

/// All question-answering parameters Theta. The segment order below is the
/// canonical flattening used by the optimizer and the checkpoint format.
struct QAModelParams {
  int vocab = 0, word_dim = 0, hidden = 0, mlp_hidden = 0, dim = 0, rel_slots = 0;

  std::vector<double> word_emb;                        // vocab x word_dim
  std::vector<double> Wi, Ui, bi;                      // input gate
  std::vector<double> Wf, Uf, bf;                      // forget gate
  std::vector<double> Wo, Uo, bo;                      // output gate
  std::vector<double> Wg, Ug, bg;                      // cell candidate
  std::vector<double> Wfv, Wfh, b1, uf, b2;            // attention MLP
  std::vector<double> wrel;                            // rel_slots x hidden

  static QAModelParams init(int vocab, int word_dim, int hidden, int mlp_hidden, int dim,
                            int rel_slots, Rng& rng);

  std::vector<std::pair<const char*, std::span<double>>> segments();
  std::vector<std::pair<const char*, std::span<const double>>> segments() const;
  std::size_t num_params() const;
  /// Order-sensitive content hash; used to verify the frozen-embedding and
  /// determinism contracts.
  std::uint64_t checksum() const;

  void save(const std::filesystem::path& file, const Vocabulary& vocab_obj,
            const std::string& config_json = "{}") const;
  static std::pair<QAModelParams, Vocabulary> load(const std::filesystem::path& file);
};

struct AttentionTrace {
  std::vector<std::vector<double>> token_attention;   // per entity: p_{t,e} over T
  std::vector<std::vector<double>> relation_weights;  // per entity: alpha over slots
  std::vector<DiagGaussian> contexts;                 // per entity
};

// ---- reference forward ops (plain arithmetic; the tape-built training graph
// ---- is cross-checked against these in the tests)

/// Unidirectional single-layer LSTM over word embeddings; returns the T
/// hidden states.
std::vector<std::vector<double>> encode(const QAModelParams& p, std::span<const int> token_ids);

/// p_{t,e} = softmax_t(u_f' relu(Wfv v_e + Wfh h_t + b1) + b2).
std::vector<double> entity_attention(const QAModelParams& p, std::span<const double> v_e,
                                     const std::vector<std::vector<double>>& h_seq);

/// o_e = sum_t p[t] h_t.
std::vector<double> context_vector(std::span<const double> p_e,
                                   const std::vector<std::vector<double>>& h_seq);

/// alpha_r = relu(w_r' o_e) for every relation slot; non-negative and
/// deliberately unnormalized.
std::vector<double> relation_weights(const QAModelParams& p, std::span<const double> o_e);

/// Full trace for one question: attention, relation weights and the
/// per-entity Gaussian contexts (via weighted_context).
AttentionTrace compute_trace(const QAModelParams& p, const EmbeddingSet& emb,
                             const Vocabulary& vocab, const QAExample& ex);

/// Conjunction score of one candidate under the example's contexts.
double question_score(const QAModelParams& p, const EmbeddingSet& emb, const Vocabulary& vocab,
                      const QAExample& ex, int candidate);

/// Scores every entity, sorted descending with ties broken by entity index.
std::vector<std::pair<int, double>> answer(const QAModelParams& p, const EmbeddingSet& emb,
                                           const Vocabulary& vocab, const QAExample& ex,
                                           AttentionTrace* trace = nullptr);

// ---- training graph

struct QALossGraph {
  ad::Var loss;
  ad::Var hinge_mean;  // mean over examples of (hinge + nu * l1) actually split:
  ad::Var penalty;     // mean over examples of nu * l1(alpha)
  ad::Var reg;         // |Theta|^2 (subject to reg_word_emb)
  std::vector<ad::Var> leaves;  // parameter leaves in segment order
};

/// Batch objective: mean_i [ mean_k hinge_ik + nu * l1(alpha_i) ] +
/// lambda * |Theta|^2. Gradients flow into Theta only; embedding tables
/// enter as constants.
QALossGraph build_qa_loss(ad::Tape& tape, const QAModelParams& params, const EmbeddingSet& emb,
                          const std::vector<const QAExample*>& batch,
                          const std::vector<std::vector<int>>& token_ids,
                          const std::vector<int>& chosen_answers,
                          const std::vector<std::vector<int>>& negatives, const QAConfig& cfg);

struct QATrainResult {
  QAModelParams params;
  std::vector<TrainRecord> records;
};

/// Minimizes the QA objective with Adam over a shuffled stream of examples
/// (path and conjunctive mixed). The embedding is frozen throughout. The
/// optional validate callback returns a validation H@1 used for best-epoch
/// checkpoint selection. Bit-reproducible for a fixed config.
QATrainResult train_qa(const std::vector<QAExample>& train, const EmbeddingSet& emb,
                       const Vocabulary& vocab, const QAConfig& cfg,
                       const std::function<double(const QAModelParams&)>& validate = nullptr);

}  // namespace transgauss
