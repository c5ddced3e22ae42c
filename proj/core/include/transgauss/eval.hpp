#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transgauss/datagen.hpp"
#include "transgauss/gauss.hpp"
#include "transgauss/kb.hpp"
#include "transgauss/qa.hpp"

namespace transgauss {

struct RankResult {
  int question_id = 0;
  int answer = 0;
  int rank = 0;
  int family = 0;
};

/// Filtered rank of `target` among the scored entities: 1 + the number of
/// non-answer entities scoring at least as high. Ties count against the
/// target. answers must be sorted and contain target.
int filtered_rank(std::span<const double> scores, const std::vector<int>& answers, int target);

struct FamilyStats {
  std::size_t n = 0;
  double h1 = 0.0;         // percentage in [0, 100]
  double mean_rank = 0.0;
};

struct EvalReport {
  std::map<int, FamilyStats> families;
  std::optional<FamilyStats> overall_path;  // families 1-12
  std::optional<FamilyStats> overall_conj;  // families 13-15
};

/// H@1 and mean filtered rank per family plus the two overall rows, weighted
/// by true-answer count. Empty groups are reported as absent.
EvalReport aggregate(const std::vector<RankResult>& results);

double overall_h1(const std::vector<RankResult>& results);

/// Runs the QA model over the examples and ranks every true answer of every
/// distinct question. Examples sharing (question, entities, family) are
/// evaluated once.
std::vector<RankResult> eval_qa(const QAModelParams& params, const EmbeddingSet& emb,
                                const Vocabulary& vocab, const std::vector<QAExample>& examples);

/// Scores candidates directly from the embedding using the ground-truth
/// relations of each example's family, bypassing the language model. Shares
/// the Gaussian scoring path with QA evaluation.
std::vector<RankResult> eval_embedding_direct(const EmbeddingSet& emb, const KnowledgeBase& kb,
                                              const std::vector<QAExample>& examples);

std::string report_text(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& dir,
                  const std::string& basename);

// ---- triplet-classification knowledge-base-completion protocol

struct KbcTask {
  KnowledgeBase train_kb;  // same entity/relation ids as the source KB
  std::vector<std::pair<Triplet, bool>> valid;
  std::vector<std::pair<Triplet, bool>> test;
};

/// Holds out a fraction of triplets (half to valid, half to test), pairs each
/// positive with one type-compatible corrupted negative, and returns the
/// reduced training KB.
KbcTask make_kbc_task(const KnowledgeBase& kb, double holdout_fraction, std::uint64_t seed);

double triplet_score(const EmbeddingSet& emb, const Triplet& t);

struct KbcThresholds {
  std::map<int, double> per_relation;
  double fallback = 0.0;
};

/// Per-relation decision thresholds maximizing accuracy on the labeled
/// validation set; the fallback covers relations absent from it.
KbcThresholds tune_kbc_thresholds(const EmbeddingSet& emb,
                                  const std::vector<std::pair<Triplet, bool>>& valid);

/// Accuracy (%) of classifying (s,r,o) true iff score >= threshold(r).
double kbc_apply(const EmbeddingSet& emb, const std::vector<std::pair<Triplet, bool>>& labeled,
                 const KbcThresholds& thresholds);

/// Threshold tuning on valid + evaluation on test.
double kbc_accuracy(const EmbeddingSet& emb, const std::vector<std::pair<Triplet, bool>>& test,
                    const std::vector<std::pair<Triplet, bool>>& valid);

}  // namespace transgauss
