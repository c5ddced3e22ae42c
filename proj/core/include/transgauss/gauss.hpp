#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "transgauss/kb.hpp"

namespace transgauss {

/// Diagonal Gaussian: mean vector plus per-dimension variances.
struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> var;
};

/// Unconstrained per-relation parameters: translation delta and the raw
/// variance parameters m (one diagonal entry each).
struct RelationParams {
  std::vector<double> delta;
  std::vector<double> m_raw;
};

double elu(double x);

/// var[j] = elu(m_raw[j]) + 1 + eps; strictly greater than eps everywhere.
std::vector<double> variance_of(const RelationParams& rel, double eps);
void variance_of(std::span<const double> m_raw, double eps, std::span<double> out);

/// Full normalized log-density of a diagonal Gaussian:
///   -1/2 * sum_j [ ln(2*pi) + ln var[j] + (x[j]-mean[j])^2 / var[j] ]
/// The quadratic and log-determinant parts are accumulated separately so
/// that unit-variance scores are an exact affine map of the squared
/// translation distance.
double log_density(std::span<const double> x, const DiagGaussian& g);

/// Sum of log-densities over a non-empty context list (conjunction of
/// Gaussian attentions). Differences between candidates x are free of the
/// per-context normalizers.
double conjunction_score(std::span<const double> x, const std::vector<DiagGaussian>& contexts);

/// Entity vectors plus one (delta, m_raw) pair per relation in R and R^-1,
/// stored as flat row-major tables. Relation slots are laid out base-first:
/// slot(r) = r.base for forward relations, num_base_relations + r.base for
/// inverses.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(int num_entities, int num_base_relations, int dim, double eps);

  int dim() const { return dim_; }
  double eps() const { return eps_; }
  int num_entities() const { return num_entities_; }
  int num_base_relations() const { return num_base_; }
  int num_relation_slots() const { return 2 * num_base_; }

  int slot(RelationId r) const;

  std::span<double> entity_vec(int e);
  std::span<const double> entity_vec(int e) const;
  std::span<double> delta(int slot);
  std::span<const double> delta(int slot) const;
  std::span<double> m_raw(int slot);
  std::span<const double> m_raw(int slot) const;

  // whole-table views (entity-major / slot-major, row stride = dim)
  std::span<double> entity_table() { return entities_; }
  std::span<const double> entity_table() const { return entities_; }
  std::span<double> delta_table() { return deltas_; }
  std::span<const double> delta_table() const { return deltas_; }
  std::span<double> m_raw_table() { return m_raws_; }
  std::span<const double> m_raw_table() const { return m_raws_; }

  /// Per-dimension variances for a relation; exactly 1.0 everywhere when the
  /// set is in unit-variance (translation-only) mode.
  std::vector<double> variance(RelationId r) const;
  std::vector<double> variance_slot(int slot) const;

  bool unit_variance() const { return unit_variance_; }
  void set_unit_variance(bool v) { unit_variance_ = v; }

  /// Copies delta/m of every base relation into its inverse slot with the
  /// translation negated (used after training on base relations only).
  void materialize_inverses_from_base();

  void set_names(std::vector<std::string> entity_names, std::vector<std::string> relation_names);
  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

  void save(const std::filesystem::path& file, const std::string& model,
            const std::string& config_json = "{}") const;
  static EmbeddingSet load(const std::filesystem::path& file);

  /// Reorders entities and relations so indices match the given knowledge
  /// base. Throws when a KB entity or relation has no embedding.
  EmbeddingSet aligned_to(const KnowledgeBase& kb) const;

 private:
  int dim_ = 0;
  double eps_ = 1e-6;
  int num_entities_ = 0;
  int num_base_ = 0;
  bool unit_variance_ = false;
  std::vector<double> entities_;  // num_entities x dim
  std::vector<double> deltas_;    // 2*num_base x dim
  std::vector<double> m_raws_;    // 2*num_base x dim
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
};

/// Mean v_s + delta_r, variance of r: the attention that scores objects o
/// of (s, r, .) via log_density(v_o, context).
DiagGaussian triplet_context(const EmbeddingSet& emb, int s, RelationId r);

/// Convolution along the path: mean v_s + sum of deltas, variance the sum of
/// per-step variances.
DiagGaussian path_context(const EmbeddingSet& emb, int s, const RelationPath& p);

/// Soft path with non-negative relation weights alpha (indexed by slot):
/// mean v_e + sum_r alpha_r delta_r, variance sum_r alpha_r^2 var_r + eps.
/// The eps floor keeps the all-zero-alpha case a valid near-point mass.
DiagGaussian weighted_context(const EmbeddingSet& emb, int e, std::span<const double> alpha);

}  // namespace transgauss
