#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace transgauss {

enum class EntityType { Player, Club, Country, Number, Position, Generic };

/// A relation reference: a base relation index plus an inversion flag.
/// (base, inverted=true) is r^-1; inverting twice yields the base relation.
struct RelationId {
  int base = 0;
  bool inverted = false;

  RelationId() = default;
  RelationId(int b, bool inv = false) : base(b), inverted(inv) {}

  RelationId inverse() const { return {base, !inverted}; }

  friend bool operator==(const RelationId&, const RelationId&) = default;
  friend auto operator<=>(const RelationId&, const RelationId&) = default;
};

struct Triplet {
  int s = 0;
  int r = 0;  // base relation index; inverses never appear in stored triplets
  int o = 0;
};

struct RelationPath {
  std::vector<RelationId> steps;

  RelationPath() = default;
  RelationPath(std::initializer_list<RelationId> s) : steps(s) {}
  std::size_t length() const { return steps.size(); }
};

struct PathSample {
  int s = 0;
  RelationPath path;
  int o = 0;
};

/// Entity/relation registry, triplet store and adjacency index.
/// Immutable once built; all read paths are const and shareable.
class KnowledgeBase {
 public:
  int add_entity(const std::string& name, EntityType type = EntityType::Generic);
  int add_relation(const std::string& name);

  /// Inserts (s, r, o) and updates forward/backward indices. Duplicate
  /// triplets are stored once. Throws std::out_of_range naming the
  /// offending id when s, r or o is not registered.
  void add_triplet(int s, int r, int o);
  void add_triplet(const Triplet& t) { add_triplet(t.s, t.r, t.o); }

  int num_entities() const { return static_cast<int>(entity_names_.size()); }
  int num_relations() const { return static_cast<int>(relation_names_.size()); }
  std::size_t num_triplets() const { return triplets_.size(); }
  const std::vector<Triplet>& triplets() const { return triplets_; }

  const std::string& entity_name(int e) const { return entity_names_.at(e); }
  EntityType entity_type(int e) const { return entity_types_.at(e); }
  const std::string& relation_name(int r) const { return relation_names_.at(r); }
  /// Display name for a RelationId; inverted relations get a "^-1" suffix.
  std::string relation_display(RelationId r) const;

  int entity_id(const std::string& name) const;       // throws if unknown
  int relation_id(const std::string& name) const;     // throws if unknown
  bool has_entity(const std::string& name) const { return entity_ids_.count(name) > 0; }

  std::vector<int> entities_of_type(EntityType t) const;

  /// Object set of (s, r, .); with r.inverted this is the subject set of
  /// (., r.base, s). Sorted ascending.
  const std::vector<int>& objects(int s, RelationId r) const;

  /// Entities reachable from s by following the path steps in order,
  /// taking the union over intermediates at every hop. Sorted ascending.
  std::vector<int> traverse(int s, const RelationPath& p) const;

  /// All entities minus traverse(s, p): the filtered negative-candidate set.
  std::vector<int> incorrect_objects(int s, const RelationPath& p) const;

  /// Uniform random walks: uniform start entity, uniform applicable relation
  /// (base or inverse) per hop, uniform successor; length uniform on
  /// {1..max_len}. Dead ends are retried up to 10 times, then skipped.
  std::vector<PathSample> sample_paths(int count, int max_len, std::uint64_t seed) const;

  void save_tsv(const std::filesystem::path& file) const;
  static KnowledgeBase load_tsv(const std::filesystem::path& file);

 private:
  std::vector<std::string> entity_names_;
  std::vector<EntityType> entity_types_;
  std::map<std::string, int> entity_ids_;
  std::vector<std::string> relation_names_;
  std::map<std::string, int> relation_ids_;
  std::vector<Triplet> triplets_;
  // adjacency[rel][entity] -> sorted object (fwd) or subject (bwd) list
  std::vector<std::vector<std::vector<int>>> fwd_;
  std::vector<std::vector<std::vector<int>>> bwd_;
  static const std::vector<int> empty_;
};

}  // namespace transgauss
