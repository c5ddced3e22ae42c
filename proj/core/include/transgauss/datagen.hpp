#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "transgauss/kb.hpp"
#include "transgauss/qa.hpp"
#include "transgauss/rng.hpp"

namespace transgauss {

/// Entity-type counts and structural knobs for the synthetic soccer KB.
struct Schema {
  int players = 736;
  int clubs = 297;
  int countries = 51;
  int numbers = 39;
  int positions = 4;
  /// Probability that a player's club is located in the player's country.
  double domestic_club_fraction = 0.5;
  /// Full-size structure: 23-player national squads with fixed position
  /// quotas and position-blocked jersey numbers 1..23.
  bool squad_structure = true;
};

Schema worldcup2014_schema();
Schema toy_schema();  // 20 players / 4 clubs / 3 countries / 10 numbers / 2 positions

struct GenConfig {
  Schema schema;
  std::uint64_t seed = 0;
  std::array<double, 3> path_split{5620.0 / 8003.0, 804.0 / 8003.0, 1579.0 / 8003.0};
  std::array<double, 3> conj_split{1564.0 / 2208.0, 224.0 / 2208.0, 420.0 / 2208.0};
};

/// One question family: either a relation path from a single subject or a
/// conjunction of two (subject, relation) legs, plus its surface templates.
struct FamilySpec {
  int id = 0;
  bool conj = false;
  struct Leg {
    EntityType subject_type;
    std::string relation;
    bool inverted = false;
  };
  // path families use legs[0].subject_type and `path`; conjunctive families
  // use both legs with single-relation paths
  std::vector<Leg> legs;
  std::vector<std::pair<std::string, bool>> path;  // (relation name, inverted)
  std::vector<std::string> templates;
};

/// The 15 question families (1-12 path, 13-15 conjunctive).
const std::vector<FamilySpec>& question_families();

/// Ground-truth relation path of a path family, resolved against a KB.
RelationPath family_path(const FamilySpec& fam, const KnowledgeBase& kb);

const std::vector<std::string>& country_names();       // 51 entries
const std::vector<std::string>& country_adjectives();  // parallel to country_names()

KnowledgeBase generate_kb(const GenConfig& cfg);

std::vector<QAExample> generate_path_questions(const KnowledgeBase& kb, Rng& rng);
std::vector<QAExample> generate_conj_questions(const KnowledgeBase& kb, Rng& rng);

/// Seeded family-stratified split. Questions sharing (family, entity tuple)
/// stay in one split; families with at least three groups are guaranteed
/// presence in every split. Split sizes track fractions * N to within a few
/// examples.
std::array<std::vector<int>, 3> split_dataset(const std::vector<QAExample>& examples,
                                              const std::array<double, 3>& fractions, Rng& rng);

struct GeneratedDataset {
  KnowledgeBase kb;
  std::vector<QAExample> path_examples;
  std::vector<QAExample> conj_examples;
  std::array<std::vector<int>, 3> path_split;
  std::array<std::vector<int>, 3> conj_split;
};

GeneratedDataset generate_dataset(const GenConfig& cfg);

/// Writes kb.tsv, questions_path.jsonl, questions_conj.jsonl, splits.json and
/// gen_manifest.json. Byte-stable under a fixed seed.
void write_dataset(const GeneratedDataset& data, const GenConfig& cfg,
                   const std::filesystem::path& dir);

struct LoadedDataset {
  KnowledgeBase kb;
  std::vector<QAExample> path_examples;
  std::vector<QAExample> conj_examples;
  std::array<std::vector<int>, 3> path_split;
  std::array<std::vector<int>, 3> conj_split;

  std::vector<QAExample> split_examples(int split) const;  // path + conj merged
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace transgauss
