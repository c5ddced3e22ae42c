#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"
#include "transgauss/kb.hpp"
#include "transgauss/rng.hpp"

using namespace transgauss;

namespace {

// brute-force reachability over the raw triplet list, no adjacency index
std::vector<int> brute_traverse(const KnowledgeBase& kb, int s, const RelationPath& p) {
  std::set<int> frontier{s};
  for (const RelationId& step : p.steps) {
    std::set<int> next;
    for (const Triplet& t : kb.triplets()) {
      if (t.r != step.base) continue;
      if (!step.inverted && frontier.count(t.s)) next.insert(t.o);
      if (step.inverted && frontier.count(t.o)) next.insert(t.s);
    }
    frontier = std::move(next);
  }
  return {frontier.begin(), frontier.end()};
}

KnowledgeBase sample_kb() {
  KnowledgeBase kb;
  const int david = kb.add_entity("david_villa", EntityType::Player);
  const int spain = kb.add_entity("spain", EntityType::Country);
  const int messi = kb.add_entity("lionel_messi", EntityType::Player);
  const int barca = kb.add_entity("fc_barcelona", EntityType::Club);
  const int dzeko = kb.add_entity("edin_dzeko", EntityType::Player);
  const int city = kb.add_entity("manchester_city", EntityType::Club);
  const int england = kb.add_entity("england", EntityType::Country);
  const int country = kb.add_relation("plays_for_country");
  const int club = kb.add_relation("plays_in_club");
  const int in_country = kb.add_relation("is_in_country");
  kb.add_triplet(david, country, spain);
  kb.add_triplet(messi, club, barca);
  kb.add_triplet(dzeko, club, city);
  kb.add_triplet(city, in_country, england);
  return kb;
}

KnowledgeBase random_kb(int entities, int relations, int triplets, std::uint64_t seed) {
  KnowledgeBase kb;
  for (int e = 0; e < entities; ++e) kb.add_entity("e" + std::to_string(e));
  for (int r = 0; r < relations; ++r) kb.add_relation("r" + std::to_string(r));
  Rng rng(seed);
  for (int i = 0; i < triplets; ++i)
    kb.add_triplet(static_cast<int>(rng.index(entities)), static_cast<int>(rng.index(relations)),
                   static_cast<int>(rng.index(entities)));
  return kb;
}

}  // namespace

TEST_CASE("add_triplet and lookup") {
  KnowledgeBase kb = sample_kb();
  const int david = kb.entity_id("david_villa");
  const int country = kb.relation_id("plays_for_country");
  const auto& objs = kb.objects(david, RelationId{country, false});
  REQUIRE(objs.size() == 1);
  CHECK(kb.entity_name(objs[0]) == "spain");
}

TEST_CASE("duplicate insert is stored once") {
  KnowledgeBase kb = sample_kb();
  const auto before = kb.num_triplets();
  kb.add_triplet(kb.entity_id("david_villa"), kb.relation_id("plays_for_country"),
                 kb.entity_id("spain"));
  CHECK(kb.num_triplets() == before);
}

TEST_CASE("inverted lookup equals reversed base lookup") {
  KnowledgeBase kb = sample_kb();
  const int barca = kb.entity_id("fc_barcelona");
  const int club = kb.relation_id("plays_in_club");
  const auto& subjects = kb.objects(barca, RelationId{club, true});
  REQUIRE(subjects.size() == 1);
  CHECK(kb.entity_name(subjects[0]) == "lionel_messi");
}

TEST_CASE("unknown ids are rejected with the offending id") {
  KnowledgeBase kb = sample_kb();
  CHECK_THROWS_WITH_AS(kb.add_triplet(999, 0, 0), doctest::Contains("999"), std::out_of_range);
  CHECK_THROWS_AS(kb.add_triplet(0, 99, 0), std::out_of_range);
}

TEST_CASE("two-step traverse follows the composition") {
  KnowledgeBase kb = sample_kb();
  RelationPath p{{kb.relation_id("plays_in_club"), false},
                 {kb.relation_id("is_in_country"), false}};
  const auto reached = kb.traverse(kb.entity_id("edin_dzeko"), p);
  REQUIRE(reached.size() == 1);
  CHECK(kb.entity_name(reached[0]) == "england");
}

TEST_CASE("single-step traverse equals direct lookup") {
  KnowledgeBase kb = random_kb(20, 3, 60, 11);
  for (int e = 0; e < kb.num_entities(); ++e) {
    for (int r = 0; r < kb.num_relations(); ++r) {
      for (bool inv : {false, true}) {
        RelationId rel{r, inv};
        const auto via_path = kb.traverse(e, RelationPath{rel});
        const auto& direct = kb.objects(e, rel);
        CHECK(via_path == std::vector<int>(direct.begin(), direct.end()));
      }
    }
  }
}

TEST_CASE("traverse matches brute-force enumeration on a random 50-entity KB") {
  KnowledgeBase kb = random_kb(50, 4, 200, 23);
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    RelationPath p;
    const int len = 1 + static_cast<int>(rng.index(2));
    for (int i = 0; i < len; ++i)
      p.steps.emplace_back(static_cast<int>(rng.index(kb.num_relations())), rng.index(2) == 1);
    const int s = static_cast<int>(rng.index(kb.num_entities()));
    CHECK(kb.traverse(s, p) == brute_traverse(kb, s, p));
  }
}

TEST_CASE("two-step traverse equals the union over intermediates") {
  KnowledgeBase kb = random_kb(30, 3, 120, 31);
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    RelationId r1{static_cast<int>(rng.index(3)), rng.index(2) == 1};
    RelationId r2{static_cast<int>(rng.index(3)), rng.index(2) == 1};
    const int s = static_cast<int>(rng.index(30));
    std::set<int> unioned;
    for (int m : kb.traverse(s, RelationPath{r1}))
      for (int o : kb.traverse(m, RelationPath{r2})) unioned.insert(o);
    const auto two_step = kb.traverse(s, RelationPath{r1, r2});
    CHECK(two_step == std::vector<int>(unioned.begin(), unioned.end()));
  }
}

TEST_CASE("inverse symmetry holds for all stored triplets") {
  KnowledgeBase kb = random_kb(40, 3, 150, 41);
  for (const Triplet& t : kb.triplets()) {
    const auto& fwd = kb.objects(t.s, RelationId{t.r, false});
    const auto& bwd = kb.objects(t.o, RelationId{t.r, true});
    CHECK(std::binary_search(fwd.begin(), fwd.end(), t.o));
    CHECK(std::binary_search(bwd.begin(), bwd.end(), t.s));
  }
}

TEST_CASE("incorrect_objects is the exact complement of traverse") {
  KnowledgeBase kb = random_kb(25, 3, 80, 51);
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    RelationPath p{{static_cast<int>(rng.index(3)), rng.index(2) == 1}};
    const int s = static_cast<int>(rng.index(25));
    const auto correct = kb.traverse(s, p);
    const auto incorrect = kb.incorrect_objects(s, p);
    CHECK(correct.size() + incorrect.size() == static_cast<std::size_t>(kb.num_entities()));
    for (int e : incorrect) CHECK_FALSE(std::binary_search(correct.begin(), correct.end(), e));
  }
}

TEST_CASE("sample_paths is deterministic and valid by construction") {
  KnowledgeBase kb = random_kb(30, 3, 100, 61);
  const auto a = kb.sample_paths(500, 2, 77);
  const auto b = kb.sample_paths(500, 2, 77);
  REQUIRE(a.size() == b.size());
  bool saw_len1 = false, saw_len2 = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].s == b[i].s);
    CHECK(a[i].o == b[i].o);
    CHECK(a[i].path.steps == b[i].path.steps);
    const auto reachable = kb.traverse(a[i].s, a[i].path);
    CHECK(std::binary_search(reachable.begin(), reachable.end(), a[i].o));
    if (a[i].path.length() == 1) saw_len1 = true;
    if (a[i].path.length() == 2) saw_len2 = true;
  }
  CHECK(saw_len1);
  CHECK(saw_len2);
}

TEST_CASE("tsv round trip preserves the triplet set") {
  KnowledgeBase kb = sample_kb();
  const auto file = std::filesystem::temp_directory_path() / "tg_kb_roundtrip.tsv";
  kb.save_tsv(file);
  const KnowledgeBase loaded = KnowledgeBase::load_tsv(file);
  REQUIRE(loaded.num_triplets() == kb.num_triplets());
  for (const Triplet& t : kb.triplets()) {
    const int s = loaded.entity_id(kb.entity_name(t.s));
    const int r = loaded.relation_id(kb.relation_name(t.r));
    const auto& objs = loaded.objects(s, RelationId{r, false});
    CHECK(std::any_of(objs.begin(), objs.end(), [&](int o) {
      return loaded.entity_name(o) == kb.entity_name(t.o);
    }));
  }
  std::filesystem::remove(file);
}
