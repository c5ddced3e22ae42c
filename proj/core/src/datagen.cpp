#include "transgauss/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace transgauss {

namespace {

const char* kClubRel = "plays_in_club";
const char* kPositionRel = "plays_position";
const char* kAgedRel = "is_aged";
const char* kNumberRel = "wears_number";
const char* kCountryRel = "plays_for_country";
const char* kClubCountryRel = "is_in_country";

const std::vector<std::string> kPositions = {"forward", "midfielder", "defender", "goalkeeper"};

}  // namespace

const std::vector<std::string>& country_names() {
  static const std::vector<std::string> names = {
      "spain",      "germany",  "brazil",   "argentina", "france",         "italy",
      "england",    "portugal", "netherlands", "belgium", "croatia",       "mexico",
      "chile",      "colombia", "uruguay",  "switzerland", "usa",          "ghana",
      "nigeria",    "cameroon", "ivory_coast", "algeria", "iran",          "japan",
      "south_korea", "australia", "russia",  "greece",    "bosnia",        "ecuador",
      "honduras",   "costa_rica", "turkey",  "ukraine",   "sweden",        "denmark",
      "norway",     "poland",   "austria",  "scotland",   "wales",         "ireland",
      "serbia",     "romania",  "czech_republic", "slovakia", "hungary",   "morocco",
      "egypt",      "senegal",  "tunisia"};
  return names;
}

const std::vector<std::string>& country_adjectives() {
  static const std::vector<std::string> adjectives = {
      "spanish",    "german",   "brazilian", "argentine", "french",        "italian",
      "english",    "portuguese", "dutch",   "belgian",   "croatian",      "mexican",
      "chilean",    "colombian", "uruguayan", "swiss",    "american",      "ghanaian",
      "nigerian",   "cameroonian", "ivorian", "algerian", "iranian",       "japanese",
      "korean",     "australian", "russian", "greek",     "bosnian",       "ecuadorian",
      "honduran",   "costa_rican", "turkish", "ukrainian", "swedish",      "danish",
      "norwegian",  "polish",   "austrian", "scottish",   "welsh",         "irish",
      "serbian",    "romanian", "czech",    "slovak",     "hungarian",     "moroccan",
      "egyptian",   "senegalese", "tunisian"};
  return adjectives;
}

Schema worldcup2014_schema() { return Schema{}; }

Schema toy_schema() {
  Schema s;
  s.players = 20;
  s.clubs = 4;
  s.countries = 3;
  s.numbers = 10;
  s.positions = 2;
  s.squad_structure = false;
  return s;
}

const std::vector<FamilySpec>& question_families() {
  using ET = EntityType;
  static const std::vector<FamilySpec> families = [] {
    std::vector<FamilySpec> f;
    auto path_family = [&](int id, ET subject, std::vector<std::pair<std::string, bool>> path,
                           std::vector<std::string> templates) {
      FamilySpec spec;
      spec.id = id;
      spec.conj = false;
      spec.legs = {{subject, path[0].first, path[0].second}};
      spec.path = std::move(path);
      spec.templates = std::move(templates);
      f.push_back(std::move(spec));
    };
    auto conj_family = [&](int id, FamilySpec::Leg a, FamilySpec::Leg b,
                           std::vector<std::string> templates) {
      FamilySpec spec;
      spec.id = id;
      spec.conj = true;
      spec.legs = {a, b};
      spec.templates = std::move(templates);
      f.push_back(std::move(spec));
    };

    path_family(1, ET::Player, {{kClubRel, false}},
                {"which club does {player} play for ?",
                 "which professional football team does {player} play for ?",
                 "which football club does {player} play for ?"});
    path_family(2, ET::Player, {{kPositionRel, false}},
                {"what position does {player} play ?"});
    path_family(3, ET::Player, {{kAgedRel, false}},
                {"how old is {player} ?", "what is the age of {player} ?"});
    path_family(4, ET::Player, {{kNumberRel, false}},
                {"what is the jersey number of {player} ?",
                 "what number does {player} wear ?"});
    path_family(5, ET::Player, {{kCountryRel, false}},
                {"what is the nationality of {player} ?",
                 "which national team does {player} play for ?",
                 "which country is {player} from ?"});
    path_family(6, ET::Club, {{kClubCountryRel, false}},
                {"which country is the soccer team {club} based in ?"});
    path_family(7, ET::Club, {{kClubRel, true}},
                {"name a player from {club} ?", "who plays at the soccer club {club} ?",
                 "who is from the professional football team {club} ?",
                 "who plays professionally at {club} ?"});
    path_family(8, ET::Country, {{kCountryRel, true}},
                {"which player is from {country_1} ?", "name a player from {country_1} ?",
                 "who is from {country_1} ?",
                 "who plays for the {country_1} national football team ?"});
    path_family(9, ET::Position, {{kPositionRel, true}},
                {"name a player who plays {position} ?", "who plays {position} ?"});
    path_family(10, ET::Country, {{kClubCountryRel, true}},
                {"which soccer club is based in {country_1} ?",
                 "name a soccer club in {country_1} ?"});
    path_family(11, ET::Player, {{kClubRel, false}, {kClubCountryRel, false}},
                {"which country does {player} play professionally in ?",
                 "where is the football club that {player} plays for ?"});
    path_family(12, ET::Country, {{kCountryRel, true}, {kClubRel, false}},
                {"which professional football team do players from {country_1} play for ?",
                 "name a soccer club that has a player from {country_1} ?",
                 "which professional football team has a player from {country_1} ?"});

    conj_family(13, {ET::Position, kPositionRel, true}, {ET::Club, kClubRel, true},
                {"who plays {position} for {club} ?", "who are the {position_pl} at {club} ?",
                 "name a {position} that plays for {club} ?"});
    conj_family(14, {ET::Position, kPositionRel, true}, {ET::Country, kCountryRel, true},
                {"who plays {position} for {country_1} ?",
                 "who are the {position_pl} on {country_2} national team ?",
                 "name a {position} from {country_1} ?",
                 "which {country_2} footballer plays {position} ?",
                 "name a {country_2} {position} ?"});
    conj_family(15, {ET::Club, kClubRel, true}, {ET::Country, kCountryRel, true},
                {"who are the {country_2} players at {club} ?",
                 "which {country_2} footballer plays for {club} ?",
                 "name a {country_2} player at {club} ?",
                 "which player in {club} is from {country_1} ?"});
    return f;
  }();
  return families;
}

RelationPath family_path(const FamilySpec& fam, const KnowledgeBase& kb) {
  if (fam.conj) throw std::invalid_argument("family_path: conjunctive family");
  RelationPath p;
  for (const auto& [rel, inv] : fam.path) p.steps.emplace_back(kb.relation_id(rel), inv);
  return p;
}

namespace {

std::string pad4(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", n);
  return buf;
}

std::string surface(const std::string& entity_name) {
  std::string s = entity_name;
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

// worldcup squads: 23 players, 3 goalkeepers / 8 defenders / 8 midfielders /
// 4 forwards, with jersey numbers blocked by position like real squads
struct SquadPlan {
  int position_of_local[23];
  std::vector<std::vector<int>> jerseys_by_position;  // indexed by position entity offset
};

SquadPlan squad_plan() {
  SquadPlan plan{};
  // position offsets into kPositions: forward 0, midfielder 1, defender 2, goalkeeper 3
  for (int i = 0; i < 23; ++i) {
    if (i < 3) plan.position_of_local[i] = 3;        // goalkeepers
    else if (i < 11) plan.position_of_local[i] = 2;  // defenders
    else if (i < 19) plan.position_of_local[i] = 1;  // midfielders
    else plan.position_of_local[i] = 0;              // forwards
  }
  plan.jerseys_by_position.resize(4);
  plan.jerseys_by_position[3] = {1, 12, 23};
  plan.jerseys_by_position[2] = {2, 3, 4, 5, 13, 14, 15, 16};
  plan.jerseys_by_position[1] = {6, 7, 8, 17, 18, 19, 20, 21};
  plan.jerseys_by_position[0] = {9, 10, 11, 22};
  return plan;
}

}  // namespace

KnowledgeBase generate_kb(const GenConfig& cfg) {
  const Schema& sc = cfg.schema;
  if (sc.players < 1 || sc.clubs < 1 || sc.countries < 1 || sc.numbers < 1 || sc.positions < 1)
    throw std::invalid_argument("generate_kb: all entity counts must be positive");
  if (sc.positions > static_cast<int>(kPositions.size()))
    throw std::invalid_argument("generate_kb: at most 4 positions are supported");
  if (sc.squad_structure && (sc.players % 23 != 0 || sc.positions != 4 || sc.numbers < 23))
    throw std::invalid_argument(
        "generate_kb: squad structure needs players divisible by 23, 4 positions and >= 23 "
        "numbers");

  Rng rng(cfg.seed);
  KnowledgeBase kb;

  std::vector<int> players, clubs, countries, numbers, positions;
  for (int i = 0; i < sc.players; ++i)
    players.push_back(kb.add_entity("player_" + pad4(i + 1), EntityType::Player));
  for (int i = 0; i < sc.clubs; ++i)
    clubs.push_back(kb.add_entity("club_" + pad4(i + 1), EntityType::Club));
  for (int i = 0; i < sc.countries; ++i) {
    const std::string name = i < static_cast<int>(country_names().size())
                                 ? country_names()[i]
                                 : "country_" + pad4(i + 1);
    countries.push_back(kb.add_entity(name, EntityType::Country));
  }
  for (int i = 0; i < sc.numbers; ++i)
    numbers.push_back(kb.add_entity(std::to_string(i + 1), EntityType::Number));
  for (int i = 0; i < sc.positions; ++i)
    positions.push_back(kb.add_entity(kPositions[i], EntityType::Position));

  const int rel_club = kb.add_relation(kClubRel);
  const int rel_position = kb.add_relation(kPositionRel);
  const int rel_aged = kb.add_relation(kAgedRel);
  const int rel_number = kb.add_relation(kNumberRel);
  const int rel_country = kb.add_relation(kCountryRel);
  const int rel_club_country = kb.add_relation(kClubCountryRel);

  // each country hosts at least one club; remaining clubs land uniformly
  std::vector<int> club_country(sc.clubs);
  std::vector<std::vector<int>> clubs_in_country(sc.countries);
  for (int c = 0; c < sc.clubs; ++c) {
    const int land = c < sc.countries ? c : static_cast<int>(rng.index(sc.countries));
    club_country[c] = land;
    clubs_in_country[land].push_back(c);
  }

  // national squads: full-size preset has exactly players/23 teams
  const int teams = sc.squad_structure ? sc.players / 23 : sc.countries;
  const SquadPlan plan = squad_plan();
  std::vector<std::vector<int>> team_jerseys;  // per team, per local index
  if (sc.squad_structure) {
    team_jerseys.resize(teams);
    for (int t = 0; t < teams; ++t) {
      std::vector<std::vector<int>> pools = plan.jerseys_by_position;
      for (auto& pool : pools) rng.shuffle(pool);
      team_jerseys[t].resize(23);
      std::vector<int> cursor(4, 0);
      for (int i = 0; i < 23; ++i) {
        const int pos = plan.position_of_local[i];
        team_jerseys[t][i] = pools[pos][cursor[pos]++];
      }
    }
  }

  for (int p = 0; p < sc.players; ++p) {
    int country, position, jersey, age;
    if (sc.squad_structure) {
      const int team = p / 23;
      const int local = p % 23;
      country = team % sc.countries;
      position = plan.position_of_local[local];
      jersey = team_jerseys[team][local];
      age = 16 + static_cast<int>(rng.index(std::min(sc.numbers, 39) - 16 + 1));
    } else {
      country = p % sc.countries;
      position = static_cast<int>(rng.index(sc.positions));
      jersey = 1 + static_cast<int>(rng.index(sc.numbers));
      age = 1 + static_cast<int>(rng.index(sc.numbers));
    }
    int club;
    if (rng.uniform() < sc.domestic_club_fraction && !clubs_in_country[country].empty()) {
      const auto& domestic = clubs_in_country[country];
      club = domestic[rng.index(domestic.size())];
    } else {
      club = static_cast<int>(rng.index(sc.clubs));
    }

    kb.add_triplet(players[p], rel_club, clubs[club]);
    kb.add_triplet(players[p], rel_position, positions[position]);
    kb.add_triplet(players[p], rel_aged, numbers[age - 1]);
    kb.add_triplet(players[p], rel_number, numbers[jersey - 1]);
    kb.add_triplet(players[p], rel_country, countries[country]);
  }
  for (int c = 0; c < sc.clubs; ++c)
    kb.add_triplet(clubs[c], rel_club_country, countries[club_country[c]]);

  return kb;
}

namespace {

std::string fill_template(const std::string& templ, const KnowledgeBase& kb,
                          const std::vector<int>& subjects,
                          const std::vector<FamilySpec::Leg>& legs) {
  std::string q = templ;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const std::string name = kb.entity_name(subjects[i]);
    switch (legs[i].subject_type) {
      case EntityType::Player:
        q = replace_all(q, "{player}", surface(name));
        break;
      case EntityType::Club:
        q = replace_all(q, "{club}", surface(name));
        break;
      case EntityType::Position:
        q = replace_all(q, "{position}", surface(name));
        q = replace_all(q, "{position_pl}", surface(name) + "s");
        break;
      case EntityType::Country: {
        q = replace_all(q, "{country_1}", surface(name));
        const auto& names = country_names();
        auto it = std::find(names.begin(), names.end(), name);
        const std::string adj = it == names.end()
                                    ? surface(name)
                                    : country_adjectives()[it - names.begin()];
        q = replace_all(q, "{country_2}", surface(adj));
        break;
      }
      default:
        break;
    }
  }
  return q;
}

QAExample make_example(const KnowledgeBase& kb, const FamilySpec& fam,
                       const std::vector<int>& subjects, std::vector<int> answers, Rng& rng) {
  QAExample ex;
  ex.family = fam.id;
  ex.entities = subjects;
  ex.answers = std::move(answers);
  const std::string& templ = fam.templates[rng.index(fam.templates.size())];
  ex.question = fill_template(templ, kb, subjects, fam.legs);
  ex.tokens = tokenize(ex.question);
  return ex;
}

}  // namespace

std::vector<QAExample> generate_path_questions(const KnowledgeBase& kb, Rng& rng) {
  std::vector<QAExample> out;
  const int rel_country = kb.relation_id(kCountryRel);

  for (const FamilySpec& fam : question_families()) {
    if (fam.conj) continue;
    const RelationPath path = family_path(fam, kb);
    const bool per_player_walk = fam.id == 12;

    if (per_player_walk) {
      // family 12 walks country -> player -> club; one question per player
      for (int p : kb.entities_of_type(EntityType::Player)) {
        const int country = kb.objects(p, RelationId{rel_country, false}).at(0);
        std::vector<int> answers = kb.traverse(country, path);
        if (answers.empty()) continue;
        out.push_back(make_example(kb, fam, {country}, std::move(answers), rng));
      }
      continue;
    }

    for (int s : kb.entities_of_type(fam.legs[0].subject_type)) {
      std::vector<int> answers = kb.traverse(s, path);
      if (answers.empty()) continue;
      const bool one_to_many = fam.id >= 7 && fam.id <= 10;
      // one-to-many families yield one question-answer pair per true object,
      // many-to-one families one per subject
      const std::size_t copies = one_to_many ? answers.size() : 1;
      for (std::size_t i = 0; i < copies; ++i)
        out.push_back(make_example(kb, fam, {s}, answers, rng));
    }
  }
  return out;
}

std::vector<QAExample> generate_conj_questions(const KnowledgeBase& kb, Rng& rng) {
  std::vector<QAExample> out;
  for (const FamilySpec& fam : question_families()) {
    if (!fam.conj) continue;
    const RelationId r1{kb.relation_id(fam.legs[0].relation), fam.legs[0].inverted};
    const RelationId r2{kb.relation_id(fam.legs[1].relation), fam.legs[1].inverted};
    // one instantiation per player: the player's own attribute pair
    for (int p : kb.entities_of_type(EntityType::Player)) {
      const int s1 = kb.objects(p, r1.inverse()).at(0);
      const int s2 = kb.objects(p, r2.inverse()).at(0);
      const auto& a1 = kb.objects(s1, r1);
      const auto& a2 = kb.objects(s2, r2);
      std::vector<int> answers;
      std::set_intersection(a1.begin(), a1.end(), a2.begin(), a2.end(),
                            std::back_inserter(answers));
      if (answers.empty()) continue;
      out.push_back(make_example(kb, fam, {s1, s2}, std::move(answers), rng));
    }
  }
  return out;
}

std::array<std::vector<int>, 3> split_dataset(const std::vector<QAExample>& examples,
                                              const std::array<double, 3>& fractions, Rng& rng) {
  const double frac_sum = fractions[0] + fractions[1] + fractions[2];
  if (std::fabs(frac_sum - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: fractions must sum to 1");

  // group by (family, entity tuple)
  std::map<std::pair<int, std::vector<int>>, std::vector<int>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i)
    groups[{examples[i].family, examples[i].entities}].push_back(static_cast<int>(i));

  std::map<int, std::vector<std::vector<int>>> by_family;
  for (auto& [key, ids] : groups) by_family[key.first].push_back(std::move(ids));

  // process families with the largest atoms first so the singleton-rich
  // families absorb the rounding carry at the end
  std::vector<int> family_order;
  for (auto& [fam, g] : by_family) family_order.push_back(fam);
  std::sort(family_order.begin(), family_order.end(), [&](int a, int b) {
    std::size_t ma = 0, mb = 0;
    for (const auto& g : by_family[a]) ma = std::max(ma, g.size());
    for (const auto& g : by_family[b]) mb = std::max(mb, g.size());
    if (ma != mb) return ma > mb;
    return a < b;
  });

  std::array<std::vector<int>, 3> splits;
  double carry_valid = 0.0, carry_test = 0.0;

  for (int fam : family_order) {
    auto& fam_groups = by_family[fam];
    rng.shuffle(fam_groups);
    std::size_t fam_n = 0;
    for (const auto& g : fam_groups) fam_n += g.size();

    double want_valid = static_cast<double>(fam_n) * fractions[1] + carry_valid;
    double want_test = static_cast<double>(fam_n) * fractions[2] + carry_test;
    std::size_t got_valid = 0, got_test = 0;
    std::vector<bool> taken(fam_groups.size(), false);

    // guarantee presence of every sufficiently large family in all splits:
    // the group closest to each target seeds valid and test
    if (fam_groups.size() >= 3) {
      auto closest = [&](double target) {
        int best = -1;
        double best_d = 0.0;
        for (std::size_t i = 0; i < fam_groups.size(); ++i) {
          if (taken[i]) continue;
          const double d = std::fabs(static_cast<double>(fam_groups[i].size()) - target);
          if (best < 0 || d < best_d) {
            best = static_cast<int>(i);
            best_d = d;
          }
        }
        return best;
      };
      const int vi = closest(want_valid);
      taken[vi] = true;
      got_valid += fam_groups[vi].size();
      splits[1].insert(splits[1].end(), fam_groups[vi].begin(), fam_groups[vi].end());
      const int ti = closest(want_test);
      taken[ti] = true;
      got_test += fam_groups[ti].size();
      splits[2].insert(splits[2].end(), fam_groups[ti].begin(), fam_groups[ti].end());
    }

    for (std::size_t i = 0; i < fam_groups.size(); ++i) {
      if (taken[i]) continue;
      const double sz = static_cast<double>(fam_groups[i].size());
      if (static_cast<double>(got_valid) + sz <= want_valid + 0.5) {
        splits[1].insert(splits[1].end(), fam_groups[i].begin(), fam_groups[i].end());
        got_valid += fam_groups[i].size();
        taken[i] = true;
      }
    }
    for (std::size_t i = 0; i < fam_groups.size(); ++i) {
      if (taken[i]) continue;
      const double sz = static_cast<double>(fam_groups[i].size());
      if (static_cast<double>(got_test) + sz <= want_test + 0.5) {
        splits[2].insert(splits[2].end(), fam_groups[i].begin(), fam_groups[i].end());
        got_test += fam_groups[i].size();
        taken[i] = true;
      }
    }
    for (std::size_t i = 0; i < fam_groups.size(); ++i) {
      if (taken[i]) continue;
      splits[0].insert(splits[0].end(), fam_groups[i].begin(), fam_groups[i].end());
    }

    carry_valid = want_valid - static_cast<double>(got_valid);
    carry_test = want_test - static_cast<double>(got_test);
  }

  for (auto& s : splits) std::sort(s.begin(), s.end());
  return splits;
}

GeneratedDataset generate_dataset(const GenConfig& cfg) {
  GeneratedDataset data;
  data.kb = generate_kb(cfg);
  Rng qrng(cfg.seed ^ 0xA5A5A5A55A5A5A5Aull);
  data.path_examples = generate_path_questions(data.kb, qrng);
  data.conj_examples = generate_conj_questions(data.kb, qrng);
  Rng srng(cfg.seed ^ 0xC3C3C3C33C3C3C3Cull);
  data.path_split = split_dataset(data.path_examples, cfg.path_split, srng);
  data.conj_split = split_dataset(data.conj_examples, cfg.conj_split, srng);
  return data;
}

namespace {

void write_examples_jsonl(const std::filesystem::path& file, const KnowledgeBase& kb,
                          const std::vector<QAExample>& examples) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const QAExample& ex : examples) {
    nlohmann::json j;
    j["question"] = ex.question;
    nlohmann::json ents = nlohmann::json::array();
    for (int e : ex.entities) ents.push_back(kb.entity_name(e));
    j["entities"] = std::move(ents);
    nlohmann::json answers = nlohmann::json::array();
    for (int a : ex.answers) answers.push_back(kb.entity_name(a));
    j["answers"] = std::move(answers);
    j["family"] = ex.family;
    out << j.dump() << '\n';
  }
}

}  // namespace

void write_dataset(const GeneratedDataset& data, const GenConfig& cfg,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  data.kb.save_tsv(dir / "kb.tsv");
  write_examples_jsonl(dir / "questions_path.jsonl", data.kb, data.path_examples);
  write_examples_jsonl(dir / "questions_conj.jsonl", data.kb, data.conj_examples);

  nlohmann::json splits;
  const char* names[3] = {"train", "valid", "test"};
  for (int i = 0; i < 3; ++i) splits["path"][names[i]] = data.path_split[i];
  for (int i = 0; i < 3; ++i) splits["conj"][names[i]] = data.conj_split[i];
  {
    std::ofstream out(dir / "splits.json");
    out << splits.dump(1) << '\n';
  }

  std::set<std::string> vocab;
  std::map<int, int> per_family;
  for (const auto* list : {&data.path_examples, &data.conj_examples}) {
    for (const QAExample& ex : *list) {
      for (const std::string& t : ex.tokens) vocab.insert(t);
      ++per_family[ex.family];
    }
  }

  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["seed"] = cfg.seed;
  manifest["schema"] = {{"players", cfg.schema.players},
                        {"clubs", cfg.schema.clubs},
                        {"countries", cfg.schema.countries},
                        {"numbers", cfg.schema.numbers},
                        {"positions", cfg.schema.positions},
                        {"domestic_club_fraction", cfg.schema.domestic_club_fraction},
                        {"squad_structure", cfg.schema.squad_structure}};
  manifest["split_fractions"] = {{"path", cfg.path_split}, {"conj", cfg.conj_split}};
  manifest["stratified_by"] = "family";
  nlohmann::json counts;
  counts["entities"] = data.kb.num_entities();
  counts["relations"] = data.kb.num_relations();
  counts["triplets"] = data.kb.num_triplets();
  counts["path_questions"] = data.path_examples.size();
  counts["conj_questions"] = data.conj_examples.size();
  for (int i = 0; i < 3; ++i) counts["path_split"][names[i]] = data.path_split[i].size();
  for (int i = 0; i < 3; ++i) counts["conj_split"][names[i]] = data.conj_split[i].size();
  nlohmann::json fam_counts = nlohmann::json::object();
  for (auto [fam, n] : per_family) fam_counts[std::to_string(fam)] = n;
  counts["per_family"] = std::move(fam_counts);
  counts["vocabulary"] = vocab.size();
  manifest["counts"] = std::move(counts);
  {
    std::ofstream out(dir / "gen_manifest.json");
    out << manifest.dump(1) << '\n';
  }
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  LoadedDataset data;
  data.kb = KnowledgeBase::load_tsv(dir / "kb.tsv");
  data.path_examples = load_examples_jsonl(dir / "questions_path.jsonl", data.kb);
  data.conj_examples = load_examples_jsonl(dir / "questions_conj.jsonl", data.kb);
  std::ifstream in(dir / "splits.json");
  if (!in) throw std::runtime_error("cannot read splits.json in " + dir.string());
  nlohmann::json splits = nlohmann::json::parse(in);
  const char* names[3] = {"train", "valid", "test"};
  for (int i = 0; i < 3; ++i) {
    data.path_split[i] = splits.at("path").at(names[i]).get<std::vector<int>>();
    data.conj_split[i] = splits.at("conj").at(names[i]).get<std::vector<int>>();
  }
  return data;
}

std::vector<QAExample> LoadedDataset::split_examples(int split) const {
  std::vector<QAExample> out;
  for (int id : path_split.at(split)) out.push_back(path_examples.at(id));
  for (int id : conj_split.at(split)) out.push_back(conj_examples.at(id));
  return out;
}

}  // namespace transgauss
