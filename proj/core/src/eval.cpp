#include "transgauss/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"
#include "transgauss/rng.hpp"

namespace transgauss {

int filtered_rank(std::span<const double> scores, const std::vector<int>& answers, int target) {
  if (!std::binary_search(answers.begin(), answers.end(), target))
    throw std::invalid_argument("filtered_rank: target is not a listed answer");
  const double target_score = scores[target];
  int above = 0;
  std::size_t j = 0;
  for (int e = 0; e < static_cast<int>(scores.size()); ++e) {
    if (j < answers.size() && answers[j] == e) {
      ++j;  // never count a correct co-answer as a negative
      continue;
    }
    if (scores[e] >= target_score) ++above;
  }
  return 1 + above;
}

namespace {
FamilyStats stats_of(const std::vector<const RankResult*>& rs) {
  FamilyStats st;
  st.n = rs.size();
  if (rs.empty()) return st;
  std::size_t hits = 0;
  double rank_sum = 0.0;
  for (const RankResult* r : rs) {
    if (r->rank == 1) ++hits;
    rank_sum += static_cast<double>(r->rank);
  }
  st.h1 = 100.0 * static_cast<double>(hits) / static_cast<double>(rs.size());
  st.mean_rank = rank_sum / static_cast<double>(rs.size());
  return st;
}
}  // namespace

EvalReport aggregate(const std::vector<RankResult>& results) {
  EvalReport report;
  std::map<int, std::vector<const RankResult*>> by_family;
  std::vector<const RankResult*> path_all, conj_all;
  for (const RankResult& r : results) {
    by_family[r.family].push_back(&r);
    if (r.family >= 13)
      conj_all.push_back(&r);
    else
      path_all.push_back(&r);
  }
  for (const auto& [fam, rs] : by_family) report.families[fam] = stats_of(rs);
  if (!path_all.empty()) report.overall_path = stats_of(path_all);
  if (!conj_all.empty()) report.overall_conj = stats_of(conj_all);
  return report;
}

double overall_h1(const std::vector<RankResult>& results) {
  if (results.empty()) return 0.0;
  std::size_t hits = 0;
  for (const RankResult& r : results)
    if (r.rank == 1) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

namespace {

// identical questions asked more than once are evaluated once
std::vector<int> distinct_examples(const std::vector<QAExample>& examples) {
  std::set<std::tuple<std::string, std::vector<int>, int>> seen;
  std::vector<int> ids;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto key = std::make_tuple(examples[i].question, examples[i].entities, examples[i].family);
    if (seen.insert(std::move(key)).second) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

std::vector<RankResult> rank_with_contexts(const std::vector<DiagGaussian>& contexts,
                                           const EmbeddingSet& emb, const QAExample& ex,
                                           int question_id) {
  std::vector<double> scores(emb.num_entities());
  for (int e = 0; e < emb.num_entities(); ++e)
    scores[e] = conjunction_score(emb.entity_vec(e), contexts);
  std::vector<RankResult> out;
  out.reserve(ex.answers.size());
  for (int a : ex.answers) {
    RankResult r;
    r.question_id = question_id;
    r.answer = a;
    r.rank = filtered_rank(scores, ex.answers, a);
    r.family = ex.family;
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::vector<RankResult> eval_qa(const QAModelParams& params, const EmbeddingSet& emb,
                                const Vocabulary& vocab, const std::vector<QAExample>& examples) {
  std::vector<RankResult> results;
  for (int id : distinct_examples(examples)) {
    const QAExample& ex = examples[id];
    const AttentionTrace trace = compute_trace(params, emb, vocab, ex);
    auto ranks = rank_with_contexts(trace.contexts, emb, ex, id);
    results.insert(results.end(), ranks.begin(), ranks.end());
  }
  return results;
}

std::vector<RankResult> eval_embedding_direct(const EmbeddingSet& emb, const KnowledgeBase& kb,
                                              const std::vector<QAExample>& examples) {
  const auto& families = question_families();
  std::vector<RankResult> results;
  for (int id : distinct_examples(examples)) {
    const QAExample& ex = examples[id];
    const FamilySpec& fam = families.at(ex.family - 1);
    std::vector<DiagGaussian> contexts;
    if (!fam.conj) {
      contexts.push_back(path_context(emb, ex.entities.at(0), family_path(fam, kb)));
    } else {
      for (std::size_t leg = 0; leg < fam.legs.size(); ++leg) {
        const RelationId rel{kb.relation_id(fam.legs[leg].relation), fam.legs[leg].inverted};
        contexts.push_back(triplet_context(emb, ex.entities.at(leg), rel));
      }
    }
    auto ranks = rank_with_contexts(contexts, emb, ex, id);
    results.insert(results.end(), ranks.begin(), ranks.end());
  }
  return results;
}

namespace {
void append_row(std::ostream& os, const std::string& label, const FamilyStats& st) {
  os << std::left << std::setw(14) << label << std::right << std::setw(8) << st.n
     << std::setw(10) << std::fixed << std::setprecision(2) << st.h1 << std::setw(20)
     << std::setprecision(2) << st.mean_rank << '\n';
}
}  // namespace

std::string report_text(const EvalReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "family" << std::right << std::setw(8) << "n"
     << std::setw(10) << "H@1(%)" << std::setw(20) << "mean filtered rank" << '\n';
  for (const auto& [fam, st] : report.families) append_row(os, std::to_string(fam), st);
  if (report.overall_path) append_row(os, "overall_path", *report.overall_path);
  if (report.overall_conj) append_row(os, "overall_conj", *report.overall_conj);
  return os.str();
}

namespace {
nlohmann::json stats_json(const FamilyStats& st) {
  return {{"n", st.n}, {"h1", st.h1}, {"mean_filtered_rank", st.mean_rank}};
}
}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& dir,
                  const std::string& basename) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / (basename + ".csv"));
    csv << "group,n,h1,mean_filtered_rank\n";
    csv << std::setprecision(17);
    for (const auto& [fam, st] : report.families)
      csv << fam << ',' << st.n << ',' << st.h1 << ',' << st.mean_rank << '\n';
    if (report.overall_path) {
      const auto& st = *report.overall_path;
      csv << "overall_path," << st.n << ',' << st.h1 << ',' << st.mean_rank << '\n';
    }
    if (report.overall_conj) {
      const auto& st = *report.overall_conj;
      csv << "overall_conj," << st.n << ',' << st.h1 << ',' << st.mean_rank << '\n';
    }
  }
  {
    std::ofstream txt(dir / (basename + ".txt"));
    txt << report_text(report);
  }
  {
    nlohmann::json j;
    nlohmann::json fams = nlohmann::json::object();
    for (const auto& [fam, st] : report.families) fams[std::to_string(fam)] = stats_json(st);
    j["families"] = std::move(fams);
    if (report.overall_path) j["overall_path"] = stats_json(*report.overall_path);
    if (report.overall_conj) j["overall_conj"] = stats_json(*report.overall_conj);
    std::ofstream js(dir / (basename + ".json"));
    js << j.dump(1) << '\n';
  }
}

// ---- KBC -------------------------------------------------------------------

KbcTask make_kbc_task(const KnowledgeBase& kb, double holdout_fraction, std::uint64_t seed) {
  if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
    throw std::invalid_argument("make_kbc_task: holdout fraction must be in (0,1)");
  Rng rng(seed);
  std::vector<int> order(kb.num_triplets());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  const std::size_t holdout = static_cast<std::size_t>(
      std::floor(holdout_fraction * static_cast<double>(kb.num_triplets())));
  std::set<int> held(order.begin(), order.begin() + holdout);

  KbcTask task;
  // rebuild the training KB with identical ids
  for (int e = 0; e < kb.num_entities(); ++e)
    task.train_kb.add_entity(kb.entity_name(e), kb.entity_type(e));
  for (int r = 0; r < kb.num_relations(); ++r) task.train_kb.add_relation(kb.relation_name(r));
  for (std::size_t i = 0; i < kb.num_triplets(); ++i)
    if (!held.count(static_cast<int>(i))) task.train_kb.add_triplet(kb.triplets()[i]);

  // type-compatible object pools per relation, from the full KB
  std::vector<std::vector<int>> pools(kb.num_relations());
  for (const Triplet& t : kb.triplets()) pools[t.r].push_back(t.o);
  for (auto& pool : pools) {
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  }

  std::size_t idx = 0;
  for (int t_idx : order) {
    if (idx >= holdout) break;
    ++idx;
    const Triplet& pos = kb.triplets()[t_idx];
    const auto& truth = kb.objects(pos.s, RelationId{pos.r, false});
    const auto& pool = pools[pos.r];
    if (pool.size() <= truth.size()) continue;  // nothing type-compatible to corrupt with
    int neg_obj;
    do {
      neg_obj = pool[rng.index(pool.size())];
    } while (std::binary_search(truth.begin(), truth.end(), neg_obj));
    auto& bucket = (idx % 2 == 0) ? task.valid : task.test;
    bucket.emplace_back(pos, true);
    bucket.emplace_back(Triplet{pos.s, pos.r, neg_obj}, false);
  }
  return task;
}

double triplet_score(const EmbeddingSet& emb, const Triplet& t) {
  return log_density(emb.entity_vec(t.o), triplet_context(emb, t.s, RelationId{t.r, false}));
}

KbcThresholds tune_kbc_thresholds(const EmbeddingSet& emb,
                                  const std::vector<std::pair<Triplet, bool>>& valid) {
  std::map<int, std::vector<std::pair<double, bool>>> by_rel;
  std::vector<std::pair<double, bool>> all;
  for (const auto& [t, label] : valid) {
    const double s = triplet_score(emb, t);
    by_rel[t.r].emplace_back(s, label);
    all.emplace_back(s, label);
  }

  auto best_threshold = [](std::vector<std::pair<double, bool>> scored) {
    // classify true iff score >= theta; sweep candidate thresholds downward
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    long positives = 0;
    for (const auto& [s, label] : scored)
      if (label) ++positives;
    // theta above the max score: everything classified false
    long correct = static_cast<long>(scored.size()) - positives;
    long best_correct = correct;
    double best_theta = scored.empty() ? 0.0 : scored.front().first + 1.0;
    for (std::size_t i = 0; i < scored.size(); ++i) {
      correct += scored[i].second ? 1 : -1;
      // place the threshold at this score; ties at the boundary are included
      if (i + 1 < scored.size() && scored[i + 1].first == scored[i].first) continue;
      if (correct > best_correct) {
        best_correct = correct;
        best_theta = scored[i].first;
      }
    }
    return best_theta;
  };

  KbcThresholds th;
  th.fallback = best_threshold(all);
  for (auto& [rel, scored] : by_rel) th.per_relation[rel] = best_threshold(scored);
  return th;
}

double kbc_apply(const EmbeddingSet& emb, const std::vector<std::pair<Triplet, bool>>& labeled,
                 const KbcThresholds& thresholds) {
  if (labeled.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& [t, label] : labeled) {
    auto it = thresholds.per_relation.find(t.r);
    const double theta = it == thresholds.per_relation.end() ? thresholds.fallback : it->second;
    const bool predicted = triplet_score(emb, t) >= theta;
    if (predicted == label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labeled.size());
}

double kbc_accuracy(const EmbeddingSet& emb, const std::vector<std::pair<Triplet, bool>>& test,
                    const std::vector<std::pair<Triplet, bool>>& valid) {
  return kbc_apply(emb, test, tune_kbc_thresholds(emb, valid));
}

}  // namespace transgauss
