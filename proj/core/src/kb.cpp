#include "transgauss/kb.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "transgauss/rng.hpp"

namespace transgauss {

const std::vector<int> KnowledgeBase::empty_;

int KnowledgeBase::add_entity(const std::string& name, EntityType type) {
  if (auto it = entity_ids_.find(name); it != entity_ids_.end()) return it->second;
  const int id = static_cast<int>(entity_names_.size());
  entity_names_.push_back(name);
  entity_types_.push_back(type);
  entity_ids_.emplace(name, id);
  for (auto& adj : fwd_) adj.emplace_back();
  for (auto& adj : bwd_) adj.emplace_back();
  return id;
}

int KnowledgeBase::add_relation(const std::string& name) {
  if (auto it = relation_ids_.find(name); it != relation_ids_.end()) return it->second;
  const int id = static_cast<int>(relation_names_.size());
  relation_names_.push_back(name);
  relation_ids_.emplace(name, id);
  fwd_.emplace_back(entity_names_.size());
  bwd_.emplace_back(entity_names_.size());
  return id;
}

namespace {
void insert_sorted(std::vector<int>& v, int x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) v.insert(it, x);
}
}  // namespace

void KnowledgeBase::add_triplet(int s, int r, int o) {
  if (s < 0 || s >= num_entities())
    throw std::out_of_range("add_triplet: unknown subject entity id " + std::to_string(s));
  if (o < 0 || o >= num_entities())
    throw std::out_of_range("add_triplet: unknown object entity id " + std::to_string(o));
  if (r < 0 || r >= num_relations())
    throw std::out_of_range("add_triplet: unknown relation id " + std::to_string(r));
  auto& objs = fwd_[r][s];
  if (std::binary_search(objs.begin(), objs.end(), o)) return;  // stored once
  insert_sorted(objs, o);
  insert_sorted(bwd_[r][o], s);
  triplets_.push_back({s, r, o});
}

std::string KnowledgeBase::relation_display(RelationId r) const {
  std::string name = relation_name(r.base);
  if (r.inverted) name += "^-1";
  return name;
}

int KnowledgeBase::entity_id(const std::string& name) const {
  auto it = entity_ids_.find(name);
  if (it == entity_ids_.end()) throw std::out_of_range("unknown entity: " + name);
  return it->second;
}

int KnowledgeBase::relation_id(const std::string& name) const {
  auto it = relation_ids_.find(name);
  if (it == relation_ids_.end()) throw std::out_of_range("unknown relation: " + name);
  return it->second;
}

std::vector<int> KnowledgeBase::entities_of_type(EntityType t) const {
  std::vector<int> out;
  for (int e = 0; e < num_entities(); ++e)
    if (entity_types_[e] == t) out.push_back(e);
  return out;
}

const std::vector<int>& KnowledgeBase::objects(int s, RelationId r) const {
  if (s < 0 || s >= num_entities() || r.base < 0 || r.base >= num_relations()) return empty_;
  return r.inverted ? bwd_[r.base][s] : fwd_[r.base][s];
}

std::vector<int> KnowledgeBase::traverse(int s, const RelationPath& p) const {
  if (p.steps.empty()) throw std::invalid_argument("traverse: empty path");
  std::vector<int> frontier{s};
  for (const RelationId& step : p.steps) {
    std::set<int> next;
    for (int e : frontier) {
      const auto& objs = objects(e, step);
      next.insert(objs.begin(), objs.end());
    }
    frontier.assign(next.begin(), next.end());
    if (frontier.empty()) break;
  }
  return frontier;
}

std::vector<int> KnowledgeBase::incorrect_objects(int s, const RelationPath& p) const {
  const std::vector<int> correct = traverse(s, p);
  std::vector<int> out;
  out.reserve(num_entities() - correct.size());
  std::size_t j = 0;
  for (int e = 0; e < num_entities(); ++e) {
    if (j < correct.size() && correct[j] == e) {
      ++j;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

std::vector<PathSample> KnowledgeBase::sample_paths(int count, int max_len,
                                                    std::uint64_t seed) const {
  if (num_entities() == 0 || triplets_.empty())
    throw std::invalid_argument("sample_paths: empty knowledge base");
  if (max_len < 1) throw std::invalid_argument("sample_paths: max_len must be >= 1");

  Rng rng(seed);
  std::vector<PathSample> out;
  out.reserve(count);
  std::vector<RelationId> applicable;
  applicable.reserve(2 * num_relations());

  for (int i = 0; i < count; ++i) {
    bool done = false;
    for (int attempt = 0; attempt < 10 && !done; ++attempt) {
      const int target_len = 1 + static_cast<int>(rng.index(max_len));
      int cur = static_cast<int>(rng.index(num_entities()));
      PathSample sample;
      sample.s = cur;
      bool dead = false;
      for (int hop = 0; hop < target_len; ++hop) {
        applicable.clear();
        for (int r = 0; r < num_relations(); ++r) {
          if (!fwd_[r][cur].empty()) applicable.emplace_back(r, false);
          if (!bwd_[r][cur].empty()) applicable.emplace_back(r, true);
        }
        if (applicable.empty()) {
          dead = true;
          break;
        }
        const RelationId step = applicable[rng.index(applicable.size())];
        const auto& succ = objects(cur, step);
        cur = succ[rng.index(succ.size())];
        sample.path.steps.push_back(step);
      }
      if (!dead) {
        sample.o = cur;
        out.push_back(std::move(sample));
        done = true;
      }
    }
    // a walk that dead-ended 10 times is skipped; the sampler stays total
  }
  return out;
}

void KnowledgeBase::save_tsv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const Triplet& t : triplets_) {
    out << entity_names_[t.s] << '\t' << relation_names_[t.r] << '\t'
        << entity_names_[t.o] << '\n';
  }
}

KnowledgeBase KnowledgeBase::load_tsv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  KnowledgeBase kb;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string s, r, o;
    if (!std::getline(ss, s, '\t') || !std::getline(ss, r, '\t') || !std::getline(ss, o, '\t'))
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                               ": expected subject<TAB>relation<TAB>object");
    const int si = kb.add_entity(s);
    const int ri = kb.add_relation(r);
    const int oi = kb.add_entity(o);
    kb.add_triplet(si, ri, oi);
  }
  return kb;
}

}  // namespace transgauss
