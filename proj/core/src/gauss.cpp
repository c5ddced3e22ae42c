#include "transgauss/gauss.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace transgauss {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

double elu(double x) { return x >= 0.0 ? x : std::exp(x) - 1.0; }

void variance_of(std::span<const double> m_raw, double eps, std::span<double> out) {
  for (std::size_t j = 0; j < m_raw.size(); ++j) out[j] = elu(m_raw[j]) + 1.0 + eps;
}

std::vector<double> variance_of(const RelationParams& rel, double eps) {
  std::vector<double> var(rel.m_raw.size());
  variance_of(rel.m_raw, eps, var);
  return var;
}

double log_density(std::span<const double> x, const DiagGaussian& g) {
  if (x.size() != g.mean.size() || g.mean.size() != g.var.size())
    throw std::invalid_argument("log_density: dimension mismatch");
  double quad = 0.0;
  double logdet = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - g.mean[j];
    quad += d * d / g.var[j];
    logdet += std::log(g.var[j]);
  }
  return -0.5 * (quad + logdet + kLog2Pi * static_cast<double>(x.size()));
}

double conjunction_score(std::span<const double> x, const std::vector<DiagGaussian>& contexts) {
  if (contexts.empty()) throw std::invalid_argument("conjunction_score: empty context list");
  double score = 0.0;
  for (const DiagGaussian& g : contexts) score += log_density(x, g);
  return score;
}

EmbeddingSet::EmbeddingSet(int num_entities, int num_base_relations, int dim, double eps)
    : dim_(dim),
      eps_(eps),
      num_entities_(num_entities),
      num_base_(num_base_relations),
      entities_(static_cast<std::size_t>(num_entities) * dim, 0.0),
      deltas_(static_cast<std::size_t>(2 * num_base_relations) * dim, 0.0),
      m_raws_(static_cast<std::size_t>(2 * num_base_relations) * dim, 0.0) {}

int EmbeddingSet::slot(RelationId r) const {
  if (r.base < 0 || r.base >= num_base_)
    throw std::out_of_range("unknown relation id " + std::to_string(r.base));
  return r.inverted ? num_base_ + r.base : r.base;
}

std::span<double> EmbeddingSet::entity_vec(int e) {
  if (e < 0 || e >= num_entities_)
    throw std::out_of_range("unknown entity id " + std::to_string(e));
  return {entities_.data() + static_cast<std::size_t>(e) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<const double> EmbeddingSet::entity_vec(int e) const {
  if (e < 0 || e >= num_entities_)
    throw std::out_of_range("unknown entity id " + std::to_string(e));
  return {entities_.data() + static_cast<std::size_t>(e) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<double> EmbeddingSet::delta(int slot) {
  return {deltas_.data() + static_cast<std::size_t>(slot) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<const double> EmbeddingSet::delta(int slot) const {
  return {deltas_.data() + static_cast<std::size_t>(slot) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<double> EmbeddingSet::m_raw(int slot) {
  return {m_raws_.data() + static_cast<std::size_t>(slot) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<const double> EmbeddingSet::m_raw(int slot) const {
  return {m_raws_.data() + static_cast<std::size_t>(slot) * dim_, static_cast<std::size_t>(dim_)};
}

std::vector<double> EmbeddingSet::variance_slot(int slot) const {
  std::vector<double> var(dim_, 1.0);
  if (!unit_variance_) variance_of(m_raw(slot), eps_, var);
  return var;
}

std::vector<double> EmbeddingSet::variance(RelationId r) const { return variance_slot(slot(r)); }

void EmbeddingSet::materialize_inverses_from_base() {
  for (int b = 0; b < num_base_; ++b) {
    auto src_d = delta(b);
    auto src_m = m_raw(b);
    auto dst_d = delta(num_base_ + b);
    auto dst_m = m_raw(num_base_ + b);
    for (int j = 0; j < dim_; ++j) {
      dst_d[j] = -src_d[j];
      dst_m[j] = src_m[j];
    }
  }
}

void EmbeddingSet::set_names(std::vector<std::string> entity_names,
                             std::vector<std::string> relation_names) {
  entity_names_ = std::move(entity_names);
  relation_names_ = std::move(relation_names);
}

void EmbeddingSet::save(const std::filesystem::path& file, const std::string& model,
                        const std::string& config_json) const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["dim"] = dim_;
  doc["eps"] = eps_;
  doc["model"] = model;
  doc["config"] = nlohmann::json::parse(config_json);
  nlohmann::json ents = nlohmann::json::object();
  for (int e = 0; e < num_entities_; ++e) {
    const std::string name = e < static_cast<int>(entity_names_.size())
                                 ? entity_names_[e]
                                 : "entity_" + std::to_string(e);
    const auto v = entity_vec(e);
    ents[name] = std::vector<double>(v.begin(), v.end());
  }
  doc["entities"] = std::move(ents);
  nlohmann::json rels = nlohmann::json::object();
  for (int s = 0; s < num_relation_slots(); ++s) {
    const int base = s % num_base_;
    std::string name = base < static_cast<int>(relation_names_.size())
                           ? relation_names_[base]
                           : "relation_" + std::to_string(base);
    if (s >= num_base_) name += "^-1";
    const auto d = delta(s);
    const auto m = m_raw(s);
    rels[name] = {{"delta", std::vector<double>(d.begin(), d.end())},
                  {"m_raw", std::vector<double>(m.begin(), m.end())}};
  }
  doc["relations"] = std::move(rels);

  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << doc.dump(1) << '\n';
}

EmbeddingSet EmbeddingSet::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported embedding checkpoint version");

  const int dim = doc.at("dim").get<int>();
  const double eps = doc.at("eps").get<double>();
  const auto& rels = doc.at("relations");
  std::vector<std::string> rel_names;
  for (auto it = rels.begin(); it != rels.end(); ++it) {
    const std::string& key = it.key();
    if (key.size() < 3 || key.substr(key.size() - 3) != "^-1") rel_names.push_back(key);
  }
  const auto& ents = doc.at("entities");

  EmbeddingSet emb(static_cast<int>(ents.size()), static_cast<int>(rel_names.size()), dim, eps);
  std::vector<std::string> ent_names;
  int e = 0;
  for (auto it = ents.begin(); it != ents.end(); ++it, ++e) {
    ent_names.push_back(it.key());
    const auto vec = it.value().get<std::vector<double>>();
    if (static_cast<int>(vec.size()) != dim)
      throw std::runtime_error("entity vector has wrong dimension: " + it.key());
    std::copy(vec.begin(), vec.end(), emb.entity_vec(e).begin());
  }
  for (std::size_t b = 0; b < rel_names.size(); ++b) {
    for (int inv = 0; inv < 2; ++inv) {
      const std::string key = inv ? rel_names[b] + "^-1" : rel_names[b];
      const auto& r = rels.at(key);
      const auto d = r.at("delta").get<std::vector<double>>();
      const auto m = r.at("m_raw").get<std::vector<double>>();
      const int slot = inv ? static_cast<int>(rel_names.size() + b) : static_cast<int>(b);
      std::copy(d.begin(), d.end(), emb.delta(slot).begin());
      std::copy(m.begin(), m.end(), emb.m_raw(slot).begin());
    }
  }
  emb.set_names(std::move(ent_names), std::move(rel_names));
  emb.set_unit_variance(doc.value("model", "transgaussian") == "transe");
  return emb;
}

EmbeddingSet EmbeddingSet::aligned_to(const KnowledgeBase& kb) const {
  std::map<std::string, int> ent_index;
  for (std::size_t i = 0; i < entity_names_.size(); ++i)
    ent_index[entity_names_[i]] = static_cast<int>(i);
  std::map<std::string, int> rel_index;
  for (std::size_t i = 0; i < relation_names_.size(); ++i)
    rel_index[relation_names_[i]] = static_cast<int>(i);

  EmbeddingSet out(kb.num_entities(), kb.num_relations(), dim_, eps_);
  std::vector<std::string> ent_names, rel_names;
  for (int e = 0; e < kb.num_entities(); ++e) {
    auto it = ent_index.find(kb.entity_name(e));
    if (it == ent_index.end())
      throw std::runtime_error("embedding has no entity '" + kb.entity_name(e) + "'");
    const auto src = entity_vec(it->second);
    std::copy(src.begin(), src.end(), out.entity_vec(e).begin());
    ent_names.push_back(kb.entity_name(e));
  }
  for (int r = 0; r < kb.num_relations(); ++r) {
    auto it = rel_index.find(kb.relation_name(r));
    if (it == rel_index.end())
      throw std::runtime_error("embedding has no relation '" + kb.relation_name(r) + "'");
    for (int inv = 0; inv < 2; ++inv) {
      const int src_slot = inv ? num_base_ + it->second : it->second;
      const int dst_slot = inv ? kb.num_relations() + r : r;
      std::copy(delta(src_slot).begin(), delta(src_slot).end(), out.delta(dst_slot).begin());
      std::copy(m_raw(src_slot).begin(), m_raw(src_slot).end(), out.m_raw(dst_slot).begin());
    }
    rel_names.push_back(kb.relation_name(r));
  }
  out.set_names(std::move(ent_names), std::move(rel_names));
  out.set_unit_variance(unit_variance_);
  return out;
}

DiagGaussian triplet_context(const EmbeddingSet& emb, int s, RelationId r) {
  DiagGaussian g;
  const auto vs = emb.entity_vec(s);
  const auto dr = emb.delta(emb.slot(r));
  g.mean.resize(emb.dim());
  for (int j = 0; j < emb.dim(); ++j) g.mean[j] = vs[j] + dr[j];
  g.var = emb.variance(r);
  return g;
}

DiagGaussian path_context(const EmbeddingSet& emb, int s, const RelationPath& p) {
  if (p.steps.empty()) throw std::invalid_argument("path_context: empty path");
  DiagGaussian g;
  const auto vs = emb.entity_vec(s);
  g.mean.assign(vs.begin(), vs.end());
  g.var.assign(emb.dim(), 0.0);
  for (const RelationId& step : p.steps) {
    const int slot = emb.slot(step);
    const auto dr = emb.delta(slot);
    const std::vector<double> var = emb.variance_slot(slot);
    for (int j = 0; j < emb.dim(); ++j) {
      g.mean[j] += dr[j];
      g.var[j] += var[j];
    }
  }
  return g;
}

DiagGaussian weighted_context(const EmbeddingSet& emb, int e, std::span<const double> alpha) {
  if (static_cast<int>(alpha.size()) != emb.num_relation_slots())
    throw std::invalid_argument("weighted_context: alpha must have one weight per relation slot");
  DiagGaussian g;
  const auto ve = emb.entity_vec(e);
  g.mean.assign(ve.begin(), ve.end());
  g.var.assign(emb.dim(), emb.eps());
  for (int s = 0; s < emb.num_relation_slots(); ++s) {
    const double a = alpha[s];
    if (a == 0.0) continue;
    const auto dr = emb.delta(s);
    const std::vector<double> var = emb.variance_slot(s);
    for (int j = 0; j < emb.dim(); ++j) {
      g.mean[j] += a * dr[j];
      g.var[j] += a * a * var[j];
    }
  }
  return g;
}

}  // namespace transgauss
