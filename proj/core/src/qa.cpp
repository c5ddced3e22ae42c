#include "transgauss/qa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"

namespace transgauss {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y = W x (+ y0), W row-major rows x cols
void matvec_into(std::span<const double> w, std::span<const double> x, std::span<double> y,
                 bool accumulate) {
  const int rows = static_cast<int>(y.size());
  const int cols = static_cast<int>(x.size());
  for (int i = 0; i < rows; ++i) {
    double acc = accumulate ? y[i] : 0.0;
    const double* row = w.data() + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}
}  // namespace

std::vector<std::string> tokenize(const std::string& question) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : question) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (ch == '?' || ch == ',' || ch == '!' || ch == '.') {
      flush();
      tokens.push_back(std::string(1, ch));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  if (tokens.empty()) throw std::invalid_argument("tokenize: empty question");
  return tokens;
}

Vocabulary::Vocabulary(const std::vector<std::string>& corpus_tokens) {
  tokens_.push_back("<unk>");
  std::map<std::string, int> seen;
  for (const std::string& t : corpus_tokens) seen.emplace(t, 0);
  for (auto& [tok, id] : seen) {
    id = static_cast<int>(tokens_.size());
    tokens_.push_back(tok);
    ids_.emplace(tok, id);
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

Vocabulary Vocabulary::from_token_list(std::vector<std::string> tokens_in_id_order) {
  Vocabulary v;
  if (tokens_in_id_order.empty() || tokens_in_id_order[0] != "<unk>")
    throw std::runtime_error("vocabulary list must start with <unk>");
  v.tokens_ = std::move(tokens_in_id_order);
  for (std::size_t i = 1; i < v.tokens_.size(); ++i)
    v.ids_.emplace(v.tokens_[i], static_cast<int>(i));
  return v;
}

std::vector<QAExample> load_examples_jsonl(const std::filesystem::path& file,
                                           const KnowledgeBase& kb) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::vector<QAExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    QAExample ex;
    ex.question = j.at("question").get<std::string>();
    ex.tokens = tokenize(ex.question);
    for (const auto& name : j.at("entities")) ex.entities.push_back(kb.entity_id(name));
    for (const auto& name : j.at("answers")) ex.answers.push_back(kb.entity_id(name));
    std::sort(ex.answers.begin(), ex.answers.end());
    ex.family = j.at("family").get<int>();
    if (ex.entities.empty() || ex.answers.empty())
      throw std::runtime_error("example with empty entities or answers: " + ex.question);
    out.push_back(std::move(ex));
  }
  return out;
}

QAModelParams QAModelParams::init(int vocab, int word_dim, int hidden, int mlp_hidden, int dim,
                                  int rel_slots, Rng& rng) {
  QAModelParams p;
  p.vocab = vocab;
  p.word_dim = word_dim;
  p.hidden = hidden;
  p.mlp_hidden = mlp_hidden;
  p.dim = dim;
  p.rel_slots = rel_slots;

  auto glorot = [&rng](std::vector<double>& v, int fan_out, int fan_in) {
    v.resize(static_cast<std::size_t>(fan_out) * fan_in);
    const double b = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : v) x = rng.uniform(-b, b);
  };

  p.word_emb.resize(static_cast<std::size_t>(vocab) * word_dim);
  for (double& x : p.word_emb) x = rng.uniform(-0.1, 0.1);

  glorot(p.Wi, hidden, word_dim);
  glorot(p.Ui, hidden, hidden);
  p.bi.assign(hidden, 0.0);
  glorot(p.Wf, hidden, word_dim);
  glorot(p.Uf, hidden, hidden);
  p.bf.assign(hidden, 1.0);  // forget-gate bias starts open
  glorot(p.Wo, hidden, word_dim);
  glorot(p.Uo, hidden, hidden);
  p.bo.assign(hidden, 0.0);
  glorot(p.Wg, hidden, word_dim);
  glorot(p.Ug, hidden, hidden);
  p.bg.assign(hidden, 0.0);

  glorot(p.Wfv, mlp_hidden, dim);
  glorot(p.Wfh, mlp_hidden, hidden);
  p.b1.assign(mlp_hidden, 0.0);
  glorot(p.uf, 1, mlp_hidden);
  p.b2.assign(1, 0.0);
  glorot(p.wrel, rel_slots, hidden);
  return p;
}

std::vector<std::pair<const char*, std::span<double>>> QAModelParams::segments() {
  return {{"word_emb", word_emb}, {"Wi", Wi}, {"Ui", Ui}, {"bi", bi}, {"Wf", Wf},
          {"Uf", Uf},             {"bf", bf}, {"Wo", Wo}, {"Uo", Uo}, {"bo", bo},
          {"Wg", Wg},             {"Ug", Ug}, {"bg", bg}, {"Wfv", Wfv}, {"Wfh", Wfh},
          {"b1", b1},             {"uf", uf}, {"b2", b2}, {"wrel", wrel}};
}

std::vector<std::pair<const char*, std::span<const double>>> QAModelParams::segments() const {
  auto& self = const_cast<QAModelParams&>(*this);
  std::vector<std::pair<const char*, std::span<const double>>> out;
  for (auto& [name, span] : self.segments()) out.emplace_back(name, span);
  return out;
}

std::size_t QAModelParams::num_params() const {
  std::size_t n = 0;
  for (const auto& [name, seg] : segments()) n += seg.size();
  return n;
}

std::uint64_t QAModelParams::checksum() const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const auto& [name, seg] : segments()) {
    for (double x : seg) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffull;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

void QAModelParams::save(const std::filesystem::path& file, const Vocabulary& vocab_obj,
                         const std::string& config_json) const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["config"] = nlohmann::json::parse(config_json);
  doc["dims"] = {{"vocab", vocab},         {"word_dim", word_dim}, {"hidden", hidden},
                 {"mlp_hidden", mlp_hidden}, {"dim", dim},          {"rel_slots", rel_slots}};
  doc["vocabulary"] = vocab_obj.tokens();
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, seg] : segments())
    params[name] = std::vector<double>(seg.begin(), seg.end());
  doc["params"] = std::move(params);
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << doc.dump(1) << '\n';
}

std::pair<QAModelParams, Vocabulary> QAModelParams::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported QA checkpoint version");
  QAModelParams p;
  const auto& dims = doc.at("dims");
  p.vocab = dims.at("vocab").get<int>();
  p.word_dim = dims.at("word_dim").get<int>();
  p.hidden = dims.at("hidden").get<int>();
  p.mlp_hidden = dims.at("mlp_hidden").get<int>();
  p.dim = dims.at("dim").get<int>();
  p.rel_slots = dims.at("rel_slots").get<int>();
  const auto& params = doc.at("params");
  auto get = [&params](const char* name) { return params.at(name).get<std::vector<double>>(); };
  p.word_emb = get("word_emb");
  p.Wi = get("Wi"); p.Ui = get("Ui"); p.bi = get("bi");
  p.Wf = get("Wf"); p.Uf = get("Uf"); p.bf = get("bf");
  p.Wo = get("Wo"); p.Uo = get("Uo"); p.bo = get("bo");
  p.Wg = get("Wg"); p.Ug = get("Ug"); p.bg = get("bg");
  p.Wfv = get("Wfv"); p.Wfh = get("Wfh"); p.b1 = get("b1");
  p.uf = get("uf"); p.b2 = get("b2"); p.wrel = get("wrel");
  Vocabulary vocab =
      Vocabulary::from_token_list(doc.at("vocabulary").get<std::vector<std::string>>());
  return {std::move(p), std::move(vocab)};
}

// ---- reference forward ----------------------------------------------------

std::vector<std::vector<double>> encode(const QAModelParams& p, std::span<const int> token_ids) {
  if (token_ids.empty()) throw std::invalid_argument("encode: empty token sequence");
  const int H = p.hidden;
  const int dw = p.word_dim;
  std::vector<std::vector<double>> hs;
  hs.reserve(token_ids.size());
  std::vector<double> h(H, 0.0), c(H, 0.0);
  std::vector<double> zi(H), zf(H), zo(H), zg(H);
  for (int tok : token_ids) {
    std::span<const double> x(p.word_emb.data() + static_cast<std::size_t>(tok) * dw, dw);
    std::copy(p.bi.begin(), p.bi.end(), zi.begin());
    matvec_into(p.Wi, x, zi, true);
    matvec_into(p.Ui, h, zi, true);
    std::copy(p.bf.begin(), p.bf.end(), zf.begin());
    matvec_into(p.Wf, x, zf, true);
    matvec_into(p.Uf, h, zf, true);
    std::copy(p.bo.begin(), p.bo.end(), zo.begin());
    matvec_into(p.Wo, x, zo, true);
    matvec_into(p.Uo, h, zo, true);
    std::copy(p.bg.begin(), p.bg.end(), zg.begin());
    matvec_into(p.Wg, x, zg, true);
    matvec_into(p.Ug, h, zg, true);
    for (int i = 0; i < H; ++i) {
      c[i] = sigmoid(zf[i]) * c[i] + sigmoid(zi[i]) * std::tanh(zg[i]);
      h[i] = sigmoid(zo[i]) * std::tanh(c[i]);
    }
    hs.push_back(h);
  }
  return hs;
}

std::vector<double> entity_attention(const QAModelParams& p, std::span<const double> v_e,
                                     const std::vector<std::vector<double>>& h_seq) {
  const int T = static_cast<int>(h_seq.size());
  const int L = p.mlp_hidden;
  std::vector<double> base(L, 0.0);
  matvec_into(p.Wfv, v_e, base, false);
  std::vector<double> logits(T);
  std::vector<double> pre(L);
  for (int t = 0; t < T; ++t) {
    std::copy(base.begin(), base.end(), pre.begin());
    matvec_into(p.Wfh, h_seq[t], pre, true);
    double s = p.b2[0];
    for (int i = 0; i < L; ++i) {
      const double r = pre[i] + p.b1[i];
      s += p.uf[i] * (r >= 0.0 ? r : 0.0);
    }
    logits[t] = s;
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  std::vector<double> out(T);
  for (int t = 0; t < T; ++t) {
    out[t] = std::exp(logits[t] - mx);
    z += out[t];
  }
  for (double& v : out) v /= z;
  return out;
}

std::vector<double> context_vector(std::span<const double> p_e,
                                   const std::vector<std::vector<double>>& h_seq) {
  if (p_e.size() != h_seq.size())
    throw std::invalid_argument("context_vector: attention/sequence length mismatch");
  std::vector<double> o(h_seq.empty() ? 0 : h_seq[0].size(), 0.0);
  for (std::size_t t = 0; t < h_seq.size(); ++t)
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += p_e[t] * h_seq[t][i];
  return o;
}

std::vector<double> relation_weights(const QAModelParams& p, std::span<const double> o_e) {
  std::vector<double> alpha(p.rel_slots, 0.0);
  for (int r = 0; r < p.rel_slots; ++r) {
    double s = 0.0;
    const double* row = p.wrel.data() + static_cast<std::size_t>(r) * p.hidden;
    for (int i = 0; i < p.hidden; ++i) s += row[i] * o_e[i];
    alpha[r] = s >= 0.0 ? s : 0.0;
  }
  return alpha;
}

AttentionTrace compute_trace(const QAModelParams& p, const EmbeddingSet& emb,
                             const Vocabulary& vocab, const QAExample& ex) {
  std::vector<int> ids;
  ids.reserve(ex.tokens.size());
  for (const std::string& t : ex.tokens) ids.push_back(vocab.id(t));
  const auto h_seq = encode(p, ids);

  AttentionTrace trace;
  for (int e : ex.entities) {
    const auto v_e = emb.entity_vec(e);
    auto att = entity_attention(p, v_e, h_seq);
    auto o_e = context_vector(att, h_seq);
    auto alpha = relation_weights(p, o_e);
    trace.contexts.push_back(weighted_context(emb, e, alpha));
    trace.token_attention.push_back(std::move(att));
    trace.relation_weights.push_back(std::move(alpha));
  }
  return trace;
}

double question_score(const QAModelParams& p, const EmbeddingSet& emb, const Vocabulary& vocab,
                      const QAExample& ex, int candidate) {
  const AttentionTrace trace = compute_trace(p, emb, vocab, ex);
  return conjunction_score(emb.entity_vec(candidate), trace.contexts);
}

std::vector<std::pair<int, double>> answer(const QAModelParams& p, const EmbeddingSet& emb,
                                           const Vocabulary& vocab, const QAExample& ex,
                                           AttentionTrace* trace_out) {
  AttentionTrace trace = compute_trace(p, emb, vocab, ex);
  std::vector<std::pair<int, double>> scored;
  scored.reserve(emb.num_entities());
  for (int e = 0; e < emb.num_entities(); ++e)
    scored.emplace_back(e, conjunction_score(emb.entity_vec(e), trace.contexts));
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (trace_out) *trace_out = std::move(trace);
  return scored;
}

// ---- training graph -------------------------------------------------------

namespace {

struct SegLeaves {
  ad::Var word_emb, Wi, Ui, bi, Wf, Uf, bf, Wo, Uo, bo, Wg, Ug, bg;
  ad::Var Wfv, Wfh, b1, uf, b2, wrel;
  std::vector<ad::Var> all;
};

SegLeaves bind_segments(ad::Tape& tape, const QAModelParams& p) {
  SegLeaves s;
  ad::Var* slots[] = {&s.word_emb, &s.Wi, &s.Ui, &s.bi, &s.Wf, &s.Uf, &s.bf,
                      &s.Wo,       &s.Uo, &s.bo, &s.Wg, &s.Ug, &s.bg, &s.Wfv,
                      &s.Wfh,      &s.b1, &s.uf, &s.b2, &s.wrel};
  int i = 0;
  for (const auto& [name, seg] : p.segments()) {
    *slots[i] = tape.leaf(seg);
    s.all.push_back(*slots[i]);
    ++i;
  }
  return s;
}

struct ExampleGraph {
  std::vector<ad::Var> alpha_scalars;  // all alphas, all entities (for the l1 term)
  std::vector<ad::Var> ctx_mean, ctx_inv_var, ctx_logdet;
};

}  // namespace

QALossGraph build_qa_loss(ad::Tape& tape, const QAModelParams& p, const EmbeddingSet& emb,
                          const std::vector<const QAExample*>& batch,
                          const std::vector<std::vector<int>>& token_ids,
                          const std::vector<int>& chosen_answers,
                          const std::vector<std::vector<int>>& negatives, const QAConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("qa_loss: empty batch");
  const int H = p.hidden;
  const int dw = p.word_dim;
  const int L = p.mlp_hidden;
  const int d = p.dim;
  const int S = p.rel_slots;

  SegLeaves segs = bind_segments(tape, p);

  // frozen embedding enters as constants
  const ad::Var ent_const = tape.leaf(emb.entity_table());
  const ad::Var delta_const = tape.leaf(emb.delta_table());
  std::vector<ad::Var> var_consts(S);
  for (int s = 0; s < S; ++s) var_consts[s] = tape.leaf(emb.variance_slot(s));

  std::vector<ad::Var> example_terms;
  example_terms.reserve(batch.size());
  std::vector<ad::Var> l1_terms;
  l1_terms.reserve(batch.size());

  for (std::size_t bi_ = 0; bi_ < batch.size(); ++bi_) {
    const QAExample& ex = *batch[bi_];
    const std::vector<int>& ids = token_ids[bi_];
    const int T = static_cast<int>(ids.size());

    // LSTM over word embeddings
    std::vector<ad::Var> hs(T);
    ad::Var h = tape.zeros(H);
    ad::Var c = tape.zeros(H);
    for (int t = 0; t < T; ++t) {
      const ad::Var x = tape.gather_row(segs.word_emb, dw, ids[t]);
      const ad::Var zi = tape.add(
          tape.add(tape.matvec(segs.Wi, x, H, dw), tape.matvec(segs.Ui, h, H, H)), segs.bi);
      const ad::Var zf = tape.add(
          tape.add(tape.matvec(segs.Wf, x, H, dw), tape.matvec(segs.Uf, h, H, H)), segs.bf);
      const ad::Var zo = tape.add(
          tape.add(tape.matvec(segs.Wo, x, H, dw), tape.matvec(segs.Uo, h, H, H)), segs.bo);
      const ad::Var zg = tape.add(
          tape.add(tape.matvec(segs.Wg, x, H, dw), tape.matvec(segs.Ug, h, H, H)), segs.bg);
      c = tape.add(tape.mul(tape.sigmoid(zf), c), tape.mul(tape.sigmoid(zi), tape.tanh(zg)));
      h = tape.mul(tape.sigmoid(zo), tape.tanh(c));
      hs[t] = h;
    }

    // attention MLP pieces shared across entities
    std::vector<ad::Var> u_t(T);
    for (int t = 0; t < T; ++t) u_t[t] = tape.matvec(segs.Wfh, hs[t], L, H);

    ExampleGraph g;
    for (int e : ex.entities) {
      const ad::Var v_e = tape.gather_row(ent_const, d, e);
      const ad::Var base = tape.matvec(segs.Wfv, v_e, L, d);
      std::vector<ad::Var> logits(T);
      for (int t = 0; t < T; ++t) {
        const ad::Var pre = tape.relu(tape.add(tape.add(base, u_t[t]), segs.b1));
        logits[t] = tape.add(tape.dot(segs.uf, pre), segs.b2);
      }
      const ad::Var att = tape.softmax(tape.concat(logits));
      ad::Var o_e{};
      for (int t = 0; t < T; ++t) {
        const ad::Var term = tape.scale_by(hs[t], tape.index(att, t));
        o_e = t == 0 ? term : tape.add(o_e, term);
      }

      ad::Var mean = v_e;
      ad::Var var{};
      for (int s = 0; s < S; ++s) {
        const ad::Var alpha = tape.relu(tape.dot(tape.gather_row(segs.wrel, H, s), o_e));
        g.alpha_scalars.push_back(alpha);
        mean = tape.add(mean, tape.scale_by(tape.gather_row(delta_const, d, s), alpha));
        const ad::Var vterm = tape.scale_by(var_consts[s], tape.square(alpha));
        var = s == 0 ? vterm : tape.add(var, vterm);
      }
      var = tape.add_const(var, emb.eps());
      g.ctx_mean.push_back(mean);
      g.ctx_inv_var.push_back(tape.reciprocal(var));
      g.ctx_logdet.push_back(tape.sum(tape.log(var)));
    }

    auto score = [&](int cand) {
      const ad::Var vc = tape.gather_row(ent_const, d, cand);
      ad::Var total{};
      for (std::size_t e = 0; e < g.ctx_mean.size(); ++e) {
        const ad::Var quad =
            tape.dot(tape.square(tape.sub(vc, g.ctx_mean[e])), g.ctx_inv_var[e]);
        const ad::Var se =
            tape.scale(tape.add_const(tape.add(quad, g.ctx_logdet[e]), kLog2Pi * d), -0.5);
        total = e == 0 ? se : tape.add(total, se);
      }
      return total;
    };

    const ad::Var pos = score(chosen_answers[bi_]);
    std::vector<ad::Var> hinges;
    hinges.reserve(negatives[bi_].size());
    for (int neg : negatives[bi_])
      hinges.push_back(tape.relu(tape.add_const(tape.sub(score(neg), pos), cfg.margin)));
    example_terms.push_back(tape.scale(tape.sum(tape.concat(hinges)),
                                       1.0 / static_cast<double>(hinges.size())));
    l1_terms.push_back(tape.sum(tape.concat(g.alpha_scalars)));
  }

  QALossGraph out;
  out.leaves = segs.all;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  out.hinge_mean = tape.scale(tape.sum(tape.concat(example_terms)), inv_b);
  out.penalty = tape.scale(tape.sum(tape.concat(l1_terms)), cfg.nu * inv_b);

  ad::Var reg{};
  bool first = true;
  int seg_index = 0;
  for (const ad::Var& leaf : segs.all) {
    const bool is_word_emb = seg_index == 0;
    ++seg_index;
    if (is_word_emb && !cfg.reg_word_emb) continue;
    const ad::Var term = tape.sum(tape.square(leaf));
    reg = first ? term : tape.add(reg, term);
    first = false;
  }
  out.reg = reg;
  out.loss = tape.add(tape.add(out.hinge_mean, out.penalty), tape.scale(out.reg, cfg.lambda));
  return out;
}

QATrainResult train_qa(const std::vector<QAExample>& train, const EmbeddingSet& emb,
                       const Vocabulary& vocab, const QAConfig& cfg,
                       const std::function<double(const QAModelParams&)>& validate) {
  if (train.empty()) throw std::invalid_argument("train_qa: empty training set");
  Rng rng(cfg.seed);
  QAModelParams params = QAModelParams::init(vocab.size(), cfg.word_dim, cfg.hidden,
                                             cfg.mlp_hidden, emb.dim(),
                                             emb.num_relation_slots(), rng);

  // cache token ids; drop degenerate examples
  std::vector<const QAExample*> usable;
  std::vector<std::vector<int>> ids_cache;
  for (const QAExample& ex : train) {
    if (static_cast<int>(ex.answers.size()) >= emb.num_entities()) continue;
    usable.push_back(&ex);
    std::vector<int> ids;
    ids.reserve(ex.tokens.size());
    for (const std::string& t : ex.tokens) ids.push_back(vocab.id(t));
    ids_cache.push_back(std::move(ids));
  }
  if (usable.size() < train.size())
    std::cerr << "warning: skipped " << (train.size() - usable.size())
              << " degenerate examples\n";

  std::vector<Adam> adams;
  for (auto& [name, seg] : params.segments()) adams.emplace_back(seg.size(), cfg.adam);

  std::vector<std::size_t> order(usable.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<TrainRecord> records;
  double best_h1 = -1.0;
  QAModelParams best;
  bool have_best = false;

  ad::Tape tape;
  std::vector<const QAExample*> batch;
  std::vector<std::vector<int>> batch_ids, batch_negs;
  std::vector<int> batch_answers;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double hinge_sum = 0.0, reg_sum = 0.0;
    std::size_t seen = 0, batches = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      batch_ids.clear();
      batch_negs.clear();
      batch_answers.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const QAExample& ex = *usable[order[i]];
        // one sampled true answer per epoch; negatives uniform over E \ A(q)
        batch_answers.push_back(ex.answers[rng.index(ex.answers.size())]);
        std::vector<int> negs;
        negs.reserve(cfg.negatives);
        while (static_cast<int>(negs.size()) < cfg.negatives) {
          const int cand = static_cast<int>(rng.index(emb.num_entities()));
          if (!std::binary_search(ex.answers.begin(), ex.answers.end(), cand))
            negs.push_back(cand);
        }
        batch.push_back(&ex);
        batch_ids.push_back(ids_cache[order[i]]);
        batch_negs.push_back(std::move(negs));
      }
      if (batch.empty()) continue;

      tape.reset();
      QALossGraph g = build_qa_loss(tape, params, emb, batch, batch_ids, batch_answers,
                                    batch_negs, cfg);
      const double loss_val = tape.scalar(g.loss);
      if (!std::isfinite(loss_val))
        throw std::runtime_error("train_qa: non-finite loss at epoch " + std::to_string(epoch));
      tape.backward(g.loss);

      hinge_sum += tape.scalar(g.hinge_mean) * static_cast<double>(batch.size());
      reg_sum += tape.scalar(g.reg);
      seen += batch.size();
      ++batches;

      auto segs = params.segments();
      for (std::size_t s = 0; s < segs.size(); ++s)
        adams[s].step(segs[s].second, tape.grad(g.leaves[s]));
    }

    TrainRecord rec;
    rec.epoch = epoch;
    rec.hinge = seen ? hinge_sum / static_cast<double>(seen) : 0.0;
    rec.reg = batches ? reg_sum / static_cast<double>(batches) : 0.0;
    if (validate && cfg.eval_every > 0 &&
        ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs)) {
      rec.val_h1 = validate(params);
      if (rec.val_h1 > best_h1) {
        best_h1 = rec.val_h1;
        best = params;
        have_best = true;
      }
    }
    records.push_back(rec);
  }

  QATrainResult result;
  result.params = have_best ? std::move(best) : std::move(params);
  result.records = std::move(records);
  return result;
}

}  // namespace transgauss
