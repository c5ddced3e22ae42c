#include "transgauss/embed_train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>

namespace transgauss {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

double hinge(double margin, double pos_score, double neg_score) {
  return std::max(0.0, margin - pos_score + neg_score);
}

std::vector<int> sample_negatives(const KnowledgeBase& kb, const EmbedExample& ex, int k,
                                  Rng& rng) {
  const int n = kb.num_entities();
  if (static_cast<int>(ex.answers.size()) >= n) return {};
  std::vector<int> out;
  out.reserve(k);
  while (static_cast<int>(out.size()) < k) {
    const int cand = static_cast<int>(rng.index(n));
    if (!std::binary_search(ex.answers.begin(), ex.answers.end(), cand)) out.push_back(cand);
  }
  return out;
}

EmbedLossGraph build_embedding_loss(ad::Tape& tape, const EmbeddingSet& emb, int trained_slots,
                                    const std::vector<const EmbedExample*>& batch,
                                    const std::vector<std::vector<int>>& negatives,
                                    const EmbedTrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("embedding_loss: empty batch");
  if (batch.size() != negatives.size())
    throw std::invalid_argument("embedding_loss: negatives must match batch size");
  const int d = emb.dim();
  const bool unit_var = cfg.model == ModelKind::TransE;

  EmbedLossGraph g;
  g.entities = tape.leaf(emb.entity_table());
  g.deltas = tape.leaf(emb.delta_table().first(static_cast<std::size_t>(trained_slots) * d));
  if (!unit_var)
    g.m_raws = tape.leaf(emb.m_raw_table().first(static_cast<std::size_t>(trained_slots) * d));

  // per-slot variance nodes, built once per tape
  std::vector<ad::Var> var_nodes(trained_slots, ad::Var{});
  auto slot_var = [&](int slot) {
    if (!var_nodes[slot].valid())
      var_nodes[slot] =
          tape.add_const(tape.elu(tape.gather_row(g.m_raws, d, slot)), 1.0 + emb.eps());
    return var_nodes[slot];
  };

  std::vector<ad::Var> example_hinges;
  example_hinges.reserve(batch.size());
  std::vector<ad::Var> hinges;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EmbedExample& ex = *batch[i];
    const std::vector<int>& negs = negatives[i];
    if (negs.empty()) throw std::invalid_argument("embedding_loss: example without negatives");

    ad::Var mean = tape.gather_row(g.entities, d, ex.s);
    ad::Var var{};
    for (const RelationId& step : ex.path.steps) {
      const int slot = emb.slot(step);
      if (slot >= trained_slots)
        throw std::invalid_argument("embedding_loss: example uses untrained relation slot");
      mean = tape.add(mean, tape.gather_row(g.deltas, d, slot));
      if (!unit_var) var = var.valid() ? tape.add(var, slot_var(slot)) : slot_var(slot);
    }

    ad::Var inv_var{}, logdet{};
    if (!unit_var) {
      inv_var = tape.reciprocal(var);
      logdet = tape.sum(tape.log(var));
    }
    auto score = [&](int cand) {
      ad::Var diff2 = tape.square(tape.sub(tape.gather_row(g.entities, d, cand), mean));
      ad::Var quad = unit_var ? tape.sum(diff2) : tape.dot(diff2, inv_var);
      ad::Var inner = unit_var ? quad : tape.add(quad, logdet);
      return tape.scale(tape.add_const(inner, kLog2Pi * d), -0.5);
    };

    const ad::Var pos = score(ex.o);
    hinges.clear();
    for (int neg : negs)
      hinges.push_back(tape.relu(tape.add_const(tape.sub(score(neg), pos), cfg.margin)));
    example_hinges.push_back(
        tape.scale(tape.sum(tape.concat(hinges)), 1.0 / static_cast<double>(negs.size())));
  }

  g.hinge_mean = tape.scale(tape.sum(tape.concat(example_hinges)),
                            1.0 / static_cast<double>(batch.size()));
  ad::Var reg = tape.add(tape.sum(tape.square(g.entities)), tape.sum(tape.square(g.deltas)));
  if (!unit_var) reg = tape.add(reg, tape.sum(tape.square(g.m_raws)));
  g.reg = reg;
  g.loss = tape.add(g.hinge_mean, tape.scale(g.reg, cfg.lambda));
  return g;
}

std::vector<EmbedExample> make_training_examples(const KnowledgeBase& kb,
                                                 const EmbedTrainConfig& cfg) {
  std::vector<EmbedExample> out;
  for (const Triplet& t : kb.triplets()) {
    EmbedExample ex;
    ex.s = t.s;
    ex.path.steps = {RelationId{t.r, false}};
    ex.o = t.o;
    const auto& objs = kb.objects(t.s, RelationId{t.r, false});
    ex.answers.assign(objs.begin(), objs.end());
    out.push_back(std::move(ex));
  }
  if (cfg.mode == TrainMode::Comp) {
    const std::uint64_t path_seed = cfg.seed ^ 0x9E3779B97F4A7C15ull;
    for (PathSample& ps : kb.sample_paths(cfg.path_count, cfg.max_path_len, path_seed)) {
      EmbedExample ex;
      ex.s = ps.s;
      ex.path = std::move(ps.path);
      ex.o = ps.o;
      ex.answers = kb.traverse(ex.s, ex.path);
      out.push_back(std::move(ex));
    }
  }
  // drop degenerate examples whose answers cover every entity
  std::size_t kept = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (static_cast<int>(out[i].answers.size()) < kb.num_entities()) {
      if (kept != i) out[kept] = std::move(out[i]);
      ++kept;
    }
  }
  if (kept < out.size()) {
    std::cerr << "warning: skipped " << (out.size() - kept)
              << " examples with no incorrect objects\n";
    out.resize(kept);
  }
  return out;
}

EmbedTrainResult train_embeddings(const KnowledgeBase& kb, const EmbedTrainConfig& cfg,
                                  const std::function<double(const EmbeddingSet&)>& validate) {
  if (cfg.margin <= 0.0 || cfg.negatives < 1 || cfg.adam.lr <= 0.0 || cfg.dim < 1)
    throw std::invalid_argument("train_embeddings: invalid configuration");

  std::vector<EmbedExample> examples = make_training_examples(kb, cfg);
  if (examples.empty()) throw std::invalid_argument("train_embeddings: no training examples");

  const int d = cfg.dim;
  const int trained_slots =
      cfg.mode == TrainMode::Single ? kb.num_relations() : 2 * kb.num_relations();
  const bool unit_var = cfg.model == ModelKind::TransE;

  EmbeddingSet emb(kb.num_entities(), kb.num_relations(), d, cfg.eps);
  emb.set_unit_variance(unit_var);
  {
    std::vector<std::string> ent_names, rel_names;
    for (int e = 0; e < kb.num_entities(); ++e) ent_names.push_back(kb.entity_name(e));
    for (int r = 0; r < kb.num_relations(); ++r) rel_names.push_back(kb.relation_name(r));
    emb.set_names(std::move(ent_names), std::move(rel_names));
  }

  Rng rng(cfg.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(d));
  for (double& x : emb.entity_table()) x = rng.uniform(-bound, bound);
  for (int s = 0; s < trained_slots; ++s)
    for (double& x : emb.delta(s)) x = rng.uniform(-bound, bound);
  // m_raw starts at 0: variance ~ 1, the translation-only geometry

  const std::size_t ent_n = emb.entity_table().size();
  const std::size_t del_n = static_cast<std::size_t>(trained_slots) * d;
  Adam adam_ent(ent_n, cfg.adam);
  Adam adam_del(del_n, cfg.adam);
  Adam adam_m(unit_var ? 0 : del_n, cfg.adam);

  auto finalized = [&](const EmbeddingSet& src) {
    EmbeddingSet copy = src;
    if (cfg.mode == TrainMode::Single) copy.materialize_inverses_from_base();
    return copy;
  };

  std::vector<TrainRecord> records;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_h1 = -1.0;
  EmbeddingSet best;
  bool have_best = false;

  ad::Tape tape;
  std::vector<const EmbedExample*> batch;
  std::vector<std::vector<int>> negatives;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double hinge_sum = 0.0;
    double reg_sum = 0.0;
    std::size_t seen = 0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      negatives.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const EmbedExample& ex = examples[order[i]];
        std::vector<int> negs = sample_negatives(kb, ex, cfg.negatives, rng);
        if (negs.empty()) continue;
        batch.push_back(&ex);
        negatives.push_back(std::move(negs));
      }
      if (batch.empty()) continue;

      tape.reset();
      EmbedLossGraph g = build_embedding_loss(tape, emb, trained_slots, batch, negatives, cfg);
      const double loss_val = tape.scalar(g.loss);
      if (!std::isfinite(loss_val))
        throw std::runtime_error("train_embeddings: non-finite loss at epoch " +
                                 std::to_string(epoch));
      tape.backward(g.loss);

      hinge_sum += tape.scalar(g.hinge_mean) * static_cast<double>(batch.size());
      reg_sum += tape.scalar(g.reg);
      seen += batch.size();
      ++batches;

      adam_ent.step(emb.entity_table(), tape.grad(g.entities));
      adam_del.step(emb.delta_table().first(del_n), tape.grad(g.deltas));
      if (!unit_var) adam_m.step(emb.m_raw_table().first(del_n), tape.grad(g.m_raws));
    }

    TrainRecord rec;
    rec.epoch = epoch;
    rec.hinge = seen ? hinge_sum / static_cast<double>(seen) : 0.0;
    rec.reg = batches ? reg_sum / static_cast<double>(batches) : 0.0;
    if (validate && cfg.eval_every > 0 &&
        ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs)) {
      rec.val_h1 = validate(finalized(emb));
      if (rec.val_h1 > best_h1) {
        best_h1 = rec.val_h1;
        best = emb;
        have_best = true;
      }
    }
    records.push_back(rec);
  }

  EmbedTrainResult result;
  result.emb = finalized(have_best ? best : emb);
  result.records = std::move(records);
  return result;
}

}  // namespace transgauss
