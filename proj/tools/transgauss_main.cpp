// transgauss: dataset generation, embedding training, question answering and
// evaluation for the Gaussian-attention knowledge-base toolkit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "transgauss/datagen.hpp"
#include "transgauss/embed_train.hpp"
#include "transgauss/eval.hpp"
#include "transgauss/gauss.hpp"
#include "transgauss/qa.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace transgauss;

#ifndef TG_VERSION
#define TG_VERSION "0.1.0"
#endif

namespace {

void write_manifest(const fs::path& dir, const std::string& command, const json& flags,
                    std::uint64_t seed) {
  fs::create_directories(dir);
  json m;
  m["command"] = command;
  m["flags"] = flags;
  m["seed"] = seed;
  m["artifact_version"] = TG_VERSION;
  std::ofstream out(dir / "manifest.json");
  out << m.dump(1) << '\n';
}

void write_train_log(const fs::path& file, const std::vector<TrainRecord>& records) {
  std::ofstream out(file);
  out << "epoch,loss,reg,val_h1\n";
  out << std::setprecision(17);
  for (const TrainRecord& r : records) {
    out << r.epoch << ',' << r.hinge << ',' << r.reg << ',';
    if (r.val_h1 >= 0.0) out << r.val_h1;
    out << '\n';
  }
}

Vocabulary dataset_vocabulary(const LoadedDataset& data) {
  std::vector<std::string> tokens;
  for (const auto* list : {&data.path_examples, &data.conj_examples})
    for (const QAExample& ex : *list)
      tokens.insert(tokens.end(), ex.tokens.begin(), ex.tokens.end());
  return Vocabulary(tokens);
}

json embed_config_json(const EmbedTrainConfig& cfg) {
  return {{"dim", cfg.dim},
          {"margin", cfg.margin},
          {"lambda", cfg.lambda},
          {"negatives", cfg.negatives},
          {"lr", cfg.adam.lr},
          {"epochs", cfg.epochs},
          {"batch", cfg.batch_size},
          {"mode", cfg.mode == TrainMode::Comp ? "comp" : "single"},
          {"model", cfg.model == ModelKind::TransE ? "transe" : "transgaussian"},
          {"paths", cfg.path_count},
          {"max_len", cfg.max_path_len},
          {"seed", cfg.seed},
          {"eps", cfg.eps},
          {"eval_every", cfg.eval_every}};
}

json qa_config_json(const QAConfig& cfg) {
  return {{"word_dim", cfg.word_dim},
          {"hidden", cfg.hidden},
          {"mlp_hidden", cfg.mlp_hidden},
          {"margin", cfg.margin},
          {"nu", cfg.nu},
          {"lambda", cfg.lambda},
          {"reg_word_emb", cfg.reg_word_emb},
          {"negatives", cfg.negatives},
          {"lr", cfg.adam.lr},
          {"epochs", cfg.epochs},
          {"batch", cfg.batch_size},
          {"seed", cfg.seed},
          {"eval_every", cfg.eval_every}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-attention knowledge-base embedding and question answering"};
  app.require_subcommand(1);

  // ---- gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic soccer KB and questions");
  std::string gen_preset = "worldcup2014";
  std::uint64_t gen_seed = 7;
  std::string gen_out = "data";
  Schema custom = worldcup2014_schema();
  gen->add_option("--preset", gen_preset, "worldcup2014 | toy | custom")
      ->check(CLI::IsMember({"worldcup2014", "toy", "custom"}));
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--players", custom.players, "custom preset: player count");
  gen->add_option("--clubs", custom.clubs, "custom preset: club count");
  gen->add_option("--countries", custom.countries, "custom preset: country count");
  gen->add_option("--numbers", custom.numbers, "custom preset: number count");
  gen->add_option("--positions", custom.positions, "custom preset: position count");
  gen->add_option("--domestic-fraction", custom.domestic_club_fraction,
                  "probability a player's club is in the player's country");

  // ---- train-embed
  auto* te = app.add_subcommand("train-embed", "train TransGaussian/TransE embeddings");
  std::string te_data, te_out = "embed";
  std::string te_mode = "comp", te_model = "transgaussian";
  EmbedTrainConfig ecfg;
  te->add_option("--data", te_data, "dataset directory from gen-data")->required();
  te->add_option("--out", te_out, "output directory");
  te->add_option("--dim", ecfg.dim, "embedding dimension");
  te->add_option("--margin", ecfg.margin, "ranking margin");
  te->add_option("--lambda", ecfg.lambda, "l2 regularization weight");
  te->add_option("--negatives", ecfg.negatives, "negative samples per positive");
  te->add_option("--lr", ecfg.adam.lr, "Adam learning rate");
  te->add_option("--epochs", ecfg.epochs, "training epochs");
  te->add_option("--batch", ecfg.batch_size, "batch size");
  te->add_option("--mode", te_mode, "single | comp")->check(CLI::IsMember({"single", "comp"}));
  te->add_option("--model", te_model, "transe | transgaussian")
      ->check(CLI::IsMember({"transe", "transgaussian"}));
  te->add_option("--paths", ecfg.path_count, "sampled path count (comp mode)");
  te->add_option("--max-len", ecfg.max_path_len, "max sampled path length")
      ->check(CLI::IsMember({1, 2}));
  te->add_option("--seed", ecfg.seed, "training seed");
  te->add_option("--eval-every", ecfg.eval_every, "validation cadence (epochs, 0 = off)");

  // ---- train-qa
  auto* tq = app.add_subcommand("train-qa", "train the question-answering model");
  std::string tq_data, tq_embed, tq_out = "qa";
  QAConfig qcfg;
  bool no_reg_word_emb = false;
  tq->add_option("--data", tq_data, "dataset directory")->required();
  tq->add_option("--embed", tq_embed, "embedding checkpoint")->required();
  tq->add_option("--out", tq_out, "output directory");
  tq->add_option("--word-dim", qcfg.word_dim, "word embedding dimension");
  tq->add_option("--hidden", qcfg.hidden, "LSTM hidden size");
  tq->add_option("--mlp-hidden", qcfg.mlp_hidden, "attention MLP hidden size");
  tq->add_option("--margin", qcfg.margin, "ranking margin");
  tq->add_option("--nu", qcfg.nu, "l1 weight on relation weights");
  tq->add_option("--lambda", qcfg.lambda, "l2 weight on QA parameters");
  tq->add_flag("--no-reg-word-emb", no_reg_word_emb, "exclude word embeddings from the l2 term");
  tq->add_option("--negatives", qcfg.negatives, "negative samples per question");
  tq->add_option("--lr", qcfg.adam.lr, "Adam learning rate");
  tq->add_option("--epochs", qcfg.epochs, "training epochs");
  tq->add_option("--batch", qcfg.batch_size, "batch size");
  tq->add_option("--seed", qcfg.seed, "training seed");
  tq->add_option("--eval-every", qcfg.eval_every, "validation cadence (epochs, 0 = off)");

  // ---- eval
  auto* ev = app.add_subcommand("eval", "evaluate on a dataset split");
  std::string ev_data, ev_embed, ev_qa, ev_split = "test", ev_out = "eval";
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--embed", ev_embed, "embedding checkpoint")->required();
  ev->add_option("--qa", ev_qa, "QA checkpoint (omit for direct-embedding evaluation)");
  ev->add_option("--split", ev_split, "train | valid | test")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  ev->add_option("--out", ev_out, "output directory");

  // ---- answer
  auto* an = app.add_subcommand("answer", "answer one question with a trained model");
  std::string an_data, an_embed, an_qa, an_q, an_entities, an_out = "answer_out";
  int an_top = 10;
  an->add_option("--data", an_data, "dataset directory")->required();
  an->add_option("--embed", an_embed, "embedding checkpoint")->required();
  an->add_option("--qa", an_qa, "QA checkpoint")->required();
  an->add_option("--q", an_q, "question text")->required();
  an->add_option("--entities", an_entities, "comma-separated oracle entity names")->required();
  an->add_option("--top", an_top, "ranked entities to print");
  an->add_option("--out", an_out, "output directory");

  // ---- kbc
  auto* kc = app.add_subcommand("kbc", "held-out triplet classification");
  std::string kc_data, kc_out = "kbc";
  std::string kc_mode = "comp", kc_model = "transgaussian";
  double kc_holdout = 0.1;
  EmbedTrainConfig kcfg;
  kc->add_option("--data", kc_data, "dataset directory")->required();
  kc->add_option("--out", kc_out, "output directory");
  kc->add_option("--holdout", kc_holdout, "held-out triplet fraction");
  kc->add_option("--mode", kc_mode, "single | comp")->check(CLI::IsMember({"single", "comp"}));
  kc->add_option("--model", kc_model, "transe | transgaussian")
      ->check(CLI::IsMember({"transe", "transgaussian"}));
  kc->add_option("--dim", kcfg.dim, "embedding dimension");
  kc->add_option("--margin", kcfg.margin, "ranking margin");
  kc->add_option("--lambda", kcfg.lambda, "l2 regularization weight");
  kc->add_option("--negatives", kcfg.negatives, "negatives per positive");
  kc->add_option("--lr", kcfg.adam.lr, "Adam learning rate");
  kc->add_option("--epochs", kcfg.epochs, "training epochs");
  kc->add_option("--batch", kcfg.batch_size, "batch size");
  kc->add_option("--paths", kcfg.path_count, "sampled path count (comp mode)");
  kc->add_option("--max-len", kcfg.max_path_len, "max sampled path length");
  kc->add_option("--seed", kcfg.seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      GenConfig cfg;
      if (gen_preset == "worldcup2014")
        cfg.schema = worldcup2014_schema();
      else if (gen_preset == "toy")
        cfg.schema = toy_schema();
      else
        cfg.schema = custom;
      if (gen_preset == "custom") cfg.schema.squad_structure = false;
      cfg.seed = gen_seed;
      const GeneratedDataset data = generate_dataset(cfg);
      write_dataset(data, cfg, gen_out);
      write_manifest(gen_out, "gen-data", {{"preset", gen_preset}, {"out", gen_out}}, gen_seed);
      std::cout << "entities " << data.kb.num_entities() << ", relations "
                << data.kb.num_relations() << ", triplets " << data.kb.num_triplets()
                << ", path questions " << data.path_examples.size() << ", conj questions "
                << data.conj_examples.size() << '\n';
    }

    if (*te) {
      ecfg.mode = te_mode == "comp" ? TrainMode::Comp : TrainMode::Single;
      ecfg.model = te_model == "transe" ? ModelKind::TransE : ModelKind::TransGaussian;
      const LoadedDataset data = load_dataset(te_data);
      const std::vector<QAExample> valid = data.split_examples(1);
      auto validate = [&](const EmbeddingSet& emb) {
        return overall_h1(eval_embedding_direct(emb, data.kb, valid));
      };
      const EmbedTrainResult result = train_embeddings(data.kb, ecfg, validate);
      fs::create_directories(te_out);
      result.emb.save(fs::path(te_out) / "embedding.json", te_model,
                      embed_config_json(ecfg).dump());
      write_train_log(fs::path(te_out) / "train_log.csv", result.records);
      write_manifest(te_out, "train-embed", embed_config_json(ecfg), ecfg.seed);
      double final_h1 = -1.0;
      for (const auto& r : result.records)
        if (r.val_h1 >= 0.0) final_h1 = std::max(final_h1, r.val_h1);
      std::cout << "trained " << te_model << " (" << te_mode << "), best validation H@1 "
                << final_h1 << '\n';
    }

    if (*tq) {
      qcfg.reg_word_emb = !no_reg_word_emb;
      const LoadedDataset data = load_dataset(tq_data);
      const EmbeddingSet emb = EmbeddingSet::load(tq_embed).aligned_to(data.kb);
      const Vocabulary vocab = dataset_vocabulary(data);
      const std::vector<QAExample> train = data.split_examples(0);
      const std::vector<QAExample> valid = data.split_examples(1);
      auto validate = [&](const QAModelParams& p) {
        return overall_h1(eval_qa(p, emb, vocab, valid));
      };
      const QATrainResult result = train_qa(train, emb, vocab, qcfg, validate);
      fs::create_directories(tq_out);
      result.params.save(fs::path(tq_out) / "qa_model.json", vocab, qa_config_json(qcfg).dump());
      write_train_log(fs::path(tq_out) / "train_log.csv", result.records);
      write_manifest(tq_out, "train-qa", qa_config_json(qcfg), qcfg.seed);
      double best = -1.0;
      for (const auto& r : result.records) best = std::max(best, r.val_h1);
      std::cout << "trained qa model, best validation H@1 " << best << '\n';
    }

    if (*ev) {
      const LoadedDataset data = load_dataset(ev_data);
      const EmbeddingSet emb = EmbeddingSet::load(ev_embed).aligned_to(data.kb);
      const int split = ev_split == "train" ? 0 : ev_split == "valid" ? 1 : 2;
      const std::vector<QAExample> examples = data.split_examples(split);
      std::vector<RankResult> results;
      if (ev_qa.empty()) {
        results = eval_embedding_direct(emb, data.kb, examples);
      } else {
        auto [params, vocab] = QAModelParams::load(ev_qa);
        results = eval_qa(params, emb, vocab, examples);
      }
      const EvalReport report = aggregate(results);
      write_report(report, ev_out, "eval_report");
      write_manifest(ev_out, "eval",
                     {{"data", ev_data}, {"embed", ev_embed}, {"qa", ev_qa}, {"split", ev_split}},
                     0);
      std::cout << report_text(report);
    }

    if (*an) {
      const LoadedDataset data = load_dataset(an_data);
      const EmbeddingSet emb = EmbeddingSet::load(an_embed).aligned_to(data.kb);
      auto [params, vocab] = QAModelParams::load(an_qa);
      QAExample ex;
      ex.question = an_q;
      ex.tokens = tokenize(an_q);
      std::stringstream ss(an_entities);
      std::string name;
      while (std::getline(ss, name, ',')) ex.entities.push_back(data.kb.entity_id(name));
      if (ex.entities.empty()) throw std::runtime_error("answer: no entities given");

      AttentionTrace trace;
      const auto ranking = answer(params, emb, vocab, ex, &trace);

      json out;
      out["question"] = an_q;
      out["tokens"] = ex.tokens;
      json ents = json::array();
      for (int e : ex.entities) ents.push_back(data.kb.entity_name(e));
      out["entities"] = std::move(ents);
      json ranked = json::array();
      for (int i = 0; i < an_top && i < static_cast<int>(ranking.size()); ++i)
        ranked.push_back({{"entity", data.kb.entity_name(ranking[i].first)},
                          {"score", ranking[i].second}});
      out["ranking"] = std::move(ranked);
      json jtrace;
      jtrace["token_attention"] = trace.token_attention;
      json weights = json::array();
      for (std::size_t e = 0; e < trace.relation_weights.size(); ++e) {
        json w = json::object();
        for (int s = 0; s < emb.num_relation_slots(); ++s) {
          const int base = s % emb.num_base_relations();
          std::string rname = data.kb.relation_name(base);
          if (s >= emb.num_base_relations()) rname += "^-1";
          w[rname] = trace.relation_weights[e][s];
        }
        weights.push_back(std::move(w));
      }
      jtrace["relation_weights"] = std::move(weights);
      json ctxs = json::array();
      for (const DiagGaussian& g : trace.contexts)
        ctxs.push_back({{"mean", g.mean}, {"var", g.var}});
      jtrace["contexts"] = std::move(ctxs);
      out["trace"] = std::move(jtrace);

      fs::create_directories(an_out);
      std::ofstream f(fs::path(an_out) / "answer.json");
      f << out.dump(1) << '\n';
      write_manifest(an_out, "answer", {{"q", an_q}, {"entities", an_entities}}, 0);
      for (int i = 0; i < an_top && i < static_cast<int>(ranking.size()); ++i)
        std::cout << (i + 1) << ". " << data.kb.entity_name(ranking[i].first) << "  "
                  << ranking[i].second << '\n';
    }

    if (*kc) {
      kcfg.mode = kc_mode == "comp" ? TrainMode::Comp : TrainMode::Single;
      kcfg.model = kc_model == "transe" ? ModelKind::TransE : ModelKind::TransGaussian;
      const KnowledgeBase kb = KnowledgeBase::load_tsv(fs::path(kc_data) / "kb.tsv");
      const KbcTask task = make_kbc_task(kb, kc_holdout, kcfg.seed);
      const EmbedTrainResult trained = train_embeddings(task.train_kb, kcfg);
      const KbcThresholds thresholds = tune_kbc_thresholds(trained.emb, task.valid);
      const double accuracy = kbc_apply(trained.emb, task.test, thresholds);

      json out;
      out["model"] = kc_model;
      out["mode"] = kc_mode;
      out["holdout_fraction"] = kc_holdout;
      out["valid_pairs"] = task.valid.size();
      out["test_pairs"] = task.test.size();
      out["accuracy"] = accuracy;
      json th = json::object();
      for (const auto& [rel, theta] : thresholds.per_relation) th[kb.relation_name(rel)] = theta;
      out["thresholds"] = std::move(th);
      out["fallback_threshold"] = thresholds.fallback;
      fs::create_directories(kc_out);
      std::ofstream f(fs::path(kc_out) / "kbc_report.json");
      f << out.dump(1) << '\n';
      write_manifest(kc_out, "kbc", embed_config_json(kcfg), kcfg.seed);
      std::cout << "kbc accuracy (" << kc_model << ", " << kc_mode << "): " << accuracy << '\n';
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
