// evdag: nested/overlapping event detection over per-sentence relation
// graphs. Subcommands wire the library end to end: train, predict, evaluate,
// oracle, synth. Logs go to stderr, data to files or stdout.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evdag/embeddings.hpp"
#include "evdag/eval.hpp"
#include "evdag/kvconfig.hpp"
#include "evdag/model.hpp"
#include "evdag/pipeline.hpp"
#include "evdag/relations_io.hpp"
#include "evdag/standoff.hpp"
#include "evdag/synth.hpp"
#include "evdag/train.hpp"

namespace {

using Scalar = float; // runtime scalar; the model file is float32 either way

struct ResolvedTrainOptions {
  evdag::TrainConfig cfg;
  bool strict_stop = false;

  void echo() const {
    auto log = [](const std::string& k, const std::string& v) {
      std::cerr << "[config] " << k << " = " << v << "\n";
    };
    log("mini_batch_size", std::to_string(cfg.batch_size));
    log("word_embedding", std::to_string(cfg.model.word_dim));
    log("bilstm_word_embedding", std::to_string(cfg.model.encoder_dim));
    log("role_type_embedding", std::to_string(cfg.model.role_dim));
    log("trigger_argument_type_embedding", std::to_string(cfg.model.type_dim));
    log("action_embedding", std::to_string(cfg.model.action_dim));
    log("hidden_layer_size", std::to_string(cfg.model.hidden_dim));
    log("event_embedding", std::to_string(cfg.model.event_dim()));
    log("early_stopping_patience", std::to_string(cfg.patience));
    log("dropout", std::to_string(cfg.dropout));
    log("learning_rate", std::to_string(cfg.learning_rate));
    log("weight_decay_rate", std::to_string(cfg.weight_decay));
    log("action_score_threshold", std::to_string(cfg.beam.threshold));
    log("beam_size", std::to_string(cfg.beam.k));
    log("max_epochs", std::to_string(cfg.max_epochs));
    log("seed", std::to_string(cfg.seed));
    log("strict_stop", strict_stop ? "true" : "false");
  }
};

// Config file first, then flags; flags win. Unknown keys fail naming the key.
ResolvedTrainOptions resolve_train_config(const std::string& config_path) {
  ResolvedTrainOptions r;
  if (config_path.empty()) return r;
  evdag::KeyValueFile kv = evdag::KeyValueFile::load(config_path);
  kv.require_known_keys({"mini_batch_size", "word_embedding", "bilstm_word_embedding",
                         "role_type_embedding", "trigger_argument_type_embedding",
                         "early_stopping_patience", "dropout", "learning_rate",
                         "hidden_layer_size", "event_embedding", "action_score_threshold",
                         "beam_size", "action_embedding", "weight_decay_rate", "max_epochs",
                         "seed", "strict_stop"});
  auto& cfg = r.cfg;
  cfg.batch_size = (int)kv.get_int("mini_batch_size", cfg.batch_size);
  cfg.model.word_dim = (int)kv.get_int("word_embedding", cfg.model.word_dim);
  cfg.model.encoder_dim = (int)kv.get_int("bilstm_word_embedding", cfg.model.encoder_dim);
  cfg.model.role_dim = (int)kv.get_int("role_type_embedding", cfg.model.role_dim);
  cfg.model.type_dim =
      (int)kv.get_int("trigger_argument_type_embedding", cfg.model.type_dim);
  cfg.model.action_dim = (int)kv.get_int("action_embedding", cfg.model.action_dim);
  cfg.model.hidden_dim = (int)kv.get_int("hidden_layer_size", cfg.model.hidden_dim);
  cfg.patience = (int)kv.get_int("early_stopping_patience", cfg.patience);
  cfg.dropout = kv.get_double("dropout", cfg.dropout);
  cfg.learning_rate = kv.get_double("learning_rate", cfg.learning_rate);
  cfg.weight_decay = kv.get_double("weight_decay_rate", cfg.weight_decay);
  cfg.beam.threshold = kv.get_double("action_score_threshold", cfg.beam.threshold);
  cfg.beam.k = (int)kv.get_int("beam_size", cfg.beam.k);
  cfg.max_epochs = (int)kv.get_int("max_epochs", cfg.max_epochs);
  cfg.seed = (uint64_t)kv.get_int("seed", (long long)cfg.seed);
  r.strict_stop = kv.get_bool("strict_stop", false);
  if (kv.has("event_embedding")) {
    int ev = (int)kv.get_int("event_embedding", cfg.model.event_dim());
    if (ev != cfg.model.event_dim())
      evdag::fail(evdag::ErrorCode::Config,
                  "event_embedding " + std::to_string(ev) +
                      " conflicts with type+word dimensions " +
                      std::to_string(cfg.model.event_dim()));
  }
  return r;
}

evdag::StandoffCorpus load_corpus(const std::string& dir) {
  evdag::StandoffCorpus corpus = evdag::read_standoff(dir);
  for (const std::string& w : corpus.warnings) std::cerr << "[warn] " << w << "\n";
  return corpus;
}

std::map<std::string, std::vector<evdag::Relation>> load_relations(
    const std::string& path, const std::vector<evdag::Document>& docs) {
  if (path.empty()) return {};
  evdag::RelationsFile rf = evdag::read_relations_file(path, docs);
  for (const std::string& r : rf.rejects) std::cerr << "[reject] " << r << "\n";
  std::cerr << "[info] relations accepted: " << rf.accepted
            << ", rejected: " << rf.rejects.size() << "\n";
  return rf.by_doc;
}

int cmd_train(const std::string& corpus_dir, const std::string& relations_path,
              const std::string& embeddings_path, const std::string& config_path,
              const std::string& out_path, const std::string& dev_dir,
              const std::string& dev_relations_path, const std::string& report_path,
              ResolvedTrainOptions opts) {
  evdag::StandoffCorpus train_corpus = load_corpus(corpus_dir);
  bool any_gold = false;
  for (const auto& d : train_corpus.docs) any_gold |= !d.events.empty();
  if (!any_gold)
    evdag::fail(evdag::ErrorCode::Config,
                "training corpus has no gold events (.a2 files missing or empty)");

  auto train_rels = load_relations(relations_path, train_corpus.docs);

  std::optional<evdag::StandoffCorpus> dev_corpus;
  std::map<std::string, std::vector<evdag::Relation>> dev_rels;
  if (!dev_dir.empty()) {
    dev_corpus = load_corpus(dev_dir);
    dev_rels = load_relations(dev_relations_path, dev_corpus->docs);
  } else if (!dev_relations_path.empty()) {
    evdag::fail(evdag::ErrorCode::Config, "--dev-relations requires --dev");
  }

  std::optional<evdag::EmbeddingTable> pretrained;
  if (!embeddings_path.empty()) {
    pretrained = evdag::load_word_embeddings(embeddings_path, opts.cfg.model.word_dim);
    std::cerr << "[info] loaded " << pretrained->words.size() << " pretrained vectors\n";
  } else {
    std::cerr << "[warn] no --embeddings given, word table is randomly initialised\n";
  }

  opts.cfg.beam.strict_stop = opts.strict_stop;
  opts.echo();

  evdag::TrainData data;
  data.train_docs = &train_corpus.docs;
  data.train_relations = &train_rels;
  if (dev_corpus) {
    data.dev_docs = &dev_corpus->docs;
    data.dev_relations = &dev_rels;
  }
  if (pretrained) data.pretrained = &*pretrained;

  auto [model, report] = evdag::train<Scalar>(data, opts.cfg);
  evdag::save_model(model, out_path);
  std::cerr << "[info] model written to " << out_path << "\n";

  nlohmann::json jr;
  jr["best_epoch"] = report.best_epoch;
  jr["best_dev_f1"] = report.best_f1;
  jr["diagnostics"] = report.diagnostics;
  jr["epochs"] = nlohmann::json::array();
  for (const auto& e : report.epochs)
    jr["epochs"].push_back({{"epoch", e.epoch},
                            {"loss", e.loss},
                            {"dev_p", e.dev_p},
                            {"dev_r", e.dev_r},
                            {"dev_f1", e.dev_f1},
                            {"early_updates", e.early_updates},
                            {"wall_ms", e.wall_ms}});
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) evdag::fail(evdag::ErrorCode::Io, "cannot write report '" + report_path + "'");
    out << jr.dump(2) << "\n";
  }
  for (const auto& d : report.diagnostics) std::cerr << "[warn] " << d << "\n";
  std::cerr << "[info] best epoch " << report.best_epoch << ", dev F1 " << report.best_f1
            << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& corpus_dir,
                const std::string& relations_path, const std::string& out_dir, int beam,
                double threshold, bool strict_stop, int threads,
                const std::string& profile_path) {
  evdag::Model<Scalar> model = evdag::load_model<Scalar>(model_path);
  evdag::StandoffCorpus corpus = load_corpus(corpus_dir);
  auto rels = load_relations(relations_path, corpus.docs);

  evdag::BeamConfig bc;
  bc.k = beam;
  bc.threshold = threshold;
  bc.strict_stop = strict_stop;
  bc.validate();
  std::cerr << "[config] beam_size = " << bc.k << "\n";
  std::cerr << "[config] action_score_threshold = " << bc.threshold << "\n";
  std::cerr << "[config] strict_stop = " << (bc.strict_stop ? "true" : "false") << "\n";
  std::cerr << "[config] threads = " << threads << "\n";

  auto [pred, prof] = evdag::predict_corpus(model, corpus.docs, rels, bc, threads);
  evdag::write_standoff(out_dir, pred);
  nlohmann::json jp = evdag::profile_json(prof);
  std::cerr << "[profile] " << jp.dump() << "\n";
  if (!profile_path.empty()) {
    std::ofstream out(profile_path);
    if (!out) evdag::fail(evdag::ErrorCode::Io, "cannot write profile '" + profile_path + "'");
    out << jp.dump(2) << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& gold_dir, const std::string& pred_dir, bool categories,
                 const std::string& json_path, const std::string& sig_dir, long shuffles,
                 uint64_t seed, int span_slack) {
  evdag::StandoffCorpus gold = load_corpus(gold_dir);
  evdag::StandoffCorpus pred = load_corpus(pred_dir);

  std::map<std::string, const evdag::Document*> pred_by_id;
  for (const auto& d : pred.docs) pred_by_id[d.id] = &d;
  std::vector<const evdag::Document*> g, p;
  for (const auto& d : gold.docs) {
    auto it = pred_by_id.find(d.id);
    if (it == pred_by_id.end())
      evdag::fail(evdag::ErrorCode::Config,
                  "prediction directory has no document '" + d.id + "'");
    g.push_back(&d);
    p.push_back(it->second);
  }

  evdag::EvalReport rep = evdag::evaluate(g, p);
  std::cout << evdag::eval_report_text(rep, categories);
  nlohmann::json j = evdag::eval_report_json(rep);

  if (span_slack > 0) {
    evdag::PrF ap = evdag::evaluate_approx_spans(g, p, span_slack);
    std::cout << "approx(slack=" << span_slack << "): P=" << ap.p << " R=" << ap.r
              << " F1=" << ap.f1 << "\n";
    j["approx_span"] = {{"slack", span_slack}, {"p", ap.p}, {"r", ap.r}, {"f1", ap.f1}};
  }

  if (!sig_dir.empty()) {
    evdag::StandoffCorpus other = load_corpus(sig_dir);
    std::map<std::string, const evdag::Document*> other_by_id;
    for (const auto& d : other.docs) other_by_id[d.id] = &d;
    std::vector<const evdag::Document*> b;
    for (const auto& d : gold.docs) {
      auto it = other_by_id.find(d.id);
      if (it == other_by_id.end())
        evdag::fail(evdag::ErrorCode::Config,
                    "--sig-against directory has no document '" + d.id + "'");
      b.push_back(it->second);
    }
    evdag::SignificanceResult sig = evdag::approximate_randomization(g, p, b, shuffles, seed);
    std::cout << "significance: observed_diff=" << sig.observed_diff << " shuffles="
              << sig.shuffles << " p=" << sig.p_value << " seed=" << sig.seed << "\n";
    j["significance"] = {{"observed_diff", sig.observed_diff},
                         {"shuffles", sig.shuffles},
                         {"p_value", sig.p_value},
                         {"seed", sig.seed}};
  }

  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) evdag::fail(evdag::ErrorCode::Io, "cannot write report '" + json_path + "'");
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_oracle(const std::string& corpus_dir, const std::string& relations_path,
               const std::string& json_path) {
  evdag::StandoffCorpus corpus = load_corpus(corpus_dir);
  auto rels = load_relations(relations_path, corpus.docs);
  evdag::OracleRunReport rep = evdag::oracle_run(corpus.docs, rels);

  long total = rep.derivability.gold_total;
  std::cout << "gold events: " << total << "\n";
  std::cout << "derivable:   " << rep.derivability.derivable << " ("
            << 100.0 * rep.derivability.upper_bound_recall() << "%)\n";
  std::cout << "upper-bound recall: " << rep.derivability.upper_bound_recall() << "\n";
  evdag::PrF replay = rep.replay.overall();
  std::cout << "replay F1 on derivable events: " << replay.f1 << "\n";
  if (rep.derivability.oversized_triggers > 0)
    std::cerr << "[warn] " << rep.derivability.oversized_triggers
              << " trigger(s) exceed 16 entries; exhaustive-beam confirmation skipped\n";
  for (const auto& [id, reason] : rep.derivability.underivable)
    std::cout << "underivable " << id << ": " << reason << "\n";

  if (!json_path.empty()) {
    nlohmann::json j;
    j["gold_events"] = total;
    j["derivable"] = rep.derivability.derivable;
    j["upper_bound_recall"] = rep.derivability.upper_bound_recall();
    j["replay_f1"] = replay.f1;
    j["underivable"] = nlohmann::json::array();
    for (const auto& [id, reason] : rep.derivability.underivable)
      j["underivable"].push_back({{"event", id}, {"reason", reason}});
    std::ofstream out(json_path);
    if (!out) evdag::fail(evdag::ErrorCode::Io, "cannot write report '" + json_path + "'");
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_synth(const std::string& spec_path, long long seed_flag, const std::string& out_dir) {
  evdag::SynthSpec spec;
  if (!spec_path.empty()) spec = evdag::SynthSpec::from_kv(evdag::KeyValueFile::load(spec_path));
  if (seed_flag >= 0) spec.seed = (uint64_t)seed_flag;
  spec.validate();

  evdag::SynthCorpus corpus = evdag::generate_synthetic_corpus(spec);
  evdag::write_standoff(out_dir, corpus.docs);
  evdag::write_relations_file(
      (std::filesystem::path(out_dir) / "relations.jsonl").string(), corpus.predicted);
  {
    std::ofstream out(std::filesystem::path(out_dir) / "stats.json");
    if (!out) evdag::fail(evdag::ErrorCode::Io, "cannot write stats.json");
    out << corpus.stats.dump(2) << "\n";
  }
  std::cout << corpus.stats.dump(2) << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"nested and overlapping event detection over relation graphs"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model on a standoff corpus");
  std::string t_corpus, t_rels, t_emb, t_config, t_out, t_dev, t_dev_rels, t_report;
  train->add_option("--corpus", t_corpus, "training corpus directory")->required();
  train->add_option("--relations", t_rels, "predicted relations (JSONL)");
  train->add_option("--embeddings", t_emb, "pretrained word embeddings (text format)");
  train->add_option("--config", t_config, "key = value configuration file");
  train->add_option("--out", t_out, "output model path")->required();
  train->add_option("--dev", t_dev, "development corpus directory (defaults to --corpus)");
  train->add_option("--dev-relations", t_dev_rels, "development relations (JSONL)");
  train->add_option("--report", t_report, "write the training report JSON here");
  long long t_seed = -1, t_epochs = -1, t_batch = -1, t_patience = -1, t_beam = -1;
  double t_lr = -1, t_dropout = -1, t_wd = -1, t_threshold = -1;
  bool t_strict = false;
  train->add_option("--seed", t_seed, "random seed");
  train->add_option("--epochs", t_epochs, "maximum training epochs");
  train->add_option("--batch", t_batch, "mini-batch size in triggers");
  train->add_option("--patience", t_patience, "early stopping patience (epochs)");
  train->add_option("--beam", t_beam, "beam size");
  train->add_option("--lr", t_lr, "learning rate");
  train->add_option("--dropout", t_dropout, "dropout rate");
  train->add_option("--weight-decay", t_wd, "weight decay rate");
  train->add_option("--threshold", t_threshold, "action score threshold");
  train->add_flag("--strict-stop", t_strict, "skip a parent trigger when a sub-event is missing");

  // predict
  auto* predict = app.add_subcommand("predict", "detect events with a trained model");
  std::string p_model, p_corpus, p_rels, p_out, p_profile;
  int p_beam = 8, p_threads = 1;
  double p_threshold = 0.5;
  bool p_strict = false;
  predict->add_option("--model", p_model, "model file")->required();
  predict->add_option("--corpus", p_corpus, "corpus directory")->required();
  predict->add_option("--relations", p_rels, "predicted relations (JSONL)");
  predict->add_option("--out", p_out, "output directory for standoff predictions")->required();
  predict->add_option("--beam", p_beam, "beam size");
  predict->add_option("--threshold", p_threshold, "action score threshold");
  predict->add_flag("--strict-stop", p_strict, "skip a parent trigger when a sub-event is missing");
  predict->add_option("--threads", p_threads, "documents processed in parallel");
  predict->add_option("--profile", p_profile, "write the profile JSON here");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
  std::string e_gold, e_pred, e_json, e_sig;
  bool e_categories = false;
  long e_shuffles = 1024;
  long long e_seed = 1;
  int e_slack = 0;
  evaluate->add_option("--gold", e_gold, "gold corpus directory")->required();
  evaluate->add_option("--pred", e_pred, "prediction directory")->required();
  evaluate->add_flag("--categories", e_categories, "report nested/overlapping/flat breakdown");
  evaluate->add_option("--json", e_json, "write the report JSON here");
  evaluate->add_option("--sig-against", e_sig, "second prediction directory for significance");
  evaluate->add_option("--shuffles", e_shuffles, "approximate randomization shuffles");
  evaluate->add_option("--seed", e_seed, "shuffle seed");
  evaluate->add_option("--span-slack", e_slack, "approximate span matching slack (chars)");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "derivability, replay and upper-bound recall");
  std::string o_corpus, o_rels, o_json;
  oracle->add_option("--corpus", o_corpus, "gold corpus directory")->required();
  oracle->add_option("--relations", o_rels, "predicted relations (JSONL)");
  oracle->add_option("--json", o_json, "write the report JSON here");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string s_spec, s_out;
  long long s_seed = -1;
  synth->add_option("--spec", s_spec, "synthetic corpus spec (key = value)");
  synth->add_option("--seed", s_seed, "seed override");
  synth->add_option("--out", s_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ResolvedTrainOptions opts = resolve_train_config(t_config);
      if (t_seed >= 0) { opts.cfg.seed = (uint64_t)t_seed; opts.cfg.model.seed = (uint64_t)t_seed; }
      if (t_epochs > 0) opts.cfg.max_epochs = (int)t_epochs;
      if (t_batch > 0) opts.cfg.batch_size = (int)t_batch;
      if (t_patience > 0) opts.cfg.patience = (int)t_patience;
      if (t_beam > 0) opts.cfg.beam.k = (int)t_beam;
      if (t_lr >= 0) opts.cfg.learning_rate = t_lr;
      if (t_dropout >= 0) opts.cfg.dropout = t_dropout;
      if (t_wd >= 0) opts.cfg.weight_decay = t_wd;
      if (t_threshold >= 0) opts.cfg.beam.threshold = t_threshold;
      if (t_strict) opts.strict_stop = true;
      opts.cfg.validate();
      return cmd_train(t_corpus, t_rels, t_emb, t_config, t_out, t_dev, t_dev_rels, t_report,
                       std::move(opts));
    }
    if (*predict)
      return cmd_predict(p_model, p_corpus, p_rels, p_out, p_beam, p_threshold, p_strict,
                         p_threads, p_profile);
    if (*evaluate)
      return cmd_evaluate(e_gold, e_pred, e_categories, e_json, e_sig, e_shuffles,
                          (uint64_t)e_seed, e_slack);
    if (*oracle) return cmd_oracle(o_corpus, o_rels, o_json);
    if (*synth) return cmd_synth(s_spec, s_seed, s_out);
  } catch (const evdag::Error& e) {
    std::cerr << e.line() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: E_INTERNAL " << e.what() << "\n";
    return 3;
  }
  return 0;
}
