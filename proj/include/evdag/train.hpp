#pragma once

// Beam-search training with early updates. Per trigger, every scored
// expansion gets a binary label (1 iff its action history is a prefix of
// some gold sequence); the loss is the summed binary negative log-likelihood
// over scored expansions. When any live gold prefix drops out of the kept
// top-k, search for that trigger stops and the model is updated right after
// the batch. Parent triggers see gold sub-events (teacher forcing) whose
// representations come from forced replays through the scorer, so gradients
// reach the sub-event graphs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "evdag/embeddings.hpp"
#include "evdag/eval.hpp"
#include "evdag/model.hpp"
#include "evdag/optimizer.hpp"
#include "evdag/pipeline.hpp"
#include "evdag/scorer.hpp"

namespace evdag {

struct TrainConfig {
  int batch_size = 100; // triggers per mini-batch
  double learning_rate = 0.001;
  double weight_decay = 0.001;
  double dropout = 0.5;
  int patience = 5;
  int max_epochs = 100;
  BeamConfig beam; // k = 8, threshold = 0.5
  uint64_t seed = 42;
  ModelConfig model;

  void validate() const {
    if (batch_size < 1) fail(ErrorCode::Config, "batch size must be positive");
    if (learning_rate <= 0) fail(ErrorCode::Config, "learning rate must be positive");
    if (weight_decay < 0) fail(ErrorCode::Config, "weight decay must be non-negative");
    if (dropout < 0 || dropout >= 1) fail(ErrorCode::Config, "dropout must be in [0, 1)");
    if (patience < 1) fail(ErrorCode::Config, "patience must be positive");
    if (max_epochs < 1) fail(ErrorCode::Config, "max epochs must be positive");
    beam.validate();
    model.validate();
  }
};

struct EpochStats {
  int epoch = 0;
  double loss = 0;
  double dev_p = 0, dev_r = 0, dev_f1 = 0;
  long early_updates = 0;
  double wall_ms = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_f1 = -1;
  std::vector<std::string> diagnostics;
};

// Stops after `patience` consecutive epochs without a dev improvement;
// keeps the best epoch.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  bool record(int epoch, double f1) {
    if (f1 > best_f1_) {
      best_f1_ = f1;
      best_epoch_ = epoch;
    }
    return epoch - best_epoch_ >= patience_;
  }
  int best_epoch() const { return best_epoch_; }
  double best_f1() const { return best_f1_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_f1_ = -1;
};

struct TrainTask {
  int doc = 0, sent = 0, trig = 0;
};

namespace traindetail {

inline bool is_gold_prefix(const std::vector<GoldSequence>& golds,
                           const std::vector<Action>& history) {
  size_t len = history.size();
  for (const GoldSequence& g : golds) {
    if (g.actions.size() < len) continue;
    if (std::equal(history.begin(), history.end(), g.actions.begin())) return true;
  }
  return false;
}

// Binds the representations of a gold sub-event by forced replay, memoized
// per (scorer, batch).
template <class S>
int gold_event_rep(NeuralScorer<S>& scorer, const SentencePlan& plan,
                   const std::string& gold_id, std::map<std::string, int>& memo) {
  auto it = memo.find(gold_id);
  if (it != memo.end()) return it->second;
  auto plan_it = plan.plan_of_gold.find(gold_id);
  if (plan_it == plan.plan_of_gold.end())
    fail(ErrorCode::Internal, "no derivation for gold event '" + gold_id + "'");
  const TriggerPlan& tp = plan.triggers[plan_it->second];
  const GoldSequence* seq = nullptr;
  for (const GoldSequence& g : tp.golds)
    if (g.gold_event_id == gold_id) { seq = &g; break; }
  if (!seq) fail(ErrorCode::Internal, "gold sequence missing for '" + gold_id + "'");
  TriggerContext ctx = tp.ctx;
  for (ArgumentEntry& e : ctx.entries)
    if (e.is_event) e.rep = gold_event_rep(scorer, plan, e.event_id, memo);
  int rep = scorer.forced_event_rep(ctx, seq->actions);
  memo.emplace(gold_id, rep);
  return rep;
}

} // namespace traindetail

// Loss of one mini-batch: beam search per trigger with per-expansion labels
// and early updates. With `grads`, runs the backward pass and accumulates
// into it. Returns the batch loss (0 when the batch had nothing to score).
template <class S>
double compute_batch_loss(const std::vector<TrainTask>& batch,
                          const std::vector<DocPlans>& corpus, const Model<S>& model,
                          Tensors<S>* grads, const TrainConfig& cfg, uint64_t batch_seed,
                          long& early_updates) {
  Tape<S> tape(/*record_grads=*/grads != nullptr, /*train=*/true, batch_seed);

  struct SentenceCtx {
    std::unique_ptr<NeuralScorer<S>> scorer;
    std::map<std::string, int> rep_memo;
  };
  std::map<std::pair<int, int>, SentenceCtx> sentences;

  Var loss = -1;
  auto add_loss = [&](Var term) { loss = loss < 0 ? term : tape.add(loss, term); };

  for (const TrainTask& task : batch) {
    const DocPlans& dp = corpus[task.doc];
    const SentencePlan& plan = dp.plans[task.sent];
    const TriggerPlan& tp = plan.triggers[task.trig];

    auto key = std::make_pair(task.doc, task.sent);
    SentenceCtx& sc = sentences[key];
    if (!sc.scorer)
      sc.scorer = std::make_unique<NeuralScorer<S>>(tape, model, grads, *dp.doc, task.sent,
                                                    cfg.dropout);
    NeuralScorer<S>& scorer = *sc.scorer;

    TriggerContext ctx = tp.ctx;
    for (ArgumentEntry& e : ctx.entries)
      if (e.is_event)
        e.rep = traindetail::gold_event_rep(scorer, plan, e.event_id, sc.rep_memo);
    scorer.begin_trigger(ctx);

    std::vector<SearchState> states{init_state(ctx)};
    uint64_t creation = 0;
    int t = 0;
    while (!states.empty()) {
      std::vector<detail::RankedExpansion> pool;
      for (const SearchState& s : states) {
        for (Action a : applicable_actions(s.next_pos)) {
          ScoredAction scored = scorer.score_action(ctx, s, a);
          auto [child, cand] = apply_action(ctx, s, a, scored, creation++);
          bool label = traindetail::is_gold_prefix(tp.golds, child.history);
          add_loss(tape.bce_with_logits(scored.score_node, label ? 1.0 : 0.0));
          pool.push_back({std::move(child), std::move(cand)});
        }
      }
      std::sort(pool.begin(), pool.end(), detail::expansion_before);
      if ((int)pool.size() > cfg.beam.k) pool.resize(cfg.beam.k);

      bool gold_lost = false;
      for (const GoldSequence& g : tp.golds) {
        if ((int)g.actions.size() < t + 1) continue; // already fully constructed
        bool present = false;
        for (const auto& exp : pool) {
          if ((int)exp.state.history.size() == t + 1 &&
              std::equal(exp.state.history.begin(), exp.state.history.end(),
                         g.actions.begin()))
            { present = true; break; }
        }
        if (!present) { gold_lost = true; break; }
      }
      if (gold_lost) {
        ++early_updates;
        break;
      }

      std::vector<SearchState> survivors;
      for (auto& exp : pool)
        if (!exp.state.terminated && !exp.state.buffer_empty(ctx))
          survivors.push_back(std::move(exp.state));
      states = std::move(survivors);
      ++t;
    }
  }

  if (loss < 0) return 0.0;
  double loss_value = (double)tape.val(loss)[0];
  if (grads && std::isfinite(loss_value)) tape.backward(loss);
  return loss_value;
}

// One training step: batch loss, backward pass, one optimizer update. A
// non-finite loss skips the batch with a diagnostic.
template <class S>
double train_step_early_update(const std::vector<TrainTask>& batch,
                               const std::vector<DocPlans>& corpus, Model<S>& model,
                               AmsGrad<S>& opt, const TrainConfig& cfg, uint64_t batch_seed,
                               long& early_updates, std::vector<std::string>* diagnostics) {
  Tensors<S> grads = model.t.zeros_like();
  double loss_value =
      compute_batch_loss(batch, corpus, model, &grads, cfg, batch_seed, early_updates);
  if (!std::isfinite(loss_value)) {
    if (diagnostics)
      diagnostics->push_back("non-finite batch loss " + std::to_string(loss_value) +
                             ", batch skipped");
    return loss_value;
  }
  if (auto diag = opt.step(model.t, grads); diag && diagnostics)
    diagnostics->push_back(*diag);
  return loss_value;
}

struct TrainData {
  const std::vector<Document>* train_docs = nullptr;
  const std::map<std::string, std::vector<Relation>>* train_relations = nullptr;
  const std::vector<Document>* dev_docs = nullptr;
  const std::map<std::string, std::vector<Relation>>* dev_relations = nullptr;
  const EmbeddingTable* pretrained = nullptr; // optional
};

// Inventory scan: words from training tokens plus the embedding vocabulary,
// types from mentions, roles from gold decompositions and relation files.
template <class S>
Model<S> init_model_from_data(const TrainData& data, const ModelConfig& mcfg) {
  std::set<std::string> words, types, roles;
  auto scan_docs = [&](const std::vector<Document>& docs) {
    for (const Document& doc : docs) {
      for (const Sentence& s : doc.sentences)
        for (const Token& t : s.tokens) words.insert(t.surface);
      for (const Mention& m : doc.mentions) types.insert(m.type);
      for (const Event& e : doc.events)
        for (const EventArg& a : e.args) roles.insert(a.role);
    }
  };
  scan_docs(*data.train_docs);
  if (data.dev_docs) scan_docs(*data.dev_docs);
  auto scan_rels = [&](const std::map<std::string, std::vector<Relation>>* rels) {
    if (!rels) return;
    for (const auto& [id, v] : *rels)
      for (const Relation& r : v) roles.insert(r.role);
  };
  scan_rels(data.train_relations);
  scan_rels(data.dev_relations);
  if (data.pretrained)
    for (const std::string& w : data.pretrained->words) words.insert(w);

  std::unordered_map<std::string, std::vector<float>> pre;
  if (data.pretrained) pre = data.pretrained->vectors;
  return init_model<S>(mcfg, {words.begin(), words.end()}, {types.begin(), types.end()},
                       {roles.begin(), roles.end()}, data.pretrained ? &pre : nullptr);
}

template <class S>
std::pair<Model<S>, TrainReport> train(const TrainData& data, const TrainConfig& cfg) {
  cfg.validate();
  if (!data.train_docs || data.train_docs->empty())
    fail(ErrorCode::Config, "training corpus is empty");

  Model<S> model = init_model_from_data<S>(data, cfg.model);

  static const std::vector<Relation> kNone;
  std::vector<DocPlans> corpus;
  for (const Document& doc : *data.train_docs) {
    const std::vector<Relation>* rels =
        data.train_relations ? relations_for(*data.train_relations, doc.id) : nullptr;
    corpus.push_back(build_doc_plans(doc, rels ? *rels : kNone, /*merge_gold=*/true));
  }

  std::vector<TrainTask> tasks;
  for (int d = 0; d < (int)corpus.size(); ++d)
    for (int s = 0; s < (int)corpus[d].plans.size(); ++s)
      for (int t = 0; t < (int)corpus[d].plans[s].triggers.size(); ++t)
        tasks.push_back({d, s, t});
  if (tasks.empty()) fail(ErrorCode::Config, "training corpus has no triggers");

  const std::vector<Document>& dev_docs = data.dev_docs ? *data.dev_docs : *data.train_docs;
  const std::map<std::string, std::vector<Relation>>* dev_rels =
      data.dev_docs ? data.dev_relations : data.train_relations;
  static const std::map<std::string, std::vector<Relation>> kNoRels;

  AmsGrad<S> opt(model.t, cfg.learning_rate, cfg.weight_decay);
  std::mt19937_64 shuffle_rng(cfg.seed);
  EarlyStopper stopper(cfg.patience);
  TrainReport report;
  Tensors<S> best = model.t;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    std::shuffle(tasks.begin(), tasks.end(), shuffle_rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (size_t off = 0; off < tasks.size(); off += (size_t)cfg.batch_size) {
      size_t end = std::min(tasks.size(), off + (size_t)cfg.batch_size);
      std::vector<TrainTask> batch(tasks.begin() + off, tasks.begin() + end);
      uint64_t batch_seed =
          cfg.seed ^ (0x9e3779b97f4a7c15ull * (uint64_t)epoch) ^ (uint64_t)off;
      double l = train_step_early_update(batch, corpus, model, opt, cfg, batch_seed,
                                         stats.early_updates, &report.diagnostics);
      if (std::isfinite(l)) stats.loss += l;
    }

    auto [pred, prof] = predict_corpus(model, dev_docs, dev_rels ? *dev_rels : kNoRels,
                                       cfg.beam, /*threads=*/1);
    std::vector<const Document*> g, p;
    for (size_t i = 0; i < dev_docs.size(); ++i) {
      g.push_back(&dev_docs[i]);
      p.push_back(&pred[i]);
    }
    EvalReport ev = evaluate(g, p);
    PrF overall = ev.overall();
    stats.dev_p = overall.p;
    stats.dev_r = overall.r;
    stats.dev_f1 = overall.f1;
    stats.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    report.epochs.push_back(stats);

    bool improved = overall.f1 > stopper.best_f1();
    bool stop = stopper.record(epoch, overall.f1);
    if (improved) best = model.t;
    if (stop) break;
  }
  report.best_epoch = stopper.best_epoch();
  report.best_f1 = stopper.best_f1();
  model.t = best;
  return {std::move(model), std::move(report)};
}

} // namespace evdag
