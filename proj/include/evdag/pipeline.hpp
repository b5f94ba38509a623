#pragma once

// End-to-end drivers: per-document prediction, corpus prediction with
// optional sentence-level parallelism (deterministic: documents are
// independent and results are collected by index), and oracle/derivability
// reporting.

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "evdag/detect.hpp"
#include "evdag/eval.hpp"
#include "evdag/graph.hpp"
#include "evdag/model.hpp"
#include "evdag/oracle.hpp"
#include "evdag/scorer.hpp"
#include "evdag/tape.hpp"

namespace evdag {

inline const std::vector<Relation>* relations_for(
    const std::map<std::string, std::vector<Relation>>& by_doc, const std::string& id) {
  auto it = by_doc.find(id);
  return it == by_doc.end() ? nullptr : &it->second;
}

template <class S>
Document predict_document(const Model<S>& model, const Document& doc,
                          const std::vector<Relation>& relations, const BeamConfig& beam,
                          uint64_t& calls, uint64_t& triggers) {
  Document out = doc;
  out.events.clear();
  out.event_index.clear();
  int id_counter = 0;
  for (int si = 0; si < (int)doc.sentences.size(); ++si) {
    RelationGraph g = build_relation_graph(doc, si, relations);
    bool has_trigger = false;
    for (const std::string& id : g.mention_ids)
      if (doc.mention(id).is_trigger()) { has_trigger = true; break; }
    if (!has_trigger) continue;
    triggers += topological_trigger_order(g).size();
    Tape<S> tape(/*record_grads=*/false, /*train=*/false);
    NeuralScorer<S> scorer(tape, model, nullptr, doc, si);
    for (DetectedEvent& d : detect_events_sentence(g, beam, scorer, id_counter))
      out.events.push_back(std::move(d.event));
    calls += scorer.calls();
  }
  out.rebuild_indexes();
  return out;
}

template <class S>
std::pair<std::vector<Document>, ProfileReport> predict_corpus(
    const Model<S>& model, const std::vector<Document>& docs,
    const std::map<std::string, std::vector<Relation>>& relations_by_doc,
    const BeamConfig& beam, int threads = 1) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Document> out(docs.size());
  std::vector<uint64_t> calls(docs.size(), 0), trig(docs.size(), 0);
  static const std::vector<Relation> kNone;

  auto work = [&](size_t i) {
    const std::vector<Relation>* rels = relations_for(relations_by_doc, docs[i].id);
    out[i] = predict_document(model, docs[i], rels ? *rels : kNone, beam, calls[i], trig[i]);
  };

  if (threads <= 1 || docs.size() <= 1) {
    for (size_t i = 0; i < docs.size(); ++i) work(i);
  } else {
    int n = std::min<int>(threads, (int)docs.size());
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int w = 0; w < n; ++w)
      pool.emplace_back([&, w]() {
        for (size_t i = (size_t)w; i < docs.size(); i += (size_t)n) work(i);
      });
    for (auto& th : pool) th.join();
  }

  ProfileReport prof;
  for (size_t i = 0; i < docs.size(); ++i) {
    prof.scorer_calls += calls[i];
    prof.triggers += trig[i];
  }
  prof.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(out), prof};
}

// Per-document relation graphs plus gold-sequence plans. `merge_gold` adds
// the gold decomposition to the given relations (the training-time graph);
// otherwise the graphs come from `relations` alone (the inference-time
// graph, also the upper-bound setting).
struct DocPlans {
  const Document* doc = nullptr;
  std::vector<RelationGraph> graphs;
  std::vector<SentencePlan> plans;
};

inline DocPlans build_doc_plans(const Document& doc, const std::vector<Relation>& relations,
                                bool merge_gold) {
  DocPlans dp;
  dp.doc = &doc;
  std::vector<Relation> base = relations;
  if (merge_gold) base = merge_relation_sets(base, decompose_events(doc, doc.events));
  for (int si = 0; si < (int)doc.sentences.size(); ++si) {
    dp.graphs.push_back(build_relation_graph(doc, si, base));
    dp.plans.push_back(derive_sentence_plan(doc, dp.graphs.back()));
  }
  return dp;
}

struct OracleRunReport {
  DerivabilityReport derivability;
  EvalReport replay; // forced replays vs the derivable gold subset
};

// Derivability + forced structural replay over a corpus. When `relations`
// has no entry for a document, its own gold decomposition is used (the
// self-decomposition setting where derivability must be complete).
inline OracleRunReport oracle_run(
    const std::vector<Document>& docs,
    const std::map<std::string, std::vector<Relation>>& relations_by_doc) {
  OracleRunReport rep;
  std::vector<Document> replay_docs, gold_docs;
  for (const Document& doc : docs) {
    const std::vector<Relation>* rels = relations_for(relations_by_doc, doc.id);
    std::vector<Relation> base = rels ? *rels : decompose_events(doc, doc.events);
    Document replayed = doc;
    replayed.events.clear();
    Document gold_kept = doc;
    gold_kept.events.clear();
    for (int si = 0; si < (int)doc.sentences.size(); ++si) {
      RelationGraph g = build_relation_graph(doc, si, base);
      SentencePlan plan = derive_sentence_plan(doc, g);
      accumulate_derivability(rep.derivability, doc.id, plan);
      for (Event& ev : replay_sentence_plan(doc, plan)) replayed.events.push_back(std::move(ev));
      for (const Event& ev : doc.events)
        if (plan.derivable.count(ev.id)) gold_kept.events.push_back(ev);
    }
    replayed.rebuild_indexes();
    gold_kept.rebuild_indexes();
    replay_docs.push_back(std::move(replayed));
    gold_docs.push_back(std::move(gold_kept));
  }
  std::vector<const Document*> g, p;
  for (size_t i = 0; i < gold_docs.size(); ++i) {
    g.push_back(&gold_docs[i]);
    p.push_back(&replay_docs[i]);
  }
  rep.replay = evaluate(g, p);
  return rep;
}

} // namespace evdag
