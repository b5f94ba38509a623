#pragma once

// Per-sentence relation graphs: building them from predicted and
// gold-decomposed relations, validating structure (the trigger-to-trigger
// subgraph must be a DAG), and ordering triggers bottom-up.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evdag/error.hpp"
#include "evdag/types.hpp"

namespace evdag {

// One relation per (trigger, role, argument) of every event; event-valued
// arguments map to the referenced event's trigger mention. Duplicates
// collapse (the graph is a set of edges).
inline std::vector<Relation> decompose_events(const Document& doc,
                                              const std::vector<Event>& events) {
  std::map<std::string, Relation> by_key;
  for (const Event& ev : events) {
    if (!doc.find_mention(ev.trigger_id))
      fail(ErrorCode::Structure,
           "event '" + ev.id + "' references missing trigger mention '" + ev.trigger_id + "'");
    for (const EventArg& a : ev.args) {
      Relation r;
      r.trigger_id = ev.trigger_id;
      r.role = a.role;
      r.provenance = Provenance::GoldDecomposed;
      if (a.is_event) {
        const Event* sub = doc.find_event(a.target_id);
        if (!sub)
          fail(ErrorCode::Structure,
               "event '" + ev.id + "' references missing event '" + a.target_id + "'");
        r.arg_id = sub->trigger_id;
        if (!doc.find_mention(r.arg_id))
          fail(ErrorCode::Structure,
               "event '" + sub->id + "' references missing trigger mention '" + sub->trigger_id + "'");
      } else {
        if (!doc.find_mention(a.target_id))
          fail(ErrorCode::Structure,
               "event '" + ev.id + "' references missing mention '" + a.target_id + "'");
        r.arg_id = a.target_id;
      }
      r.id = "GD" + std::to_string(by_key.size() + 1);
      by_key.emplace(r.key(), r);
    }
  }
  std::vector<Relation> out;
  out.reserve(by_key.size());
  for (auto& [k, r] : by_key) out.push_back(r);
  return out;
}

// Union keyed by (trigger, role, arg). A key present in both sources keeps
// provenance=Predicted and records the gold confirmation.
inline std::vector<Relation> merge_relation_sets(const std::vector<Relation>& predicted,
                                                 const std::vector<Relation>& gold_decomposed) {
  std::map<std::string, Relation> by_key;
  for (const Relation& r : predicted) {
    Relation c = r;
    c.provenance = Provenance::Predicted;
    by_key.emplace(c.key(), c);
  }
  for (const Relation& r : gold_decomposed) {
    auto it = by_key.find(r.key());
    if (it == by_key.end()) {
      Relation c = r;
      c.provenance = Provenance::GoldDecomposed;
      by_key.emplace(c.key(), c);
    } else {
      it->second.gold_confirmed = true;
    }
  }
  std::vector<Relation> out;
  out.reserve(by_key.size());
  for (auto& [k, r] : by_key) out.push_back(r);
  return out;
}

struct RelationGraph {
  const Document* doc = nullptr;
  int sentence = -1;
  std::vector<std::string> mention_ids; // all mentions of the sentence
  std::vector<Relation> edges;          // validated, deduplicated, acyclic over triggers
  std::vector<std::string> dropped;     // human-readable notes for dropped edges
};

namespace detail {

struct EdgeSortKey {
  int trigger_begin;
  std::string role;
  int arg_begin;

  bool operator<(const EdgeSortKey& o) const {
    if (trigger_begin != o.trigger_begin) return trigger_begin < o.trigger_begin;
    if (role != o.role) return role < o.role;
    return arg_begin < o.arg_begin;
  }
};

inline EdgeSortKey edge_key(const Document& doc, const Relation& r) {
  return {doc.mention(r.trigger_id).begin, r.role, doc.mention(r.arg_id).begin};
}

// One DFS pass over the trigger-to-trigger subgraph; returns the indices of
// all back edges encountered. Roots are visited by ascending trigger span
// start, out-edges by ascending (trigger begin, role, arg begin) key.
inline std::vector<int> find_back_edges(const Document& doc,
                                        const std::vector<Relation>& edges) {
  std::map<std::string, std::vector<int>> out_edges; // trigger id -> edge indices
  std::set<std::pair<int, std::string>> triggers;    // (span begin, id), sorted
  for (int i = 0; i < (int)edges.size(); ++i) {
    const Relation& r = edges[i];
    const Mention& arg = doc.mention(r.arg_id);
    if (!arg.is_trigger()) continue;
    out_edges[r.trigger_id].push_back(i);
    triggers.insert({doc.mention(r.trigger_id).begin, r.trigger_id});
    triggers.insert({arg.begin, arg.id});
  }
  for (auto& [id, idxs] : out_edges)
    std::sort(idxs.begin(), idxs.end(), [&](int a, int b) {
      return edge_key(doc, edges[a]) < edge_key(doc, edges[b]);
    });

  enum { White, Grey, Black };
  std::map<std::string, int> color;
  std::vector<int> back;

  // Iterative DFS to keep deep chains off the call stack.
  struct Frame { std::string node; size_t next; };
  for (const auto& [begin, root] : triggers) {
    if (color.count(root)) continue;
    std::vector<Frame> stack{{root, 0}};
    color[root] = Grey;
    while (!stack.empty()) {
      Frame& f = stack.back();
      auto it = out_edges.find(f.node);
      if (it == out_edges.end() || f.next >= it->second.size()) {
        color[f.node] = Black;
        stack.pop_back();
        continue;
      }
      int edge_idx = it->second[f.next++];
      const std::string& to = edges[edge_idx].arg_id;
      auto c = color.find(to);
      if (c == color.end()) {
        color[to] = Grey;
        stack.push_back({to, 0});
      } else if (c->second == Grey) {
        back.push_back(edge_idx);
      }
    }
  }
  return back;
}

} // namespace detail

// Builds the validated per-sentence graph: endpoints must exist and be
// intra-sentence, self-loops are dropped with a note, duplicate
// (trigger, role, arg) edges collapse, and trigger-to-trigger cycles are
// broken by repeatedly dropping, among the back edges found by a
// deterministic DFS pass, the edge with the lexicographically largest
// (trigger span start, role, arg span start) key.
inline RelationGraph build_relation_graph(const Document& doc, int sentence,
                                          const std::vector<Relation>& relations) {
  RelationGraph g;
  g.doc = &doc;
  g.sentence = sentence;
  for (const Mention& m : doc.mentions)
    if (m.sentence == sentence) g.mention_ids.push_back(m.id);

  std::map<std::string, Relation> by_key;
  for (const Relation& r : relations) {
    const Mention* trig = doc.find_mention(r.trigger_id);
    const Mention* arg = doc.find_mention(r.arg_id);
    if (!trig)
      fail(ErrorCode::Structure, "relation '" + r.id + "' references missing trigger '" + r.trigger_id + "'");
    if (!arg)
      fail(ErrorCode::Structure, "relation '" + r.id + "' references missing argument '" + r.arg_id + "'");
    if (trig->sentence != sentence || arg->sentence != sentence) continue;
    if (!trig->is_trigger())
      fail(ErrorCode::Structure, "relation '" + r.id + "' trigger '" + r.trigger_id + "' is not a trigger mention");
    if (r.trigger_id == r.arg_id) {
      g.dropped.push_back("self-loop on '" + r.trigger_id + "' dropped");
      continue;
    }
    auto it = by_key.find(r.key());
    if (it == by_key.end()) by_key.emplace(r.key(), r);
    else if (r.gold_confirmed) it->second.gold_confirmed = true;
  }
  std::vector<Relation> edges;
  edges.reserve(by_key.size());
  for (auto& [k, r] : by_key) edges.push_back(r);

  while (true) {
    std::vector<int> back = detail::find_back_edges(doc, edges);
    if (back.empty()) break;
    int victim = back[0];
    for (int idx : back)
      if (detail::edge_key(doc, edges[victim]) < detail::edge_key(doc, edges[idx])) victim = idx;
    const Relation& r = edges[victim];
    g.dropped.push_back("cycle edge " + r.trigger_id + " -" + r.role + "-> " + r.arg_id + " dropped");
    edges.erase(edges.begin() + victim);
  }

  g.edges = std::move(edges);
  return g;
}

// Bottom-up trigger order: every trigger appears after all triggers reachable
// from it through its argument edges (children first). Ties resolved by
// (span begin, span end, id).
inline std::vector<std::string> topological_trigger_order(const RelationGraph& g) {
  const Document& doc = *g.doc;
  std::vector<std::string> triggers;
  for (const std::string& id : g.mention_ids)
    if (doc.mention(id).is_trigger()) triggers.push_back(id);

  std::map<std::string, int> pending; // unemitted trigger children per trigger
  for (const std::string& id : triggers) pending[id] = 0;
  std::map<std::string, std::vector<std::string>> parents;
  for (const Relation& r : g.edges) {
    if (!doc.mention(r.arg_id).is_trigger()) continue;
    parents[r.arg_id].push_back(r.trigger_id);
    pending[r.trigger_id] += 1;
  }

  auto span_key = [&](const std::string& id) {
    const Mention& m = doc.mention(id);
    return std::make_tuple(m.begin, m.end, m.id);
  };

  std::set<std::pair<std::tuple<int, int, std::string>, std::string>> ready;
  for (const std::string& id : triggers)
    if (pending[id] == 0) ready.insert({span_key(id), id});

  std::vector<std::string> order;
  order.reserve(triggers.size());
  while (!ready.empty()) {
    auto it = ready.begin();
    std::string id = it->second;
    ready.erase(it);
    order.push_back(id);
    auto p = parents.find(id);
    if (p == parents.end()) continue;
    for (const std::string& parent : p->second)
      if (--pending[parent] == 0) ready.insert({span_key(parent), parent});
  }
  if (order.size() != triggers.size())
    fail(ErrorCode::Internal, "cycle among triggers survived graph validation");
  return order;
}

} // namespace evdag
