#pragma once

// Bottom-up per-sentence event detection: triggers are searched in
// topological order; every fixed event of a child trigger becomes one buffer
// entry of its parents (cross-product expansion), carrying the stored event
// representation.

#include <map>
#include <string>
#include <vector>

#include "evdag/graph.hpp"
#include "evdag/search.hpp"
#include "evdag/types.hpp"

namespace evdag {

struct DetectedEvent {
  Event event;
  double construct_score = 0.0;
  int rep = -1; // scorer handle of the event representation
  std::string fp;
};

// Runs the full per-trigger searches over one validated sentence graph.
// Entries whose argument trigger fixed no events are dropped; with
// strict_stop the parent trigger search is skipped entirely. Structurally
// duplicate events are deduplicated. Event ids are `id_prefix` plus a
// document-scoped counter.
template <class Scorer>
std::vector<DetectedEvent> detect_events_sentence(const RelationGraph& g,
                                                  const BeamConfig& config, Scorer& scorer,
                                                  int& id_counter,
                                                  const std::string& id_prefix = "P") {
  config.validate();
  const Document& doc = *g.doc;
  std::vector<DetectedEvent> out;
  std::map<std::string, std::vector<int>> fixed_by_trigger; // trigger id -> out indices
  std::map<std::string, int> seen_fp;                       // structural dedup

  for (const std::string& trigger_id : topological_trigger_order(g)) {
    std::vector<ArgumentEntry> entries;
    bool skip = false;
    for (const Relation& r : g.edges) {
      if (r.trigger_id != trigger_id) continue;
      const Mention& arg = doc.mention(r.arg_id);
      if (!arg.is_trigger()) {
        ArgumentEntry e;
        e.relation = r;
        e.target_fp = mention_fingerprint(arg);
        e.arg_begin = arg.begin;
        e.arg_end = arg.end;
        e.arg_type = arg.type;
        entries.push_back(std::move(e));
        continue;
      }
      auto it = fixed_by_trigger.find(arg.id);
      if (it == fixed_by_trigger.end() || it->second.empty()) {
        // the flat event was not detected, so this nested branch cannot be
        if (config.strict_stop) { skip = true; break; }
        continue;
      }
      for (int sub : it->second) {
        ArgumentEntry e;
        e.relation = r;
        e.is_event = true;
        e.event_id = out[sub].event.id;
        e.rep = out[sub].rep;
        e.target_fp = out[sub].fp;
        e.arg_begin = arg.begin;
        e.arg_end = arg.end;
        e.arg_type = arg.type;
        entries.push_back(std::move(e));
      }
    }
    if (skip) continue;

    TriggerContext ctx = make_trigger_context(trigger_id, std::move(entries));
    scorer.begin_trigger(ctx);
    for (const EventCandidate& c : detect_events_for_trigger(ctx, config, scorer)) {
      Event ev;
      ev.trigger_id = trigger_id;
      std::vector<std::string> fp_parts;
      for (int idx : c.included) {
        const ArgumentEntry& e = ctx.entries[idx];
        EventArg a;
        a.role = e.relation.role;
        a.is_event = e.is_event;
        a.target_id = e.is_event ? e.event_id : e.relation.arg_id;
        ev.args.push_back(std::move(a));
        fp_parts.push_back(e.relation.role + ">" + e.target_fp);
      }
      std::string fp = compose_event_fingerprint(doc.mention(trigger_id), std::move(fp_parts));
      if (seen_fp.count(fp)) continue;
      ev.id = id_prefix + std::to_string(++id_counter);
      DetectedEvent d;
      d.event = std::move(ev);
      d.construct_score = c.construct_score;
      d.rep = c.rep;
      d.fp = fp;
      out.push_back(std::move(d));
      int pos = (int)out.size() - 1;
      seen_fp.emplace(out[pos].fp, pos);
      fixed_by_trigger[trigger_id].push_back(pos);
    }
  }
  return out;
}

} // namespace evdag
