#pragma once

// Gold action sequences. For every gold event the sequence over the
// canonical buffer is: IGNORE the NONE sentinel, ADD included entries before
// the last included one, IGNORE excluded entries before it, CONSTRUCT at the
// last included entry; a no-argument event is CONSTRUCT at NONE. Nested gold
// arguments resolve to the entry carrying the matching gold sub-event
// (teacher forcing), so derivation runs bottom-up and an underivable
// sub-event poisons its parents.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "evdag/graph.hpp"
#include "evdag/search.hpp"
#include "evdag/types.hpp"

namespace evdag {

struct GoldSequence {
  std::string gold_event_id;
  std::vector<Action> actions; // aligned to the canonical buffer, ends at CONSTRUCT
  std::vector<int> included;   // ctx entry indices, ascending
};

struct TriggerPlan {
  TriggerContext ctx; // event entries reference gold sub-event ids; reps unbound
  std::vector<GoldSequence> golds;
};

struct SentencePlan {
  int sentence = -1;
  std::vector<TriggerPlan> triggers; // bottom-up trigger order
  std::map<std::string, int> plan_of_trigger;
  std::map<std::string, int> plan_of_gold; // gold event id -> trigger plan index
  std::vector<std::pair<std::string, std::string>> underivable; // (event id, reason)
  std::set<std::string> derivable;
};

inline std::vector<Action> actions_for_positions(const std::vector<int>& positions) {
  std::vector<Action> actions;
  if (positions.empty()) return {Action::Construct}; // CONSTRUCT at NONE
  int last = positions.back();
  std::set<int> inc(positions.begin(), positions.end());
  actions.push_back(Action::Ignore); // NONE
  for (int p = 1; p < last; ++p)
    actions.push_back(inc.count(p) ? Action::Add : Action::Ignore);
  actions.push_back(Action::Construct);
  return actions;
}

// Derives the per-trigger buffers and gold sequences for one sentence graph.
// Gold events that cannot be mapped onto the graph's entries are recorded as
// underivable with a reason instead of failing the run.
inline SentencePlan derive_sentence_plan(const Document& doc, const RelationGraph& g) {
  SentencePlan plan;
  plan.sentence = g.sentence;

  std::map<std::string, std::vector<int>> golds_by_trigger; // trigger id -> doc.events idx
  for (int i = 0; i < (int)doc.events.size(); ++i) {
    const Mention* trig = doc.find_mention(doc.events[i].trigger_id);
    if (trig && trig->sentence == g.sentence) golds_by_trigger[trig->id].push_back(i);
  }

  for (const std::string& trigger_id : topological_trigger_order(g)) {
    TriggerPlan tp;
    std::vector<ArgumentEntry> entries;
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
      auto it = golds_by_trigger.find(arg.id);
      if (it == golds_by_trigger.end()) continue;
      for (int gi : it->second) {
        const Event& sub = doc.events[gi];
        if (!plan.derivable.count(sub.id)) continue; // poisoned sub-event
        ArgumentEntry e;
        e.relation = r;
        e.is_event = true;
        e.event_id = sub.id;
        e.target_fp = event_fingerprint(doc, sub);
        e.arg_begin = arg.begin;
        e.arg_end = arg.end;
        e.arg_type = arg.type;
        entries.push_back(std::move(e));
      }
    }
    tp.ctx = make_trigger_context(trigger_id, std::move(entries));

    auto it = golds_by_trigger.find(trigger_id);
    if (it != golds_by_trigger.end()) {
      for (int gi : it->second) {
        const Event& gev = doc.events[gi];
        std::vector<int> positions;
        std::set<int> used;
        std::string reason;
        for (const EventArg& a : gev.args) {
          int found = -1;
          for (int p = 1; p <= (int)tp.ctx.entries.size(); ++p) {
            if (used.count(p)) continue;
            const ArgumentEntry& e = tp.ctx.entries[p - 1];
            if (e.relation.role != a.role || e.is_event != a.is_event) continue;
            if (a.is_event ? (e.event_id == a.target_id) : (e.relation.arg_id == a.target_id)) {
              found = p;
              break;
            }
          }
          if (found < 0) {
            const Event* sub = a.is_event ? doc.find_event(a.target_id) : nullptr;
            bool edge_exists = false;
            if (sub) {
              for (const Relation& r : g.edges)
                if (r.trigger_id == gev.trigger_id && r.role == a.role &&
                    r.arg_id == sub->trigger_id) { edge_exists = true; break; }
            }
            if (sub && edge_exists)
              reason = "sub-event '" + a.target_id + "' is underivable";
            else
              reason = "no relation (" + gev.trigger_id + ", " + a.role + ", " + a.target_id +
                       ") in the graph";
            break;
          }
          used.insert(found);
          positions.push_back(found);
        }
        if (!reason.empty()) {
          plan.underivable.emplace_back(gev.id, reason);
          continue;
        }
        std::sort(positions.begin(), positions.end());
        GoldSequence gs;
        gs.gold_event_id = gev.id;
        gs.actions = actions_for_positions(positions);
        for (int p : positions) gs.included.push_back(p - 1);
        plan.derivable.insert(gev.id);
        plan.plan_of_gold[gev.id] = (int)plan.triggers.size();
        tp.golds.push_back(std::move(gs));
      }
    }
    plan.plan_of_trigger[trigger_id] = (int)plan.triggers.size();
    plan.triggers.push_back(std::move(tp));
  }
  return plan;
}

// Structural forced replay of every derivable gold sequence; the returned
// events reference gold sub-event ids, so comparing them against the gold
// set directly measures replay fidelity.
inline std::vector<Event> replay_sentence_plan(const Document& doc, const SentencePlan& plan) {
  std::vector<Event> out;
  for (const TriggerPlan& tp : plan.triggers) {
    for (const GoldSequence& gs : tp.golds) {
      EventCandidate cand = replay_actions(tp.ctx, gs.actions);
      Event ev;
      ev.id = gs.gold_event_id;
      ev.trigger_id = tp.ctx.trigger_id;
      for (int idx : cand.included) {
        const ArgumentEntry& e = tp.ctx.entries[idx];
        EventArg a;
        a.role = e.relation.role;
        a.is_event = e.is_event;
        a.target_id = e.is_event ? e.event_id : e.relation.arg_id;
        ev.args.push_back(std::move(a));
      }
      out.push_back(std::move(ev));
    }
  }
  return out;
}

struct DerivabilityReport {
  long gold_total = 0;
  long derivable = 0;
  long oversized_triggers = 0; // buffers too large for an exhaustive-beam confirmation
  std::vector<std::pair<std::string, std::string>> underivable; // (doc/event, reason)

  // Recall achievable at threshold zero with an exhaustive beam: events whose
  // relations survived into the graph are exactly the constructible ones.
  double upper_bound_recall() const {
    return gold_total > 0 ? (double)derivable / (double)gold_total : 1.0;
  }
};

inline void accumulate_derivability(DerivabilityReport& rep, const std::string& doc_id,
                                    const SentencePlan& plan) {
  rep.derivable += (long)plan.derivable.size();
  rep.gold_total += (long)(plan.derivable.size() + plan.underivable.size());
  for (const auto& [id, reason] : plan.underivable)
    rep.underivable.emplace_back(doc_id + "/" + id, reason);
  for (const TriggerPlan& tp : plan.triggers)
    if ((int)tp.ctx.entries.size() > 16) ++rep.oversized_triggers;
}

} // namespace evdag
