#pragma once

// Beam-search structured prediction over a trigger's arguments. Each trigger
// owns a buffer of argument entries fronted by a NONE sentinel; actions ADD,
// IGNORE and CONSTRUCT move entries into the partial structure. CONSTRUCT
// terminates a branch and emits an event candidate; candidates are collected
// from every beam slot so overlapping structures survive, and candidates
// whose CONSTRUCT score clears the threshold are fixed as events.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evdag/error.hpp"
#include "evdag/graph.hpp"
#include "evdag/types.hpp"

namespace evdag {

enum class Action : uint8_t { Add = 0, Ignore = 1, Construct = 2 };

inline const char* action_name(Action a) {
  switch (a) {
    case Action::Add: return "ADD";
    case Action::Ignore: return "IGNORE";
    case Action::Construct: return "CONSTRUCT";
  }
  return "?";
}

// One buffer entry: a relation of the trigger plus its resolved target,
// either an entity mention or a previously fixed sub-event.
struct ArgumentEntry {
  Relation relation;
  bool is_event = false;
  std::string event_id;      // fixed sub-event id when is_event
  int rep = -1;              // scorer handle of the sub-event representation
  std::string target_fp;     // canonical fingerprint of the resolved target
  int arg_begin = 0;         // argument mention span, for the canonical order
  int arg_end = 0;
  std::string arg_type;
};

// Buffer positions: 0 is the NONE sentinel, i >= 1 is entries[i-1].
struct TriggerContext {
  std::string trigger_id;
  std::vector<ArgumentEntry> entries; // canonical order
  int positions() const { return (int)entries.size() + 1; }
};

inline bool entry_before(const ArgumentEntry& a, const ArgumentEntry& b) {
  auto key = [](const ArgumentEntry& e) {
    return std::tie(e.arg_begin, e.relation.role, e.target_fp, e.arg_end, e.arg_type,
                    e.relation.arg_id);
  };
  return key(a) < key(b);
}

// Canonical buffer order: NONE first (implicit), then entries by
// (argument span start, role, target fingerprint). Sorting here makes the
// buffer independent of the caller's permutation.
inline TriggerContext make_trigger_context(std::string trigger_id,
                                           std::vector<ArgumentEntry> entries) {
  std::sort(entries.begin(), entries.end(), entry_before);
  return TriggerContext{std::move(trigger_id), std::move(entries)};
}

struct SearchState {
  int next_pos = 0;            // buffer front; positions() - next_pos entries remain
  std::vector<Action> history; // one action per consumed position
  double cum_log_score = 0.0;  // sum of log action scores
  bool terminated = false;     // last action was CONSTRUCT
  int scorer_state = 0;        // scorer handle of the structure embedding
  uint64_t creation_index = 0; // tie-break of last resort

  int structure_size() const { return (int)history.size(); }
  bool buffer_empty(const TriggerContext& ctx) const { return next_pos >= ctx.positions(); }
  std::vector<int> included_entries() const {
    std::vector<int> out;
    for (int p = 0; p < (int)history.size(); ++p)
      if (p > 0 && (history[p] == Action::Add || history[p] == Action::Construct))
        out.push_back(p - 1);
    return out;
  }
};

struct EventCandidate {
  std::string trigger_id;
  std::vector<int> included;   // entry indices, ascending; empty for a no-argument event
  double construct_score = 0;  // sigmoid score of the CONSTRUCT action itself
  int rep = -1;                // scorer handle of the event embedding
  std::vector<Action> history;
};

struct BeamConfig {
  int k = 8;
  double threshold = 0.5;
  bool strict_stop = false;

  void validate() const {
    if (k < 1) fail(ErrorCode::Config, "beam size must be >= 1");
    if (threshold < 0.0 || threshold > 1.0)
      fail(ErrorCode::Config, "action score threshold must be in [0, 1]");
  }
};

// What a scorer returns for one (state, action) expansion. Handles index
// scorer-owned storage; plain test scorers leave them at -1.
struct ScoredAction {
  double prob = 0.5; // in (0, 1)
  int state_rep = 0; // structure embedding of the resulting state
  int event_rep = -1;
  int score_node = -1; // training-time logit node
};

inline SearchState init_state(const TriggerContext&) {
  return SearchState{};
}

inline std::vector<Action> applicable_actions(int position) {
  if (position == 0) return {Action::Ignore, Action::Construct}; // NONE sentinel
  return {Action::Add, Action::Ignore, Action::Construct};
}

// Applies `action` to the buffer front, consuming it into the structure.
// CONSTRUCT additionally emits the candidate of all included entries.
inline std::pair<SearchState, std::optional<EventCandidate>> apply_action(
    const TriggerContext& ctx, const SearchState& state, Action action,
    const ScoredAction& scored, uint64_t creation_index) {
  if (state.terminated)
    fail(ErrorCode::Internal, "action applied to a terminated search state");
  if (state.buffer_empty(ctx))
    fail(ErrorCode::Internal, "action applied to a state with an empty buffer");
  if (state.next_pos == 0 && action == Action::Add)
    fail(ErrorCode::Internal, "ADD is not applicable to the NONE sentinel");
  if (!(scored.prob > 0.0 && scored.prob < 1.0))
    fail(ErrorCode::Internal, "action score outside (0, 1)");

  SearchState next = state;
  next.history.push_back(action);
  next.next_pos += 1;
  next.cum_log_score += std::log(scored.prob);
  next.scorer_state = scored.state_rep;
  next.creation_index = creation_index;

  std::optional<EventCandidate> candidate;
  if (action == Action::Construct) {
    next.terminated = true;
    EventCandidate c;
    c.trigger_id = ctx.trigger_id;
    c.included = next.included_entries();
    c.construct_score = scored.prob;
    c.rep = scored.event_rep;
    c.history = next.history;
    candidate = std::move(c);
  }
  return {std::move(next), std::move(candidate)};
}

namespace detail {

inline int action_rank(Action a) { return (int)a; } // ADD < IGNORE < CONSTRUCT

struct RankedExpansion {
  SearchState state;
  std::optional<EventCandidate> candidate;
};

inline bool expansion_before(const RankedExpansion& a, const RankedExpansion& b) {
  if (a.state.cum_log_score != b.state.cum_log_score)
    return a.state.cum_log_score > b.state.cum_log_score;
  int ra = action_rank(a.state.history.back());
  int rb = action_rank(b.state.history.back());
  if (ra != rb) return ra < rb;
  return a.state.creation_index < b.state.creation_index;
}

} // namespace detail

// One synchronous beam step: scores every (state, applicable action) pair
// exactly once, ranks expansions by cumulative log score, keeps the top k.
// Kept CONSTRUCT expansions emit their candidates and leave the beam; kept
// states whose buffer ran out complete silently. Both are absent from the
// returned survivors.
template <class Scorer>
std::pair<std::vector<SearchState>, std::vector<EventCandidate>> beam_step(
    const TriggerContext& ctx, const std::vector<SearchState>& states, Scorer& scorer,
    int k, uint64_t& creation_counter) {
  std::vector<detail::RankedExpansion> pool;
  for (const SearchState& s : states) {
    for (Action a : applicable_actions(s.next_pos)) {
      ScoredAction scored = scorer.score_action(ctx, s, a);
      auto [child, candidate] = apply_action(ctx, s, a, scored, creation_counter++);
      pool.push_back({std::move(child), std::move(candidate)});
    }
  }
  std::sort(pool.begin(), pool.end(), detail::expansion_before);
  if ((int)pool.size() > k) pool.resize(k);

  std::vector<SearchState> survivors;
  std::vector<EventCandidate> emitted;
  for (auto& exp : pool) {
    if (exp.candidate) {
      emitted.push_back(std::move(*exp.candidate));
    } else if (!exp.state.buffer_empty(ctx)) {
      survivors.push_back(std::move(exp.state));
    }
  }
  return {std::move(survivors), std::move(emitted)};
}

// Runs the beam search for one trigger to exhaustion and fixes every
// candidate, from any beam slot, whose CONSTRUCT score exceeds the threshold.
// Candidates are deduplicated by their included-entry set.
template <class Scorer>
std::vector<EventCandidate> detect_events_for_trigger(const TriggerContext& ctx,
                                                      const BeamConfig& config,
                                                      Scorer& scorer) {
  config.validate();
  uint64_t creation_counter = 0;
  std::vector<SearchState> states{init_state(ctx)};
  std::vector<EventCandidate> fixed;
  std::map<std::vector<int>, bool> seen;
  while (!states.empty()) {
    auto [survivors, emitted] = beam_step(ctx, states, scorer, config.k, creation_counter);
    for (EventCandidate& c : emitted) {
      if (!(c.construct_score > config.threshold)) continue;
      if (seen.emplace(c.included, true).second) fixed.push_back(std::move(c));
    }
    states = std::move(survivors);
  }
  return fixed;
}

struct BruteForceCandidate {
  std::vector<int> included;        // ascending entry indices
  std::vector<Action> actions;      // the unique realizing action sequence
};

// Exhaustive oracle: all 2^n argument subsets with their unique realizing
// action sequences. ADD for non-final members, IGNORE for non-members before
// the final member, CONSTRUCT at the final member; the empty subset is
// CONSTRUCT at the NONE sentinel.
inline std::vector<BruteForceCandidate> enumerate_candidates_bruteforce(
    const TriggerContext& ctx) {
  int n = (int)ctx.entries.size();
  if (n > 20)
    fail(ErrorCode::Config,
         "brute-force enumeration refused for " + std::to_string(n) + " entries (limit 20)");
  std::vector<BruteForceCandidate> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << n); ++mask) {
    BruteForceCandidate c;
    for (int i = 0; i < n; ++i)
      if (mask & (std::uint32_t{1} << i)) c.included.push_back(i);
    if (c.included.empty()) {
      c.actions = {Action::Construct};
    } else {
      int last = c.included.back();
      c.actions.push_back(Action::Ignore); // NONE
      for (int i = 0; i < last; ++i)
        c.actions.push_back(mask & (std::uint32_t{1} << i) ? Action::Add : Action::Ignore);
      c.actions.push_back(Action::Construct);
    }
    out.push_back(std::move(c));
  }
  return out;
}

// Forced replay of an action sequence through the transition system; used by
// the oracle round trip. Scores are irrelevant, a fixed pseudo-probability
// keeps the state machinery honest.
inline EventCandidate replay_actions(const TriggerContext& ctx,
                                     const std::vector<Action>& actions) {
  SearchState state = init_state(ctx);
  std::optional<EventCandidate> candidate;
  uint64_t counter = 0;
  for (Action a : actions) {
    ScoredAction scored;
    scored.prob = 0.5;
    scored.state_rep = state.scorer_state;
    auto [next, cand] = apply_action(ctx, state, a, scored, counter++);
    state = std::move(next);
    if (cand) { candidate = std::move(cand); break; }
  }
  if (!candidate)
    fail(ErrorCode::Internal, "replayed action sequence did not end in CONSTRUCT");
  return std::move(*candidate);
}

} // namespace evdag
