#pragma once

// Core annotation types shared across the library: sentences with token
// offsets, entity/trigger mentions, role-labeled relations, and events whose
// arguments are entities or other events (DAG-shaped via event references).

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "evdag/error.hpp"

namespace evdag {

struct Token {
  std::string surface;
  int begin = 0; // document-absolute character offsets, [begin, end)
  int end = 0;
};

struct Sentence {
  std::string id;
  int begin = 0;
  int end = 0;
  std::string text; // slice of the document text
  std::vector<Token> tokens;
};

enum class MentionKind : uint8_t { Entity, Trigger };

struct Mention {
  std::string id; // T-id in standoff
  MentionKind kind = MentionKind::Entity;
  std::string type; // semantic label, e.g. Gene_expression
  int begin = 0;
  int end = 0;
  int sentence = -1; // index into Document::sentences
  std::string text;

  bool is_trigger() const { return kind == MentionKind::Trigger; }
};

enum class Provenance : uint8_t { Predicted, GoldDecomposed };

// A directed, role-labeled trigger -> argument edge. Identity for merging and
// set semantics is the (trigger_id, role, arg_id) key, not the id.
struct Relation {
  std::string id;
  std::string trigger_id;
  std::string role;
  std::string arg_id;
  Provenance provenance = Provenance::Predicted;
  bool gold_confirmed = false; // set when a predicted relation also appears in the gold decomposition

  std::string key() const { return trigger_id + "\x1f" + role + "\x1f" + arg_id; }
};

struct EventArg {
  std::string role;
  bool is_event = false; // false: target_id is a mention id, true: an event id
  std::string target_id;

  bool operator==(const EventArg& o) const {
    return role == o.role && is_event == o.is_event && target_id == o.target_id;
  }
};

// A trigger plus role-labeled arguments; event-valued arguments make the
// structure nested. The event-reference closure must stay acyclic.
struct Event {
  std::string id; // E-id
  std::string trigger_id;
  std::vector<EventArg> args;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Sentence> sentences;
  std::vector<Mention> mentions; // entities and triggers
  std::vector<Event> events;     // gold events when available

  std::unordered_map<std::string, int> mention_index;
  std::unordered_map<std::string, int> event_index;

  void rebuild_indexes() {
    mention_index.clear();
    event_index.clear();
    for (int i = 0; i < (int)mentions.size(); ++i) mention_index[mentions[i].id] = i;
    for (int i = 0; i < (int)events.size(); ++i) event_index[events[i].id] = i;
  }

  const Mention* find_mention(const std::string& id) const {
    auto it = mention_index.find(id);
    return it == mention_index.end() ? nullptr : &mentions[it->second];
  }

  const Mention& mention(const std::string& id) const {
    const Mention* m = find_mention(id);
    if (!m) fail(ErrorCode::Structure, "unknown mention id '" + id + "' in document '" + this->id + "'");
    return *m;
  }

  const Event* find_event(const std::string& id) const {
    auto it = event_index.find(id);
    return it == event_index.end() ? nullptr : &events[it->second];
  }

  const Event& event(const std::string& id) const {
    const Event* e = find_event(id);
    if (!e) fail(ErrorCode::Structure, "unknown event id '" + id + "' in document '" + this->id + "'");
    return *e;
  }

  // Tokens of `sentence` overlapping the character span [begin, end).
  std::vector<int> tokens_in_span(int sentence, int begin, int end) const {
    std::vector<int> out;
    const Sentence& s = sentences.at(sentence);
    for (int i = 0; i < (int)s.tokens.size(); ++i) {
      const Token& t = s.tokens[i];
      if (t.begin < end && t.end > begin) out.push_back(i);
    }
    return out;
  }
};

inline std::string mention_fingerprint(const Mention& m) {
  return m.type + "@" + std::to_string(m.begin) + ":" + std::to_string(m.end);
}

// Builds a canonical event fingerprint from the trigger and already-resolved
// argument parts ("role>target_fp"); parts are sorted so the result is
// independent of argument order.
inline std::string compose_event_fingerprint(const Mention& trigger,
                                             std::vector<std::string> arg_parts) {
  std::sort(arg_parts.begin(), arg_parts.end());
  std::string fp = "[" + mention_fingerprint(trigger);
  for (const auto& p : arg_parts) fp += "|" + p;
  fp += "]";
  return fp;
}

// Canonical fingerprint of an event's resolved structure: trigger (type,span)
// plus recursively resolved arguments sorted into a canonical order. Two
// events are structurally equal iff their fingerprints match. `doc` must
// contain every transitively referenced event (closure requirement).
inline std::string event_fingerprint(const Document& doc, const Event& ev) {
  std::vector<std::string> parts;
  parts.reserve(ev.args.size());
  for (const EventArg& a : ev.args) {
    if (a.is_event) {
      parts.push_back(a.role + ">" + event_fingerprint(doc, doc.event(a.target_id)));
    } else {
      parts.push_back(a.role + ">" + mention_fingerprint(doc.mention(a.target_id)));
    }
  }
  return compose_event_fingerprint(doc.mention(ev.trigger_id), std::move(parts));
}

// Fingerprint of a single resolved argument target (role-agnostic); used for
// the shared-argument overlap test.
inline std::string target_fingerprint(const Document& doc, const EventArg& a) {
  if (a.is_event) return event_fingerprint(doc, doc.event(a.target_id));
  return mention_fingerprint(doc.mention(a.target_id));
}

} // namespace evdag
