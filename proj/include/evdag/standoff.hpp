#pragma once

// BioNLP-style standoff annotation: <id>.txt holds the text, <id>.a1 the
// given entities, <id>.a2 triggers and events. Sentences are split on
// newlines and on ". " followed by an uppercase letter; tokens are
// whitespace-separated with leading/trailing punctuation split off.
// Annotations crossing sentence boundaries are dropped with a warning
// (inter-sentence structures are out of scope), as are self-referential
// events.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evdag/error.hpp"
#include "evdag/types.hpp"

namespace evdag {

inline bool is_strippable_punct(char c) {
  static const std::string punct = ".,;:!?()[]{}\"'";
  return punct.find(c) != std::string::npos;
}

inline std::vector<std::pair<int, int>> segment_sentences(const std::string& text) {
  std::vector<std::pair<int, int>> spans;
  int n = (int)text.size();
  int start = 0;
  auto flush = [&](int end, int next) {
    while (start < end && std::isspace((unsigned char)text[start])) ++start;
    int e = end;
    while (e > start && std::isspace((unsigned char)text[e - 1])) --e;
    if (e > start) spans.emplace_back(start, e);
    start = next;
  };
  for (int i = 0; i < n; ++i) {
    if (text[i] == '\n') {
      flush(i, i + 1);
    } else if (text[i] == '.' && i + 2 < n && text[i + 1] == ' ' &&
               std::isupper((unsigned char)text[i + 2])) {
      flush(i + 1, i + 2);
    }
  }
  flush(n, n);
  return spans;
}

inline std::vector<Token> tokenize_span(const std::string& text, int begin, int end) {
  std::vector<Token> tokens;
  auto push = [&](int b, int e) {
    if (e > b) tokens.push_back(Token{text.substr(b, e - b), b, e});
  };
  int i = begin;
  while (i < end) {
    while (i < end && std::isspace((unsigned char)text[i])) ++i;
    int j = i;
    while (j < end && !std::isspace((unsigned char)text[j])) ++j;
    if (j == i) break;
    int b = i, e = j;
    while (b < e && is_strippable_punct(text[b])) { push(b, b + 1); ++b; }
    int core_end = e;
    while (core_end > b && is_strippable_punct(text[core_end - 1])) --core_end;
    push(b, core_end);
    for (int k = core_end; k < e; ++k) push(k, k + 1);
    i = j;
  }
  return tokens;
}

struct StandoffCorpus {
  std::vector<Document> docs;
  std::vector<std::string> warnings;
};

namespace detail {

struct RawEvent {
  std::string id;
  std::string type;
  std::string trigger_id;
  std::vector<std::pair<std::string, std::string>> args; // (role, T/E id)
  std::string origin;                                    // file:line for messages
};

inline void parse_mention_line(const std::string& line, const std::string& origin,
                               MentionKind kind, Document& doc) {
  std::vector<std::string> fields;
  std::string part;
  std::istringstream ss(line);
  while (std::getline(ss, part, '\t')) fields.push_back(part);
  if (fields.size() < 3)
    fail(ErrorCode::Parse, origin + ": expected 'id<TAB>Type start end<TAB>text'");
  Mention m;
  m.id = fields[0];
  m.kind = kind;
  std::istringstream mid(fields[1]);
  std::string type, s_begin, s_end, extra;
  if (!(mid >> type >> s_begin >> s_end) || (mid >> extra))
    fail(ErrorCode::Parse, origin + ": bad type/span field '" + fields[1] + "'");
  if (s_begin.find(';') != std::string::npos || s_end.find(';') != std::string::npos)
    fail(ErrorCode::Parse, origin + ": discontinuous spans are not supported");
  try {
    m.type = type;
    m.begin = std::stoi(s_begin);
    m.end = std::stoi(s_end);
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, origin + ": non-numeric span in '" + fields[1] + "'");
  }
  if (m.begin < 0 || m.end > (int)doc.text.size() || m.begin >= m.end)
    fail(ErrorCode::Integrity, origin + ": span " + std::to_string(m.begin) + ".." +
                                   std::to_string(m.end) + " outside document text");
  m.text = fields[2];
  if (doc.text.substr(m.begin, m.end - m.begin) != m.text)
    fail(ErrorCode::Integrity, origin + ": span text mismatch, document has '" +
                                   doc.text.substr(m.begin, m.end - m.begin) + "', line has '" +
                                   m.text + "'");
  if (doc.mention_index.count(m.id))
    fail(ErrorCode::Integrity, origin + ": duplicate mention id '" + m.id + "'");
  doc.mention_index[m.id] = (int)doc.mentions.size();
  doc.mentions.push_back(std::move(m));
}

inline RawEvent parse_event_line(const std::string& line, const std::string& origin) {
  std::vector<std::string> fields;
  std::string part;
  std::istringstream ss(line);
  while (std::getline(ss, part, '\t')) fields.push_back(part);
  if (fields.size() < 2) fail(ErrorCode::Parse, origin + ": expected 'id<TAB>Type:Tid ...'");
  RawEvent ev;
  ev.id = fields[0];
  ev.origin = origin;
  std::istringstream body(fields[1]);
  std::string item;
  bool first = true;
  while (body >> item) {
    size_t colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= item.size())
      fail(ErrorCode::Parse, origin + ": malformed argument '" + item + "'");
    std::string left = item.substr(0, colon);
    std::string right = item.substr(colon + 1);
    if (first) {
      ev.type = left;
      ev.trigger_id = right;
      first = false;
    } else {
      ev.args.emplace_back(left, right);
    }
  }
  if (first) fail(ErrorCode::Parse, origin + ": event line without a trigger");
  return ev;
}

} // namespace detail

// Reads one document given its .txt path; .a1 must exist, .a2 is optional.
inline Document read_standoff_document(const std::filesystem::path& txt_path,
                                       std::vector<std::string>& warnings) {
  namespace fs = std::filesystem;
  Document doc;
  doc.id = txt_path.stem().string();
  {
    std::ifstream in(txt_path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + txt_path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    doc.text = ss.str();
  }
  for (auto [b, e] : segment_sentences(doc.text)) {
    Sentence s;
    s.id = doc.id + ":" + std::to_string(doc.sentences.size());
    s.begin = b;
    s.end = e;
    s.text = doc.text.substr(b, e - b);
    s.tokens = tokenize_span(doc.text, b, e);
    doc.sentences.push_back(std::move(s));
  }

  auto read_lines = [](const fs::path& p) {
    std::vector<std::string> lines;
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + p.string() + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    return lines;
  };

  fs::path a1 = txt_path;
  a1.replace_extension(".a1");
  if (!fs::exists(a1)) fail(ErrorCode::Io, "missing annotation file '" + a1.string() + "'");
  {
    int lineno = 0;
    for (const std::string& line : read_lines(a1)) {
      ++lineno;
      if (line.empty()) continue;
      std::string origin = a1.filename().string() + ":" + std::to_string(lineno);
      if (line[0] != 'T') fail(ErrorCode::Parse, origin + ": expected a T line in .a1");
      detail::parse_mention_line(line, origin, MentionKind::Entity, doc);
    }
  }

  std::vector<detail::RawEvent> raw_events;
  fs::path a2 = txt_path;
  a2.replace_extension(".a2");
  if (fs::exists(a2)) {
    int lineno = 0;
    for (const std::string& line : read_lines(a2)) {
      ++lineno;
      if (line.empty()) continue;
      std::string origin = a2.filename().string() + ":" + std::to_string(lineno);
      if (line[0] == 'T') {
        detail::parse_mention_line(line, origin, MentionKind::Trigger, doc);
      } else if (line[0] == 'E') {
        raw_events.push_back(detail::parse_event_line(line, origin));
      } else if (line[0] == 'A' || line[0] == 'M' || line[0] == '*' || line[0] == '#') {
        warnings.push_back(origin + ": ignoring unsupported annotation line");
      } else {
        fail(ErrorCode::Parse, origin + ": unrecognized line '" + line + "'");
      }
    }
  }

  // Sentence assignment; mentions crossing a boundary are dropped.
  std::set<std::string> dropped_mentions;
  {
    std::vector<Mention> kept;
    for (Mention& m : doc.mentions) {
      int found = -1;
      for (int si = 0; si < (int)doc.sentences.size(); ++si) {
        const Sentence& s = doc.sentences[si];
        if (m.begin >= s.begin && m.end <= s.end) { found = si; break; }
      }
      if (found < 0) {
        warnings.push_back(doc.id + ": mention '" + m.id +
                           "' crosses sentence bounds and was dropped");
        dropped_mentions.insert(m.id);
        continue;
      }
      m.sentence = found;
      kept.push_back(std::move(m));
    }
    doc.mentions = std::move(kept);
    doc.mention_index.clear();
    for (int i = 0; i < (int)doc.mentions.size(); ++i)
      doc.mention_index[doc.mentions[i].id] = i;
  }

  // Resolve events: the trigger must exist with a matching type; all mention
  // arguments must share the trigger's sentence; event references must
  // resolve to kept events without cycles.
  std::map<std::string, const detail::RawEvent*> raw_by_id;
  for (const auto& ev : raw_events) {
    if (raw_by_id.count(ev.id))
      fail(ErrorCode::Integrity, ev.origin + ": duplicate event id '" + ev.id + "'");
    raw_by_id[ev.id] = &ev;
  }

  enum class Resolution { Unknown, Kept, Dropped };
  std::map<std::string, Resolution> state;
  std::vector<const detail::RawEvent*> order;

  // Depth-first resolution; a cycle or a dropped dependency drops the event.
  std::function<Resolution(const std::string&, std::set<std::string>&)> resolve =
      [&](const std::string& id, std::set<std::string>& on_path) -> Resolution {
    auto st = state.find(id);
    if (st != state.end() && st->second != Resolution::Unknown) return st->second;
    auto raw_it = raw_by_id.find(id);
    if (raw_it == raw_by_id.end()) return Resolution::Dropped;
    const detail::RawEvent& ev = *raw_it->second;
    if (on_path.count(id)) {
      warnings.push_back(ev.origin + ": self-referential event cycle at '" + id +
                         "' dropped");
      return state[id] = Resolution::Dropped;
    }
    on_path.insert(id);
    Resolution result = Resolution::Kept;
    const Mention* trig = doc.find_mention(ev.trigger_id);
    if (!trig && !dropped_mentions.count(ev.trigger_id))
      fail(ErrorCode::Structure,
           ev.origin + ": unknown trigger id '" + ev.trigger_id + "'");
    if (!trig) {
      warnings.push_back(ev.origin + ": trigger '" + ev.trigger_id + "' was dropped, event '" +
                         ev.id + "' dropped");
      result = Resolution::Dropped;
    } else if (!trig->is_trigger()) {
      fail(ErrorCode::Structure, ev.origin + ": event trigger '" + ev.trigger_id +
                                     "' is an entity, not a trigger");
    } else if (trig->type != ev.type) {
      fail(ErrorCode::Integrity, ev.origin + ": event type '" + ev.type +
                                     "' does not match trigger type '" + trig->type + "'");
    }
    if (result == Resolution::Kept) {
      for (const auto& [role, target] : ev.args) {
        if (!target.empty() && target[0] == 'E') {
          if (resolve(target, on_path) != Resolution::Kept) {
            warnings.push_back(ev.origin + ": argument event '" + target +
                               "' unavailable, event '" + ev.id + "' dropped");
            result = Resolution::Dropped;
            break;
          }
          const Mention* sub_trig = doc.find_mention(raw_by_id[target]->trigger_id);
          if (!sub_trig || sub_trig->sentence != trig->sentence) {
            warnings.push_back(ev.origin + ": event '" + ev.id +
                               "' crosses sentence bounds and was dropped");
            result = Resolution::Dropped;
            break;
          }
        } else {
          const Mention* arg = doc.find_mention(target);
          if (!arg) {
            if (dropped_mentions.count(target)) {
              warnings.push_back(ev.origin + ": argument '" + target +
                                 "' was dropped, event '" + ev.id + "' dropped");
              result = Resolution::Dropped;
              break;
            }
            fail(ErrorCode::Structure,
                 ev.origin + ": unknown argument id '" + target + "'");
          }
          if (arg->sentence != trig->sentence) {
            warnings.push_back(ev.origin + ": event '" + ev.id +
                               "' crosses sentence bounds and was dropped");
            result = Resolution::Dropped;
            break;
          }
        }
      }
    }
    on_path.erase(id);
    state[id] = result;
    if (result == Resolution::Kept) order.push_back(&ev);
    return result;
  };
  for (const auto& ev : raw_events) {
    std::set<std::string> on_path;
    resolve(ev.id, on_path);
  }

  for (const detail::RawEvent* raw : order) {
    Event ev;
    ev.id = raw->id;
    ev.trigger_id = raw->trigger_id;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [role, target] : raw->args) {
      if (!seen.insert({role, target}).second) {
        warnings.push_back(raw->origin + ": duplicate argument (" + role + ", " + target +
                           ") collapsed");
        continue;
      }
      EventArg a;
      a.role = role;
      a.is_event = !target.empty() && target[0] == 'E';
      a.target_id = target;
      ev.args.push_back(std::move(a));
    }
    doc.event_index[ev.id] = (int)doc.events.size();
    doc.events.push_back(std::move(ev));
  }
  return doc;
}

inline StandoffCorpus read_standoff(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) fail(ErrorCode::Io, "'" + dir + "' is not a directory");
  std::vector<fs::path> txts;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      txts.push_back(entry.path());
  std::sort(txts.begin(), txts.end());
  StandoffCorpus corpus;
  for (const auto& p : txts) corpus.docs.push_back(read_standoff_document(p, corpus.warnings));
  return corpus;
}

// Writes .txt/.a1/.a2 for every document. Trigger mentions keep their ids and
// precede the events; events are renamed E1..En in topological order so a
// sub-event line always precedes its parents.
inline void write_standoff(const std::string& dir, const std::vector<Document>& docs) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) fail(ErrorCode::Io, "cannot create output directory '" + dir + "'");
  for (const Document& doc : docs) {
    auto open = [&](const std::string& ext) {
      fs::path p = fs::path(dir) / (doc.id + ext);
      std::ofstream out(p, std::ios::binary);
      if (!out) fail(ErrorCode::Io, "cannot write '" + p.string() + "'");
      return out;
    };
    {
      std::ofstream out = open(".txt");
      out << doc.text;
    }
    {
      std::ofstream out = open(".a1");
      for (const Mention& m : doc.mentions)
        if (!m.is_trigger())
          out << m.id << '\t' << m.type << ' ' << m.begin << ' ' << m.end << '\t' << m.text
              << '\n';
    }
    {
      std::ofstream out = open(".a2");
      for (const Mention& m : doc.mentions)
        if (m.is_trigger())
          out << m.id << '\t' << m.type << ' ' << m.begin << ' ' << m.end << '\t' << m.text
              << '\n';

      // topological emission order over event references
      std::map<std::string, int> pending;
      std::map<std::string, std::vector<int>> parents_of;
      for (int i = 0; i < (int)doc.events.size(); ++i) {
        int deps = 0;
        for (const EventArg& a : doc.events[i].args)
          if (a.is_event) {
            ++deps;
            parents_of[a.target_id].push_back(i);
          }
        pending[doc.events[i].id] = deps;
      }
      std::vector<int> ready, order;
      for (int i = 0; i < (int)doc.events.size(); ++i)
        if (pending[doc.events[i].id] == 0) ready.push_back(i);
      while (!ready.empty()) {
        std::sort(ready.begin(), ready.end(), std::greater<int>());
        int i = ready.back();
        ready.pop_back();
        order.push_back(i);
        for (int parent : parents_of[doc.events[i].id])
          if (--pending[doc.events[parent].id] == 0) ready.push_back(parent);
      }
      if (order.size() != doc.events.size())
        fail(ErrorCode::Structure,
             "document '" + doc.id + "' has a cycle among event references");

      std::map<std::string, std::string> new_id;
      for (size_t k = 0; k < order.size(); ++k)
        new_id[doc.events[order[k]].id] = "E" + std::to_string(k + 1);
      for (int i : order) {
        const Event& ev = doc.events[i];
        out << new_id[ev.id] << '\t' << doc.mention(ev.trigger_id).type << ':' << ev.trigger_id;
        for (const EventArg& a : ev.args)
          out << ' ' << a.role << ':' << (a.is_event ? new_id[a.target_id] : a.target_id);
        out << '\n';
      }
    }
  }
}

} // namespace evdag
