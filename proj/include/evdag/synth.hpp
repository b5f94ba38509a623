#pragma once

// Deterministic synthetic corpora for tests and desk-scale runs. Every
// trigger type carries a fixed role signature (accepted roles form the gold
// event, distractor roles never do), so gold structures are a learnable
// function of the relation graph. Nesting comes from trigger chains, overlap
// from shared argument entities and from twin parents over one sub-event.
// Gold events are always derivable from their own decomposed relations, and
// the emitted predicted relations are that decomposition plus distractors.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "evdag/error.hpp"
#include "evdag/eval.hpp"
#include "evdag/graph.hpp"
#include "evdag/kvconfig.hpp"
#include "evdag/standoff.hpp"
#include "evdag/types.hpp"

namespace evdag {

struct SynthSpec {
  int sentences = 100;
  int vocab_fillers = 120;
  int entity_types = 4;
  int trigger_types = 5;
  int max_args = 4;
  std::vector<double> depth_weights = {0.55, 0.30, 0.15}; // index i: chain of depth i+1
  double overlap_rate = 0.4;
  double distractor_rate = 0.6;
  double no_arg_rate = 0.08;
  double extra_flat_rate = 0.35;
  double two_token_rate = 0.2;
  int sentences_per_doc = 2;
  int chains_per_sentence = 1; // independent trigger chains per sentence
  uint64_t seed = 1;

  int max_depth() const { return (int)depth_weights.size(); }

  void validate() const {
    if (sentences < 1) fail(ErrorCode::Config, "synth: sentences must be positive");
    if (sentences_per_doc < 1) fail(ErrorCode::Config, "synth: sentences_per_doc must be positive");
    if (chains_per_sentence < 1)
      fail(ErrorCode::Config, "synth: chains_per_sentence must be positive");
    if (entity_types < 1 || trigger_types < 1)
      fail(ErrorCode::Config, "synth: need at least one entity and one trigger type");
    if (max_args < 1) fail(ErrorCode::Config, "synth: max_args must be positive");
    if (vocab_fillers < 1) fail(ErrorCode::Config, "synth: vocab_fillers must be positive");
    if (depth_weights.empty()) fail(ErrorCode::Config, "synth: depth_weights must be non-empty");
    double sum = 0;
    for (double w : depth_weights) {
      if (w < 0) fail(ErrorCode::Config, "synth: negative depth weight");
      sum += w;
    }
    if (sum <= 0) fail(ErrorCode::Config, "synth: depth weights sum to zero");
    for (double r : {overlap_rate, distractor_rate, no_arg_rate, extra_flat_rate, two_token_rate})
      if (r < 0 || r > 1) fail(ErrorCode::Config, "synth: rates must be in [0, 1]");
    int max_events = max_depth() + (extra_flat_rate > 0 ? 1 : 0) +
                     (max_depth() >= 2 ? 1 : 0) + (no_arg_rate > 0 ? 1 : 0);
    if (overlap_rate > 0 && max_events <= 1)
      fail(ErrorCode::Config,
           "synth: overlap rate " + std::to_string(overlap_rate) +
               " is unreachable with at most one event per sentence");
  }

  static SynthSpec from_kv(const KeyValueFile& kv) {
    kv.require_known_keys({"sentences", "vocab_fillers", "entity_types", "trigger_types",
                           "max_args", "depth_weights", "overlap_rate", "distractor_rate",
                           "no_arg_rate", "extra_flat_rate", "two_token_rate",
                           "sentences_per_doc", "chains_per_sentence", "seed"});
    SynthSpec s;
    s.sentences = (int)kv.get_int("sentences", s.sentences);
    s.vocab_fillers = (int)kv.get_int("vocab_fillers", s.vocab_fillers);
    s.entity_types = (int)kv.get_int("entity_types", s.entity_types);
    s.trigger_types = (int)kv.get_int("trigger_types", s.trigger_types);
    s.max_args = (int)kv.get_int("max_args", s.max_args);
    s.depth_weights = kv.get_double_list("depth_weights", s.depth_weights);
    s.overlap_rate = kv.get_double("overlap_rate", s.overlap_rate);
    s.distractor_rate = kv.get_double("distractor_rate", s.distractor_rate);
    s.no_arg_rate = kv.get_double("no_arg_rate", s.no_arg_rate);
    s.extra_flat_rate = kv.get_double("extra_flat_rate", s.extra_flat_rate);
    s.two_token_rate = kv.get_double("two_token_rate", s.two_token_rate);
    s.sentences_per_doc = (int)kv.get_int("sentences_per_doc", s.sentences_per_doc);
    s.chains_per_sentence = (int)kv.get_int("chains_per_sentence", s.chains_per_sentence);
    s.seed = (uint64_t)kv.get_int("seed", (long long)s.seed);
    s.validate();
    return s;
  }
};

struct SynthCorpus {
  std::vector<Document> docs; // gold events included
  std::map<std::string, std::vector<Relation>> predicted;
  nlohmann::json stats;
};

namespace synthdetail {

inline std::string pseudo_word(int i) {
  static const char* cons = "bcdfglmnprstv";
  static const char* vows = "aeiou";
  std::string w;
  int x = i + 7;
  for (int s = 0; s < 3 || x > 0; ++s) {
    w += cons[x % 13];
    x /= 13;
    w += vows[x % 5];
    x /= 5;
    if (s >= 2 && x == 0) break;
  }
  return w;
}

inline std::vector<std::string> base_entity_types(int n) {
  static const std::vector<std::string> base = {"Protein", "Gene", "Chemical",
                                                "Cell", "Tissue", "Organism"};
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i)
    out.push_back(i < (int)base.size() ? base[i] : "Entity" + std::to_string(i + 1));
  return out;
}

inline std::vector<std::string> base_trigger_types(int n) {
  static const std::vector<std::string> base = {"Regulation", "Expression",   "Binding",
                                                "Activation", "Conversion",   "Transport",
                                                "Localization", "Phosphorylation"};
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i)
    out.push_back(i < (int)base.size() ? base[i] : "TrigType" + std::to_string(i + 1));
  return out;
}

// Every trigger type carries a fixed role signature; an edge belongs to the
// gold event exactly when its role is in the signature. Distractor edges use
// roles outside every signature and argument entities from dedicated
// distractor-only types, so role, trigger type and argument type all carry
// the decision redundantly.
inline std::vector<std::string> accepted_roles(int type_index, int max_args) {
  std::vector<std::string> roles = {"Theme"};
  if (type_index % 2 == 1) roles.push_back("Cause");
  if (type_index % 3 == 0) roles.push_back("Participant");
  if ((int)roles.size() > max_args) roles.resize(max_args);
  return roles;
}

struct SentenceDraft {
  std::vector<std::string> tokens;
  struct DraftMention {
    int first_token, last_token; // inclusive token range
    std::string type;
    bool trigger;
    int level = 0; // triggers: chain level; entities: 0
  };
  std::vector<DraftMention> mentions;
  struct DraftEdge {
    int trigger, target; // mention indices
    std::string role;
    bool gold;
  };
  std::vector<DraftEdge> edges;
  std::vector<int> trigger_order; // mention indices, children before parents
};

} // namespace synthdetail

inline SynthCorpus generate_synthetic_corpus(const SynthSpec& spec) {
  using namespace synthdetail;
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  auto pick = [&](int n) { return (int)(rng() % (uint64_t)n); };

  std::vector<std::string> etypes = base_entity_types(spec.entity_types);
  int core_entity_types = (int)etypes.size();
  etypes.push_back("Location");
  etypes.push_back("Device");
  std::vector<std::string> ttypes = base_trigger_types(spec.trigger_types);
  bool markers = spec.no_arg_rate > 0;
  int marker_type = -1;
  if (markers) {
    ttypes.push_back("Marker");
    marker_type = (int)ttypes.size() - 1;
  }
  std::vector<std::string> fillers(spec.vocab_fillers);
  for (int i = 0; i < spec.vocab_fillers; ++i) fillers[i] = pseudo_word(i);
  std::vector<std::string> adjectives = {"mutant", "human", "novel", "active"};

  std::discrete_distribution<int> depth_dist(spec.depth_weights.begin(),
                                             spec.depth_weights.end());

  auto entity_surface = [&](int type_ix) {
    return ascii_lower(etypes[type_ix]) + "-" + std::to_string(pick(30));
  };
  auto trigger_surface = [&](int type_ix) {
    std::string base = ascii_lower(ttypes[type_ix]);
    return chance(0.5) ? base : base + "s";
  };

  auto build_sentence = [&]() {
    SentenceDraft d;
    auto add_fillers = [&](int lo, int hi) {
      int n = lo + pick(hi - lo + 1);
      for (int i = 0; i < n; ++i) d.tokens.push_back(fillers[pick(spec.vocab_fillers)]);
    };
    auto add_entity = [&](bool distractor_type = false) {
      int type_ix = distractor_type ? core_entity_types + pick((int)etypes.size() - core_entity_types)
                                    : pick(core_entity_types);
      SentenceDraft::DraftMention m;
      m.type = etypes[type_ix];
      m.trigger = false;
      if (chance(spec.two_token_rate)) {
        d.tokens.push_back(adjectives[pick((int)adjectives.size())]);
        m.first_token = (int)d.tokens.size() - 1;
        d.tokens.push_back(entity_surface(type_ix));
        m.last_token = (int)d.tokens.size() - 1;
      } else {
        d.tokens.push_back(entity_surface(type_ix));
        m.first_token = m.last_token = (int)d.tokens.size() - 1;
      }
      d.mentions.push_back(m);
      return (int)d.mentions.size() - 1;
    };
    auto add_trigger = [&](int type_ix, int level) {
      SentenceDraft::DraftMention m;
      m.type = ttypes[type_ix];
      m.trigger = true;
      m.level = level;
      d.tokens.push_back(trigger_surface(type_ix));
      m.first_token = m.last_token = (int)d.tokens.size() - 1;
      d.mentions.push_back(m);
      return (int)d.mentions.size() - 1;
    };

    std::vector<int> used_arg_entities; // entity mention indices already used as args
    auto entity_target = [&]() {
      if (!used_arg_entities.empty() && chance(spec.overlap_rate))
        return used_arg_entities[pick((int)used_arg_entities.size())];
      return add_entity();
    };

    int non_marker_types = (int)ttypes.size() - (markers ? 1 : 0);

    for (int chain_ix = 0; chain_ix < spec.chains_per_sentence; ++chain_ix) {
      int depth = depth_dist(rng) + 1;

      // the chain, children first; level i > 0 takes its Theme from level i-1
      std::vector<int> chain;
      for (int level = 0; level < depth; ++level) {
        add_fillers(1, 2);
        int type_ix = pick(non_marker_types);
        std::vector<std::string> roles = accepted_roles(type_ix, spec.max_args);
        // argument entities appear before the trigger word, reading-order style
        std::vector<std::pair<std::string, int>> args;
        for (const std::string& role : roles) {
          if (role == "Theme" && level > 0) continue; // nested edge added below
          int ent = entity_target();
          args.emplace_back(role, ent);
          used_arg_entities.push_back(ent);
          if (chance(0.5)) add_fillers(0, 1);
        }
        int trig = add_trigger(type_ix, level);
        for (auto& [role, ent] : args) d.edges.push_back({trig, ent, role, true});
        if (level > 0) d.edges.push_back({trig, chain[level - 1], "Theme", true});
        chain.push_back(trig);
        d.trigger_order.push_back(trig);
      }

      // twin parent sharing the top sub-event, the overlapping-nested pattern
      if (depth >= 2 && chance(spec.overlap_rate)) {
        add_fillers(0, 1);
        int type_ix = pick(non_marker_types);
        int twin = add_trigger(type_ix, depth - 1);
        d.edges.push_back({twin, chain[depth - 2], "Theme", true});
        for (const std::string& role : accepted_roles(type_ix, spec.max_args)) {
          if (role == "Theme") continue;
          int ent = entity_target();
          d.edges.push_back({twin, ent, role, true});
          used_arg_entities.push_back(ent);
        }
        d.trigger_order.push_back(twin);
      }
    }

    if (chance(spec.extra_flat_rate)) {
      add_fillers(0, 1);
      int type_ix = pick(non_marker_types);
      int trig = add_trigger(type_ix, 0);
      for (const std::string& role : accepted_roles(type_ix, spec.max_args)) {
        int ent = entity_target();
        d.edges.push_back({trig, ent, role, true});
        used_arg_entities.push_back(ent);
      }
      d.trigger_order.push_back(trig);
    }

    if (markers && chance(spec.no_arg_rate)) {
      add_fillers(0, 1);
      int trig = add_trigger(marker_type, 0);
      d.trigger_order.push_back(trig);
    }

    // distractor edges carry roles outside every signature
    static const std::vector<std::string> distractor_roles = {"Site", "Modifier"};
    for (int trig : d.trigger_order) {
      if (!chance(spec.distractor_rate)) continue;
      std::string role = distractor_roles[pick((int)distractor_roles.size())];
      int level = d.mentions[trig].level;
      std::vector<int> lower_triggers;
      for (int t : d.trigger_order)
        if (t != trig && d.mentions[t].level < level) lower_triggers.push_back(t);
      if (!lower_triggers.empty() && chance(0.3)) {
        d.edges.push_back({trig, lower_triggers[pick((int)lower_triggers.size())], role, false});
      } else {
        d.edges.push_back({trig, add_entity(/*distractor_type=*/true), role, false});
      }
    }

    add_fillers(0, 1);
    d.tokens.push_back(".");
    return d;
  };

  SynthCorpus corpus;
  int doc_count = (spec.sentences + spec.sentences_per_doc - 1) / spec.sentences_per_doc;
  int sent_budget = spec.sentences;
  for (int di = 0; di < doc_count; ++di) {
    Document doc;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "D%04d", di + 1);
    doc.id = idbuf;

    int sentences_here = std::min(spec.sentences_per_doc, sent_budget);
    sent_budget -= sentences_here;

    std::vector<SentenceDraft> drafts;
    for (int si = 0; si < sentences_here; ++si) drafts.push_back(build_sentence());

    // mention ids: entities first (.a1), triggers after (.a2)
    std::vector<std::vector<int>> ids(sentences_here);
    for (int si = 0; si < sentences_here; ++si) ids[si].assign(drafts[si].mentions.size(), -1);
    int next_tid = 1;
    for (bool want_trigger : {false, true})
      for (int si = 0; si < sentences_here; ++si)
        for (int mi = 0; mi < (int)drafts[si].mentions.size(); ++mi)
          if (drafts[si].mentions[mi].trigger == want_trigger) ids[si][mi] = next_tid++;

    // lay out text and materialize mentions
    std::string text;
    for (int si = 0; si < sentences_here; ++si) {
      const SentenceDraft& draft = drafts[si];
      if (si > 0) text += "\n";
      std::vector<int> tok_begin(draft.tokens.size());
      for (int ti = 0; ti < (int)draft.tokens.size(); ++ti) {
        if (ti > 0) text += " ";
        tok_begin[ti] = (int)text.size();
        text += draft.tokens[ti];
      }
      for (int mi = 0; mi < (int)draft.mentions.size(); ++mi) {
        const auto& dm = draft.mentions[mi];
        Mention m;
        m.id = "T" + std::to_string(ids[si][mi]);
        m.kind = dm.trigger ? MentionKind::Trigger : MentionKind::Entity;
        m.type = dm.type;
        m.begin = tok_begin[dm.first_token];
        m.end = tok_begin[dm.last_token] + (int)draft.tokens[dm.last_token].size();
        m.sentence = si;
        doc.mentions.push_back(std::move(m));
      }
    }
    doc.text = text;
    // deterministic mention order: entities before triggers, by id number
    std::sort(doc.mentions.begin(), doc.mentions.end(), [](const Mention& a, const Mention& b) {
      return std::stoi(a.id.substr(1)) < std::stoi(b.id.substr(1));
    });
    for (Mention& m : doc.mentions)
      m.text = doc.text.substr(m.begin, m.end - m.begin);

    // gold events bottom-up and the relation records
    int next_eid = 1;
    std::vector<Relation> doc_predicted;
    int rid = 0;
    for (int si = 0; si < sentences_here; ++si) {
      const SentenceDraft& draft = drafts[si];
      std::map<int, std::string> event_of_trigger; // draft mention -> event id
      for (int trig : draft.trigger_order) {
        Event ev;
        ev.id = "E" + std::to_string(next_eid++);
        ev.trigger_id = "T" + std::to_string(ids[si][trig]);
        for (const auto& edge : draft.edges) {
          if (edge.trigger != trig || !edge.gold) continue;
          EventArg a;
          a.role = edge.role;
          if (draft.mentions[edge.target].trigger) {
            a.is_event = true;
            a.target_id = event_of_trigger.at(edge.target);
          } else {
            a.target_id = "T" + std::to_string(ids[si][edge.target]);
          }
          ev.args.push_back(std::move(a));
        }
        event_of_trigger[trig] = ev.id;
        doc.events.push_back(std::move(ev));
      }
      for (const auto& edge : draft.edges) {
        Relation r;
        r.id = "R" + std::to_string(++rid);
        r.trigger_id = "T" + std::to_string(ids[si][edge.trigger]);
        r.role = edge.role;
        r.arg_id = "T" + std::to_string(ids[si][edge.target]);
        r.provenance = Provenance::Predicted;
        doc_predicted.push_back(std::move(r));
      }
    }
    doc.rebuild_indexes();
    corpus.predicted[doc.id] = std::move(doc_predicted);
    corpus.docs.push_back(std::move(doc));
  }

  // rebuild sentences/tokens exactly the way the standoff reader would
  for (Document& doc : corpus.docs) {
    doc.sentences.clear();
    for (auto [b, e] : segment_sentences(doc.text)) {
      Sentence s;
      s.id = doc.id + ":" + std::to_string(doc.sentences.size());
      s.begin = b;
      s.end = e;
      s.text = doc.text.substr(b, e - b);
      s.tokens = tokenize_span(doc.text, b, e);
      doc.sentences.push_back(std::move(s));
    }
    for (Mention& m : doc.mentions) {
      int found = -1;
      for (int si = 0; si < (int)doc.sentences.size(); ++si)
        if (m.begin >= doc.sentences[si].begin && m.end <= doc.sentences[si].end) {
          found = si;
          break;
        }
      if (found < 0) fail(ErrorCode::Internal, "synthetic mention crosses sentence bounds");
      m.sentence = found;
    }
  }

  // realized category shares, using the evaluator's definitions
  long nested = 0, overlapping = 0, flat = 0, total = 0;
  for (const Document& doc : corpus.docs) {
    for (const EventFlags& f : categorize_events(doc)) {
      ++total;
      if (f.nested) ++nested;
      if (f.overlapping) ++overlapping;
      if (f.flat) ++flat;
    }
  }
  corpus.stats = {
      {"documents", corpus.docs.size()},
      {"sentences", spec.sentences},
      {"events", total},
      {"nested_share", total ? (double)nested / total : 0.0},
      {"overlapping_share", total ? (double)overlapping / total : 0.0},
      {"flat_share", total ? (double)flat / total : 0.0},
      {"seed", spec.seed},
  };
  return corpus;
}

} // namespace evdag
