#pragma once

// Event matching and scoring. Matching is exact structural equality through
// canonical fingerprints (equality classes are disjoint, so greedy matching
// within classes is maximal). Categories follow the shared-argument reading
// of overlap: an event overlaps when any other event of the same prediction
// or gold universe resolves one of its argument targets to the same
// structure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evdag/error.hpp"
#include "evdag/types.hpp"

namespace evdag {

struct EventFlags {
  bool nested = false;
  bool overlapping = false;
  bool flat = false;
};

// Flags every event of `doc` against the document's own event universe.
inline std::vector<EventFlags> categorize_events(const Document& doc) {
  std::map<std::string, std::set<int>> events_by_target; // target fp -> event indices
  std::vector<std::set<std::string>> targets(doc.events.size());
  for (int i = 0; i < (int)doc.events.size(); ++i) {
    for (const EventArg& a : doc.events[i].args) {
      std::string fp = target_fingerprint(doc, a);
      targets[i].insert(fp);
      events_by_target[fp].insert(i);
    }
  }
  std::vector<EventFlags> flags(doc.events.size());
  for (int i = 0; i < (int)doc.events.size(); ++i) {
    const Event& ev = doc.events[i];
    bool any_event_arg = false;
    for (const EventArg& a : ev.args) any_event_arg |= a.is_event;
    flags[i].nested = any_event_arg;
    flags[i].flat = !any_event_arg; // includes no-argument events
    for (const std::string& fp : targets[i]) {
      if (events_by_target[fp].size() > 1) { flags[i].overlapping = true; break; }
    }
  }
  return flags;
}

// Greedy one-to-one matching under recursive structural equality; returns
// (gold index, predicted index) pairs. Maximal because equality classes are
// disjoint.
inline std::vector<std::pair<int, int>> match_events(const Document& gold_doc,
                                                     const Document& pred_doc) {
  std::map<std::string, std::vector<int>> gold_by_fp, pred_by_fp;
  for (int i = 0; i < (int)gold_doc.events.size(); ++i)
    gold_by_fp[event_fingerprint(gold_doc, gold_doc.events[i])].push_back(i);
  for (int i = 0; i < (int)pred_doc.events.size(); ++i)
    pred_by_fp[event_fingerprint(pred_doc, pred_doc.events[i])].push_back(i);
  std::vector<std::pair<int, int>> pairs;
  for (auto& [fp, gs] : gold_by_fp) {
    auto it = pred_by_fp.find(fp);
    if (it == pred_by_fp.end()) continue;
    size_t n = std::min(gs.size(), it->second.size());
    for (size_t k = 0; k < n; ++k) pairs.emplace_back(gs[k], it->second[k]);
  }
  return pairs;
}

struct PrF {
  double p = 0, r = 0, f1 = 0;
};

struct CategoryCounts {
  long gold = 0, pred = 0;
  long matched_precision = 0; // predicted C-events matched against all gold
  long matched_recall = 0;    // gold C-events matched against all predicted
};

struct EvalReport {
  long gold_total = 0, pred_total = 0, matched = 0;
  CategoryCounts nested, overlapping, flat;
  bool empty_convention = false; // both sides empty: all metrics 1 by convention
  bool zero_denominator = false; // some ratio fell back to the 1.0 convention

  static double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

  double ratio(long num, long den) {
    if (den == 0) { zero_denominator = true; return 1.0; }
    return (double)num / (double)den;
  }

  PrF overall() {
    PrF x;
    x.p = ratio(matched, pred_total);
    x.r = ratio(matched, gold_total);
    x.f1 = f1_of(x.p, x.r);
    return x;
  }
  PrF category(const CategoryCounts& c) {
    PrF x;
    x.p = ratio(c.matched_precision, c.pred);
    x.r = ratio(c.matched_recall, c.gold);
    x.f1 = f1_of(x.p, x.r);
    return x;
  }
  double gold_share(const CategoryCounts& c) const {
    return gold_total > 0 ? (double)c.gold / (double)gold_total : 0.0;
  }
  double pred_share(const CategoryCounts& c) const {
    return pred_total > 0 ? (double)c.pred / (double)pred_total : 0.0;
  }
};

// Pooled (micro) evaluation over aligned (gold, predicted) document pairs.
inline EvalReport evaluate(const std::vector<const Document*>& gold_docs,
                           const std::vector<const Document*>& pred_docs) {
  if (gold_docs.size() != pred_docs.size())
    fail(ErrorCode::Config, "evaluate: document lists differ in size");
  EvalReport rep;
  for (size_t d = 0; d < gold_docs.size(); ++d) {
    const Document& gd = *gold_docs[d];
    const Document& pd = *pred_docs[d];
    std::map<std::string, long> gold_fp, pred_fp;
    std::vector<std::string> gfps(gd.events.size()), pfps(pd.events.size());
    for (int i = 0; i < (int)gd.events.size(); ++i) {
      gfps[i] = event_fingerprint(gd, gd.events[i]);
      ++gold_fp[gfps[i]];
    }
    for (int i = 0; i < (int)pd.events.size(); ++i) {
      pfps[i] = event_fingerprint(pd, pd.events[i]);
      ++pred_fp[pfps[i]];
    }
    rep.gold_total += (long)gd.events.size();
    rep.pred_total += (long)pd.events.size();
    for (auto& [fp, n] : gold_fp) {
      auto it = pred_fp.find(fp);
      if (it != pred_fp.end()) rep.matched += std::min(n, it->second);
    }

    std::vector<EventFlags> gflags = categorize_events(gd);
    std::vector<EventFlags> pflags = categorize_events(pd);
    auto accumulate = [&](auto pick, CategoryCounts& cat) {
      std::map<std::string, long> gold_c, pred_c;
      for (int i = 0; i < (int)gd.events.size(); ++i)
        if (pick(gflags[i])) { ++cat.gold; ++gold_c[gfps[i]]; }
      for (int i = 0; i < (int)pd.events.size(); ++i)
        if (pick(pflags[i])) { ++cat.pred; ++pred_c[pfps[i]]; }
      for (auto& [fp, n] : pred_c) {
        auto it = gold_fp.find(fp);
        if (it != gold_fp.end()) cat.matched_precision += std::min(n, it->second);
      }
      for (auto& [fp, n] : gold_c) {
        auto it = pred_fp.find(fp);
        if (it != pred_fp.end()) cat.matched_recall += std::min(n, it->second);
      }
    };
    accumulate([](const EventFlags& f) { return f.nested; }, rep.nested);
    accumulate([](const EventFlags& f) { return f.overlapping; }, rep.overlapping);
    accumulate([](const EventFlags& f) { return f.flat; }, rep.flat);
  }
  rep.empty_convention = (rep.gold_total == 0 && rep.pred_total == 0);
  return rep;
}

inline std::string eval_report_text(EvalReport rep, bool categories) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  auto line = [&](const char* name, const PrF& x) {
    os << std::left << std::setw(12) << name << std::right << std::setw(8) << x.p
       << std::setw(8) << x.r << std::setw(8) << x.f1 << "\n";
  };
  os << std::left << std::setw(12) << "" << std::right << std::setw(8) << "P"
     << std::setw(8) << "R" << std::setw(8) << "F1" << "\n";
  if (categories) {
    line("nested", rep.category(rep.nested));
    line("overlapping", rep.category(rep.overlapping));
    line("flat", rep.category(rep.flat));
  }
  line("overall", rep.overall());
  os << "counts: gold=" << rep.gold_total << " predicted=" << rep.pred_total
     << " matched=" << rep.matched << "\n";
  if (categories) {
    os << std::setprecision(2);
    os << "gold shares: nested=" << 100.0 * rep.gold_share(rep.nested)
       << "% overlapping=" << 100.0 * rep.gold_share(rep.overlapping)
       << "% flat=" << 100.0 * rep.gold_share(rep.flat) << "%\n";
  }
  if (rep.empty_convention)
    os << "note: empty gold and empty prediction, metrics are 1.0 by convention\n";
  return os.str();
}

inline nlohmann::json eval_report_json(EvalReport rep) {
  auto prf = [](const PrF& x) {
    return nlohmann::json{{"p", x.p}, {"r", x.r}, {"f1", x.f1}};
  };
  auto cat = [&](const CategoryCounts& c, const PrF& x, double gshare, double pshare) {
    nlohmann::json j = prf(x);
    j["gold"] = c.gold;
    j["pred"] = c.pred;
    j["gold_share"] = gshare;
    j["pred_share"] = pshare;
    return j;
  };
  nlohmann::json j;
  j["overall"] = prf(rep.overall());
  j["nested"] = cat(rep.nested, rep.category(rep.nested), rep.gold_share(rep.nested),
                    rep.pred_share(rep.nested));
  j["overlapping"] = cat(rep.overlapping, rep.category(rep.overlapping),
                         rep.gold_share(rep.overlapping), rep.pred_share(rep.overlapping));
  j["flat"] =
      cat(rep.flat, rep.category(rep.flat), rep.gold_share(rep.flat), rep.pred_share(rep.flat));
  j["counts"] = {{"gold", rep.gold_total}, {"pred", rep.pred_total}, {"matched", rep.matched}};
  j["flags"] = {{"empty_convention", rep.empty_convention},
                {"zero_denominator", rep.zero_denominator}};
  return j;
}

// Optional approximate-span matching: mentions are equal when types match
// and both span ends differ by at most `slack` characters. Slack equality is
// not transitive, so this uses plain greedy pairwise matching in document
// order. Exact structural matching above stays the contract; this mode only
// reports an overall score.
namespace approx {

inline bool mentions_close(const Mention& a, const Mention& b, int slack) {
  return a.type == b.type && std::abs(a.begin - b.begin) <= slack &&
         std::abs(a.end - b.end) <= slack;
}

inline bool events_close(const Document& da, const Event& a, const Document& db,
                         const Event& b, int slack) {
  if (!mentions_close(da.mention(a.trigger_id), db.mention(b.trigger_id), slack)) return false;
  if (a.args.size() != b.args.size()) return false;
  std::vector<bool> used(b.args.size(), false);
  for (const EventArg& x : a.args) {
    bool found = false;
    for (size_t j = 0; j < b.args.size(); ++j) {
      if (used[j]) continue;
      const EventArg& y = b.args[j];
      if (x.role != y.role || x.is_event != y.is_event) continue;
      bool eq = x.is_event
                    ? events_close(da, da.event(x.target_id), db, db.event(y.target_id), slack)
                    : mentions_close(da.mention(x.target_id), db.mention(y.target_id), slack);
      if (eq) { used[j] = true; found = true; break; }
    }
    if (!found) return false;
  }
  return true;
}

} // namespace approx

// Overall P/R/F1 under approximate-span matching.
inline PrF evaluate_approx_spans(const std::vector<const Document*>& gold_docs,
                                 const std::vector<const Document*>& pred_docs, int slack) {
  if (gold_docs.size() != pred_docs.size())
    fail(ErrorCode::Config, "evaluate: document lists differ in size");
  long gold = 0, pred = 0, matched = 0;
  for (size_t d = 0; d < gold_docs.size(); ++d) {
    const Document& gd = *gold_docs[d];
    const Document& pd = *pred_docs[d];
    gold += (long)gd.events.size();
    pred += (long)pd.events.size();
    std::vector<bool> used(pd.events.size(), false);
    for (const Event& g : gd.events) {
      for (size_t j = 0; j < pd.events.size(); ++j) {
        if (used[j]) continue;
        if (approx::events_close(gd, g, pd, pd.events[j], slack)) {
          used[j] = true;
          ++matched;
          break;
        }
      }
    }
  }
  PrF x;
  x.p = pred > 0 ? (double)matched / pred : 1.0;
  x.r = gold > 0 ? (double)matched / gold : 1.0;
  x.f1 = EvalReport::f1_of(x.p, x.r);
  return x;
}

struct SignificanceResult {
  double observed_diff = 0; // F1(A) - F1(B)
  long shuffles = 0;
  double p_value = 1.0;
  uint64_t seed = 0;
};

// Two-sided approximate randomization over documents: each shuffle swaps the
// two systems' outputs per document with probability 1/2 and recomputes the
// pooled F1 difference. p = (#{|diff| >= |observed|} + 1) / (R + 1).
inline SignificanceResult approximate_randomization(
    const std::vector<const Document*>& gold_docs,
    const std::vector<const Document*>& pred_a,
    const std::vector<const Document*>& pred_b, long shuffles, uint64_t seed) {
  if (gold_docs.size() != pred_a.size() || gold_docs.size() != pred_b.size())
    fail(ErrorCode::Config, "significance test: document lists differ in size");
  if (shuffles < 1) fail(ErrorCode::Config, "significance test needs at least one shuffle");

  struct DocCounts { long gold, pred, matched; };
  auto count = [](const Document& gd, const Document& pd) {
    std::map<std::string, long> gold_fp, pred_fp;
    for (const Event& e : gd.events) ++gold_fp[event_fingerprint(gd, e)];
    for (const Event& e : pd.events) ++pred_fp[event_fingerprint(pd, e)];
    DocCounts c{(long)gd.events.size(), (long)pd.events.size(), 0};
    for (auto& [fp, n] : gold_fp) {
      auto it = pred_fp.find(fp);
      if (it != pred_fp.end()) c.matched += std::min(n, it->second);
    }
    return c;
  };

  size_t nd = gold_docs.size();
  std::vector<DocCounts> a(nd), b(nd);
  for (size_t i = 0; i < nd; ++i) {
    a[i] = count(*gold_docs[i], *pred_a[i]);
    b[i] = count(*gold_docs[i], *pred_b[i]);
  }

  auto pooled_f1 = [](long matched, long pred, long gold) {
    double p = pred > 0 ? (double)matched / pred : 1.0;
    double r = gold > 0 ? (double)matched / gold : 1.0;
    return EvalReport::f1_of(p, r);
  };
  auto diff_of = [&](const std::vector<bool>& swap) {
    long am = 0, ap = 0, bm = 0, bp = 0, gold = 0;
    for (size_t i = 0; i < nd; ++i) {
      const DocCounts& xa = swap[i] ? b[i] : a[i];
      const DocCounts& xb = swap[i] ? a[i] : b[i];
      am += xa.matched; ap += xa.pred;
      bm += xb.matched; bp += xb.pred;
      gold += a[i].gold;
    }
    return pooled_f1(am, ap, gold) - pooled_f1(bm, bp, gold);
  };

  std::vector<bool> identity(nd, false);
  double observed = diff_of(identity);

  std::mt19937_64 rng(seed);
  long hits = 0;
  std::vector<bool> swap(nd);
  for (long s = 0; s < shuffles; ++s) {
    for (size_t i = 0; i < nd; ++i) swap[i] = (rng() & 1) != 0;
    if (std::abs(diff_of(swap)) >= std::abs(observed) - 1e-12) ++hits;
  }
  SignificanceResult res;
  res.observed_diff = observed;
  res.shuffles = shuffles;
  res.p_value = (double)(hits + 1) / (double)(shuffles + 1);
  res.seed = seed;
  return res;
}

struct ProfileReport {
  uint64_t scorer_calls = 0;
  double wall_seconds = 0;
  uint64_t triggers = 0;
  double per_trigger_mean() const {
    return triggers > 0 ? (double)scorer_calls / (double)triggers : 0.0;
  }
};

inline nlohmann::json profile_json(const ProfileReport& p) {
  return nlohmann::json{{"scorer_calls", p.scorer_calls},
                        {"wall_seconds", p.wall_seconds},
                        {"triggers", p.triggers},
                        {"per_trigger_mean_calls", p.per_trigger_mean()}};
}

} // namespace evdag
