#pragma once

// The action scoring function. A shared bidirectional recurrent encoder
// produces contextual token vectors; each buffer entry becomes a relation
// embedding [t_p; t_w; o_p; a_p; a_w; c] that is mapped through the shared
// hidden layer, rectified and summed into the structure and buffer
// embeddings. Their concatenation is the event embedding, which doubles as
// the argument representation of the event inside later (nested) searches.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evdag/error.hpp"
#include "evdag/model.hpp"
#include "evdag/search.hpp"
#include "evdag/tape.hpp"
#include "evdag/types.hpp"

namespace evdag {

template <class S>
struct SentenceEncoding {
  std::vector<Var> tokens; // one contextual vector per token, dim encoder_dim
};

// Forward and backward recurrent passes, concatenated per token. The word
// lookup node is shared by both directions.
template <class S>
SentenceEncoding<S> encode_sentence(Tape<S>& tape, const Model<S>& m, Tensors<S>* g,
                                    const Sentence& sent) {
  int n = (int)sent.tokens.size();
  if (n == 0) fail(ErrorCode::Structure, "cannot encode a sentence without tokens");
  auto grad = [&](auto member) { return g ? &(g->*member) : nullptr; };
  using T = Tensors<S>;
  int half = m.cfg.encoder_dim / 2;

  std::vector<Var> xs(n);
  for (int i = 0; i < n; ++i)
    xs[i] = tape.row(m.t.word_table, grad(&T::word_table), m.word_id(sent.tokens[i].surface));

  auto run = [&](bool forward) {
    const auto& Wi = forward ? m.t.f_Wi : m.t.b_Wi; auto gWi = grad(forward ? &T::f_Wi : &T::b_Wi);
    const auto& Ui = forward ? m.t.f_Ui : m.t.b_Ui; auto gUi = grad(forward ? &T::f_Ui : &T::b_Ui);
    const auto& bi = forward ? m.t.f_bi : m.t.b_bi; auto gbi = grad(forward ? &T::f_bi : &T::b_bi);
    const auto& Wf = forward ? m.t.f_Wf : m.t.b_Wf; auto gWf = grad(forward ? &T::f_Wf : &T::b_Wf);
    const auto& Uf = forward ? m.t.f_Uf : m.t.b_Uf; auto gUf = grad(forward ? &T::f_Uf : &T::b_Uf);
    const auto& bf = forward ? m.t.f_bf : m.t.b_bf; auto gbf = grad(forward ? &T::f_bf : &T::b_bf);
    const auto& Wg = forward ? m.t.f_Wg : m.t.b_Wg; auto gWg = grad(forward ? &T::f_Wg : &T::b_Wg);
    const auto& Ug = forward ? m.t.f_Ug : m.t.b_Ug; auto gUg = grad(forward ? &T::f_Ug : &T::b_Ug);
    const auto& bg = forward ? m.t.f_bg : m.t.b_bg; auto gbg = grad(forward ? &T::f_bg : &T::b_bg);
    const auto& Wo = forward ? m.t.f_Wo : m.t.b_Wo; auto gWo = grad(forward ? &T::f_Wo : &T::b_Wo);
    const auto& Uo = forward ? m.t.f_Uo : m.t.b_Uo; auto gUo = grad(forward ? &T::f_Uo : &T::b_Uo);
    const auto& bo = forward ? m.t.f_bo : m.t.b_bo; auto gbo = grad(forward ? &T::f_bo : &T::b_bo);

    std::vector<Var> hs(n);
    Var h = tape.zeros(half);
    Var c = tape.zeros(half);
    for (int step = 0; step < n; ++step) {
      int idx = forward ? step : n - 1 - step;
      Var x = xs[idx];
      Var ig = tape.sigmoid(tape.affine2(Wi, gWi, x, Ui, gUi, h, bi, gbi));
      Var fg = tape.sigmoid(tape.affine2(Wf, gWf, x, Uf, gUf, h, bf, gbf));
      Var gg = tape.tanh_(tape.affine2(Wg, gWg, x, Ug, gUg, h, bg, gbg));
      Var og = tape.sigmoid(tape.affine2(Wo, gWo, x, Uo, gUo, h, bo, gbo));
      c = tape.add(tape.hadamard(fg, c), tape.hadamard(ig, gg));
      h = tape.hadamard(og, tape.tanh_(c));
      hs[idx] = h;
    }
    return hs;
  };

  std::vector<Var> fwd = run(true);
  std::vector<Var> bwd = run(false);
  SentenceEncoding<S> enc;
  enc.tokens.resize(n);
  for (int i = 0; i < n; ++i) enc.tokens[i] = tape.concat(fwd[i], bwd[i]);
  return enc;
}

// Phrase representation: arithmetic mean of the contextual vectors of the
// mention's tokens.
template <class S>
Var mention_representation(Tape<S>& tape, const SentenceEncoding<S>& enc,
                           const Document& doc, const Mention& mention) {
  std::vector<int> idx = doc.tokens_in_span(mention.sentence, mention.begin, mention.end);
  if (idx.empty())
    fail(ErrorCode::Structure,
         "mention '" + mention.id + "' spans no tokens in sentence " +
             std::to_string(mention.sentence));
  std::vector<Var> vars;
  vars.reserve(idx.size());
  for (int i : idx) vars.push_back(enc.tokens[i]);
  return tape.mean(vars);
}

inline int action_slot(Action a) {
  switch (a) {
    case Action::Add: return kSlotAdd;
    case Action::Ignore: return kSlotIgnore;
    case Action::Construct: return kSlotConstruct;
  }
  return kSlotPending;
}

// Per-sentence scorer. The sentence is encoded once in the constructor and
// shared by every search state; per-trigger working sets are rebuilt in
// begin_trigger(). Event representations live for the whole sentence so
// nested triggers can consume them.
template <class S>
class NeuralScorer {
 public:
  NeuralScorer(Tape<S>& tape, const Model<S>& model, Tensors<S>* grads, const Document& doc,
               int sentence, double dropout_rate = 0.0)
      : tape_(tape), m_(model), g_(grads), doc_(doc), dropout_(dropout_rate) {
    enc_ = encode_sentence(tape_, m_, g_, doc.sentences.at(sentence));
  }

  const SentenceEncoding<S>& encoding() const { return enc_; }
  uint64_t calls() const { return calls_; }

  void begin_trigger(const TriggerContext& ctx) {
    ctx_ = &ctx;
    const Mention& trig = doc_.mention(ctx.trigger_id);
    t_p_ = tape_.row(m_.t.type_table, grad(&Tensors<S>::type_table), m_.type_id(trig.type));
    t_w_ = mention_var(trig);
    int n = (int)ctx.entries.size();
    h_cache_.assign(4 * (n + 1), -1);
    suffix_.assign(n + 2, -1);
    suffix_[n + 1] = tape_.zeros(m_.cfg.hidden_dim);
    for (int p = n; p >= 0; --p) suffix_[p] = tape_.add(hidden_of(p, kSlotPending), suffix_[p + 1]);
    state_vecs_.clear();
    state_vecs_.push_back(tape_.zeros(m_.cfg.hidden_dim)); // empty structure
  }

  // Scores action `a` on the buffer front of `s`: provisionally moves the
  // front into the structure, forms the event embedding [S_t; B_t] and maps
  // it to sigmoid(z_t).
  ScoredAction score_action(const TriggerContext& ctx, const SearchState& s, Action a) {
    if (&ctx != ctx_) fail(ErrorCode::Internal, "score_action without begin_trigger");
    if (s.terminated || s.buffer_empty(ctx))
      fail(ErrorCode::Internal, "score_action on a finished state");
    int p = s.next_pos;
    if (p == 0 && a == Action::Add)
      fail(ErrorCode::Internal, "ADD is not applicable to the NONE sentinel");

    Var h = hidden_of(p, action_slot(a));
    Var s_t = tape_.add(state_vecs_.at(s.scorer_state), h);
    state_vecs_.push_back(s_t);
    int state_rep = (int)state_vecs_.size() - 1;
    Var b_t = suffix_[p + 1];
    Var ev = tape_.concat(s_t, b_t);
    Var ev_in = tape_.dropout(ev, dropout_);
    Var z = tape_.affine(m_.t.out_W, grad(&Tensors<S>::out_W), m_.t.out_b,
                         grad(&Tensors<S>::out_b), ev_in);
    double zv = (double)tape_.val(z)[0];
    double prob = 1.0 / (1.0 + std::exp(-zv));
    prob = std::min(std::max(prob, 1e-12), 1.0 - 1e-12);

    int event_rep = -1;
    if (a == Action::Construct) {
      event_reps_.push_back(ev);
      event_rep = (int)event_reps_.size() - 1;
    }
    ++calls_;
    return ScoredAction{prob, state_rep, event_rep, z};
  }

  // Forced replay of an action sequence; returns the handle of the emitted
  // event representation. Used to realize sub-event representations during
  // training and for oracle inspection.
  int forced_event_rep(const TriggerContext& ctx, const std::vector<Action>& actions) {
    begin_trigger(ctx);
    SearchState state = init_state(ctx);
    uint64_t counter = 0;
    for (Action a : actions) {
      ScoredAction sc = score_action(ctx, state, a);
      auto [next, cand] = apply_action(ctx, state, a, sc, counter++);
      state = std::move(next);
      if (cand) return sc.event_rep;
    }
    fail(ErrorCode::Internal, "forced action sequence did not CONSTRUCT");
  }

  // Structure and buffer embeddings of a state as-is (before any move).
  std::pair<Var, Var> state_embeddings(const SearchState& s) const {
    return {state_vecs_.at(s.scorer_state), suffix_.at(s.next_pos)};
  }

  Var event_rep_var(int handle) const { return event_reps_.at(handle); }

  // Relation embedding of buffer position p with the given action slot;
  // position 0 is the NONE sentinel (learned NONE rows, zero word block).
  Var relation_embedding(int p, int slot) {
    using T = Tensors<S>;
    Var c = tape_.row(m_.t.action_table, grad(&T::action_table), slot);
    Var o_p, block;
    if (p == 0) {
      o_p = tape_.row(m_.t.role_table, grad(&T::role_table), 0);
      Var a_p = tape_.row(m_.t.type_table, grad(&T::type_table), 0);
      block = tape_.concat(a_p, tape_.zeros(m_.cfg.encoder_dim));
    } else {
      const ArgumentEntry& e = ctx_->entries.at(p - 1);
      o_p = tape_.row(m_.t.role_table, grad(&T::role_table), m_.role_id(e.relation.role));
      if (e.is_event) {
        if (e.rep < 0)
          fail(ErrorCode::Internal,
               "sub-event representation not bound for entry of '" + e.relation.arg_id + "'");
        block = event_reps_.at(e.rep); // [a_p; a_w] jointly
      } else {
        const Mention& arg = doc_.mention(e.relation.arg_id);
        Var a_p = tape_.row(m_.t.type_table, grad(&T::type_table), m_.type_id(arg.type));
        block = tape_.concat(a_p, mention_var(arg));
      }
    }
    return tape_.concat(tape_.concat(tape_.concat(t_p_, t_w_), o_p),
                        tape_.concat(block, c));
  }

 private:
  template <class M>
  auto grad(M member) {
    return g_ ? &(g_->*member) : nullptr;
  }

  Var mention_var(const Mention& mention) {
    auto it = mention_cache_.find(mention.id);
    if (it != mention_cache_.end()) return it->second;
    Var v = mention_representation(tape_, enc_, doc_, mention);
    mention_cache_.emplace(mention.id, v);
    return v;
  }

  // Hidden-layer output for (position, action slot), cached per trigger.
  Var hidden_of(int p, int slot) {
    Var& cached = h_cache_.at(4 * p + slot);
    if (cached >= 0) return cached;
    Var r = relation_embedding(p, slot);
    Var h = tape_.relu(tape_.affine(m_.t.hidden_W, grad(&Tensors<S>::hidden_W), m_.t.hidden_b,
                                    grad(&Tensors<S>::hidden_b), r));
    cached = h;
    return h;
  }

  Tape<S>& tape_;
  const Model<S>& m_;
  Tensors<S>* g_;
  const Document& doc_;
  double dropout_;
  SentenceEncoding<S> enc_;
  std::map<std::string, Var> mention_cache_;

  const TriggerContext* ctx_ = nullptr;
  Var t_p_ = -1, t_w_ = -1;
  std::vector<Var> h_cache_;
  std::vector<Var> suffix_;
  std::vector<Var> state_vecs_;
  std::vector<Var> event_reps_;
  uint64_t calls_ = 0;
};

} // namespace evdag
