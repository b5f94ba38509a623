#pragma once

// Minimal reverse-mode autodiff over dense vectors. Nodes live on a tape in
// creation order; backward() walks the tape in reverse, so any value produced
// by these ops — including event representations reused by later triggers —
// receives gradients from every place it was consumed.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "evdag/error.hpp"

namespace evdag {

using Var = int;

template <class S>
class Tape {
 public:
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using BackFn = std::function<void(Tape&, Var)>;

  struct Node {
    Vec value;
    Vec grad; // empty until first touched
    BackFn back; // null for leaves and in no-grad mode
  };

  explicit Tape(bool record_grads = true, bool train = false, uint64_t dropout_seed = 0)
      : record_(record_grads), train_(train), rng_(dropout_seed) {}

  bool recording() const { return record_; }
  bool training() const { return train_; }
  std::mt19937_64& rng() { return rng_; }

  int size() const { return (int)nodes_.size(); }
  const Vec& val(Var i) const { return nodes_[i].value; }
  Vec& grad(Var i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) n.grad = Vec::Zero(n.value.size());
    return n.grad;
  }

  Var leaf(Vec v) {
    nodes_.push_back(Node{std::move(v), {}, nullptr});
    return (Var)nodes_.size() - 1;
  }

  Var zeros(int dim) { return leaf(Vec::Zero(dim)); }

  Var make(Vec v, BackFn back) {
    if (!record_) return leaf(std::move(v));
    nodes_.push_back(Node{std::move(v), {}, std::move(back)});
    return (Var)nodes_.size() - 1;
  }

  // Embedding row read; accumulates into the matching grad table column.
  Var row(const Mat& table, Mat* gtable, int col) {
    Vec v = table.col(col);
    return make(std::move(v), [gtable, col](Tape& t, Var self) {
      if (gtable) gtable->col(col) += t.grad(self);
    });
  }

  // W x + b. Bias is a one-column matrix so every parameter is a Mat.
  Var affine(const Mat& W, Mat* gW, const Mat& b, Mat* gb, Var x) {
    Vec v = W * val(x) + b.col(0);
    return make(std::move(v), [&W, gW, gb, x](Tape& t, Var self) {
      const Vec& g = t.grad(self);
      if (gW) gW->noalias() += g * t.val(x).transpose();
      if (gb) gb->col(0) += g;
      t.grad(x).noalias() += W.transpose() * g;
    });
  }

  // W x + U h + b, the recurrent gate shape.
  Var affine2(const Mat& W, Mat* gW, Var x, const Mat& U, Mat* gU, Var h, const Mat& b,
              Mat* gb) {
    Vec v = W * val(x) + U * val(h) + b.col(0);
    return make(std::move(v), [&W, gW, x, &U, gU, h, gb](Tape& t, Var self) {
      const Vec& g = t.grad(self);
      if (gW) gW->noalias() += g * t.val(x).transpose();
      if (gU) gU->noalias() += g * t.val(h).transpose();
      if (gb) gb->col(0) += g;
      t.grad(x).noalias() += W.transpose() * g;
      t.grad(h).noalias() += U.transpose() * g;
    });
  }

  Var add(Var a, Var b) {
    Vec v = val(a) + val(b);
    return make(std::move(v), [a, b](Tape& t, Var self) {
      const Vec& g = t.grad(self);
      t.grad(a) += g;
      t.grad(b) += g;
    });
  }

  Var hadamard(Var a, Var b) {
    Vec v = val(a).cwiseProduct(val(b));
    return make(std::move(v), [a, b](Tape& t, Var self) {
      const Vec& g = t.grad(self);
      t.grad(a) += g.cwiseProduct(t.val(b));
      t.grad(b) += g.cwiseProduct(t.val(a));
    });
  }

  Var sigmoid(Var x) {
    Vec v = val(x).unaryExpr([](S z) { return S(1) / (S(1) + std::exp(-z)); });
    return make(std::move(v), [x](Tape& t, Var self) {
      const Vec& y = t.val(self);
      t.grad(x) += t.grad(self).cwiseProduct(
          y.unaryExpr([](S a) { return a * (S(1) - a); }));
    });
  }

  Var tanh_(Var x) {
    Vec v = val(x).unaryExpr([](S z) { return std::tanh(z); });
    return make(std::move(v), [x](Tape& t, Var self) {
      const Vec& y = t.val(self);
      t.grad(x) += t.grad(self).cwiseProduct(
          y.unaryExpr([](S a) { return S(1) - a * a; }));
    });
  }

  Var relu(Var x) {
    Vec v = val(x).cwiseMax(S(0));
    return make(std::move(v), [x](Tape& t, Var self) {
      const Vec& in = t.val(x);
      Vec g = t.grad(self);
      for (int i = 0; i < g.size(); ++i)
        if (in[i] <= S(0)) g[i] = S(0);
      t.grad(x) += g;
    });
  }

  Var concat(Var a, Var b) {
    Vec v(val(a).size() + val(b).size());
    v << val(a), val(b);
    return make(std::move(v), [a, b](Tape& t, Var self) {
      const Vec& g = t.grad(self);
      int na = (int)t.val(a).size();
      t.grad(a) += g.head(na);
      t.grad(b) += g.tail(g.size() - na);
    });
  }

  Var mean(const std::vector<Var>& xs) {
    if (xs.empty()) fail(ErrorCode::Internal, "mean of zero vectors");
    Vec v = Vec::Zero(val(xs[0]).size());
    for (Var x : xs) v += val(x);
    v /= S(xs.size());
    return make(std::move(v), [xs](Tape& t, Var self) {
      Vec g = t.grad(self) / S(xs.size());
      for (Var x : xs) t.grad(x) += g;
    });
  }

  // Inverted dropout: identity outside training mode.
  Var dropout(Var x, double rate) {
    if (!train_ || rate <= 0.0) return x;
    std::bernoulli_distribution keep(1.0 - rate);
    Vec mask(val(x).size());
    S scale = S(1.0 / (1.0 - rate));
    for (int i = 0; i < mask.size(); ++i) mask[i] = keep(rng_) ? scale : S(0);
    Vec v = val(x).cwiseProduct(mask);
    return make(std::move(v), [x, mask](Tape& t, Var self) {
      t.grad(x) += t.grad(self).cwiseProduct(mask);
    });
  }

  // Numerically stable binary cross-entropy on a 1-dim logit.
  Var bce_with_logits(Var z, double label) {
    S zz = val(z)[0];
    S y = S(label);
    S m = zz > S(0) ? zz : S(0);
    Vec v(1);
    v[0] = m - zz * y + std::log1p(std::exp(-std::abs(zz)));
    return make(std::move(v), [z, y](Tape& t, Var self) {
      S logit = t.val(z)[0];
      S p = S(1) / (S(1) + std::exp(-logit));
      t.grad(z)[0] += t.grad(self)[0] * (p - y);
    });
  }

  // Reverse pass from a 1-dim loss node. Reverse creation order is a valid
  // topological order because ops only reference earlier nodes.
  void backward(Var loss) {
    if (!record_) fail(ErrorCode::Internal, "backward on a no-grad tape");
    if (val(loss).size() != 1) fail(ErrorCode::Internal, "backward needs a scalar loss");
    grad(loss)[0] = S(1);
    for (Var i = loss; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.back || n.grad.size() == 0) continue;
      n.back(*this, i);
    }
  }

 private:
  std::vector<Node> nodes_;
  bool record_;
  bool train_;
  std::mt19937_64 rng_;
};

} // namespace evdag
