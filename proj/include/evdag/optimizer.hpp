#pragma once

// AMSGrad with bias correction and coupled L2 weight decay. The second-moment
// running maximum makes the effective step size non-increasing per
// coordinate.

#include <cmath>
#include <optional>
#include <string>

#include "evdag/model.hpp"

namespace evdag {

template <class S>
class AmsGrad {
 public:
  AmsGrad(const Tensors<S>& shapes, double learning_rate = 1e-3, double weight_decay = 1e-3,
          double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : m_(shapes.zeros_like()),
        v_(shapes.zeros_like()),
        vhat_(shapes.zeros_like()),
        lr_(learning_rate),
        wd_(weight_decay),
        beta1_(beta1),
        beta2_(beta2),
        eps_(epsilon) {}

  long step_count() const { return t_; }
  const Tensors<S>& max_second_moment() const { return vhat_; }

  // Applies one update in place. Returns a diagnostic and leaves the
  // parameters untouched when any gradient is non-finite.
  std::optional<std::string> step(Tensors<S>& params, const Tensors<S>& grads) {
    for (const auto& f : Tensors<S>::fields()) {
      const auto& g = grads.*(f.member);
      if (!g.allFinite())
        return std::string("non-finite gradient in tensor '") + f.name + "', step rejected";
    }
    ++t_;
    for (const auto& f : Tensors<S>::fields()) {
      auto& p = params.*(f.member);
      const auto& g0 = grads.*(f.member);
      auto& m = m_.*(f.member);
      auto& v = v_.*(f.member);
      auto& vh = vhat_.*(f.member);
      // coupled L2: decay enters the gradient before the moments
      auto g = (g0 + S(wd_) * p).eval();
      m = S(beta1_) * m + (S(1) - S(beta1_)) * g;
      v = S(beta2_) * v + (S(1) - S(beta2_)) * g.cwiseProduct(g);
      vh = vh.cwiseMax(v);
      p.array() -= S(lr_) * m.array() / (vh.cwiseSqrt().array() + S(eps_));
    }
    return std::nullopt;
  }

 private:
  Tensors<S> m_, v_, vhat_;
  double lr_, wd_, beta1_, beta2_, eps_;
  long t_ = 0;
};

} // namespace evdag
