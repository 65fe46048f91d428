#pragma once

#include <algorithm>
#include <cmath>

namespace gaplap {

// -inf surrogate. Sums involving it are absorbed back to it, so no
// (-inf) + (-inf) or (-inf) - (-inf) arithmetic ever reaches the FPU.
template <typename Scalar>
constexpr Scalar neg_inf() {
  return Scalar(-1e30);
}

template <typename Scalar>
constexpr bool is_neg_inf(Scalar x) {
  return x <= Scalar(-5e29);
}

template <typename Scalar>
constexpr Scalar log_mul(Scalar a, Scalar b) {
  return (is_neg_inf(a) || is_neg_inf(b)) ? neg_inf<Scalar>() : a + b;
}

template <typename Scalar>
constexpr Scalar log_mul(Scalar a, Scalar b, Scalar c) {
  return log_mul(log_mul(a, b), c);
}

template <typename Scalar>
Scalar log_add(Scalar a, Scalar b) {
  if (is_neg_inf(a)) return is_neg_inf(b) ? neg_inf<Scalar>() : b;
  if (is_neg_inf(b)) return a;
  const Scalar hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

template <typename Scalar>
Scalar log_exp(Scalar x) {
  return is_neg_inf(x) ? Scalar(0) : std::exp(x);
}

// Accumulates log(sum(exp(x_i))) with running-max rescaling.
template <typename Scalar>
class LogSumAccumulator {
 public:
  void add(Scalar x) {
    if (is_neg_inf(x)) return;
    if (empty_) {
      max_ = x;
      sum_ = Scalar(1);
      empty_ = false;
    } else if (x > max_) {
      sum_ = sum_ * std::exp(max_ - x) + Scalar(1);
      max_ = x;
    } else {
      sum_ += std::exp(x - max_);
    }
  }

  Scalar value() const { return empty_ ? neg_inf<Scalar>() : max_ + std::log(sum_); }

 private:
  bool empty_ = true;
  Scalar max_ = neg_inf<Scalar>();
  Scalar sum_ = Scalar(0);
};

}  // namespace gaplap
