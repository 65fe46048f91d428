#pragma once

// Exact inference over first-order projective dependency trees.
//
// All routines take an l x l arc score matrix S with S(h, m) the score of the
// arc h -> m. Index 0 is ROOT. Column 0 and the diagonal are never read.
// Charts are indexed [s][t][direction][completeness] with s <= t; a Left item
// is headed at t, a Right item at s.

#include "gaplap/common.hpp"
#include "gaplap/logspace.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gaplap::chart {

enum class Direction : int { Left = 0, Right = 1 };
enum class Completeness : int { Incomplete = 0, Complete = 1 };

struct TreeOptions {
  // Restrict ROOT to exactly one child. Off by default: ROOT may head any
  // number of words.
  bool single_root = false;
};

template <typename Scalar>
class Chart {
 public:
  Chart() = default;
  explicit Chart(Index length, Scalar fill = neg_inf<Scalar>())
      : length_(length), cells_(static_cast<std::size_t>(length * length * 4), fill) {}

  Index length() const { return length_; }

  Scalar& operator()(Index s, Index t, Direction d, Completeness c) {
    return cells_[offset(s, t, d, c)];
  }
  Scalar operator()(Index s, Index t, Direction d, Completeness c) const {
    return cells_[offset(s, t, d, c)];
  }

 private:
  std::size_t offset(Index s, Index t, Direction d, Completeness c) const {
    return static_cast<std::size_t>(((s * length_ + t) * 2 + static_cast<int>(d)) * 2 +
                                    static_cast<int>(c));
  }

  Index length_ = 0;
  std::vector<Scalar> cells_;
};

template <typename Scalar>
struct InsideResult {
  Chart<Scalar> alpha;
  Scalar log_partition = neg_inf<Scalar>();
};

template <typename Scalar>
struct DecodeResult {
  HeadArray heads;
  Scalar score = Scalar(0);
};

namespace detail {

constexpr auto L = Direction::Left;
constexpr auto R = Direction::Right;
constexpr auto I = Completeness::Incomplete;
constexpr auto C = Completeness::Complete;

// Right-complete items starting at ROOT are only built for the full span when
// ROOT is limited to one child.
inline bool right_complete_allowed(Index s, Index t, Index length, const TreeOptions& opts) {
  return !opts.single_root || s > 0 || t == length - 1;
}

template <typename Derived>
void check_scores(const Eigen::MatrixBase<Derived>& scores) {
  const Index l = scores.rows();
  if (scores.cols() != l) throw ConfigError("arc score matrix must be square");
  if (l < 2) throw ConfigError("sentence must contain ROOT and at least one word");
  for (Index h = 0; h < l; ++h)
    for (Index m = 1; m < l; ++m)
      if (h != m && std::isnan(scores(h, m)))
        throw NumericError("NaN arc score at (" + std::to_string(h) + ", " + std::to_string(m) +
                           ")");
}

}  // namespace detail

/// Inside pass: log-sum over all projective trees of every chart item.
/// The returned log partition is alpha[0, l-1, R, C].
template <typename Derived>
InsideResult<typename Derived::Scalar> inside(const Eigen::MatrixBase<Derived>& scores,
                                              const TreeOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using namespace detail;
  check_scores(scores);
  const Index l = scores.rows();

  InsideResult<Scalar> out{Chart<Scalar>(l), neg_inf<Scalar>()};
  auto& a = out.alpha;
  for (Index s = 0; s < l; ++s) {
    if (s > 0) a(s, s, L, C) = 0;
    a(s, s, R, C) = 0;
  }

  for (Index k = 1; k < l; ++k) {
    for (Index s = 0; s + k < l; ++s) {
      const Index t = s + k;

      LogSumAccumulator<Scalar> join;
      for (Index u = s; u < t; ++u) join.add(log_mul(a(s, u, R, C), a(u + 1, t, L, C)));
      const Scalar joined = join.value();
      if (s > 0) a(s, t, L, I) = log_mul(joined, Scalar(scores(t, s)));
      a(s, t, R, I) = log_mul(joined, Scalar(scores(s, t)));

      if (s > 0) {
        LogSumAccumulator<Scalar> acc;
        for (Index u = s; u < t; ++u) acc.add(log_mul(a(s, u, L, C), a(u, t, L, I)));
        a(s, t, L, C) = acc.value();
      }
      if (right_complete_allowed(s, t, l, opts)) {
        LogSumAccumulator<Scalar> acc;
        for (Index u = s; u < t; ++u) acc.add(log_mul(a(s, u + 1, R, I), a(u + 1, t, R, C)));
        a(s, t, R, C) = acc.value();
      }
    }
  }
  out.log_partition = a(0, l - 1, R, C);
  return out;
}

/// Outside pass matching inside(): beta[0, l-1, R, C] = 0 and every other item
/// accumulates the log-weight of all contexts that complete it.
template <typename Derived>
Chart<typename Derived::Scalar> outside(const Eigen::MatrixBase<Derived>& scores,
                                        const Chart<typename Derived::Scalar>& alpha,
                                        const TreeOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using namespace detail;
  const Index l = scores.rows();
  if (alpha.length() != l) throw ConfigError("inside chart does not match score matrix");

  Chart<Scalar> b(l);
  const auto& a = alpha;
  auto push = [&](Index s, Index t, Direction d, Completeness c, Scalar x) {
    b(s, t, d, c) = log_add(b(s, t, d, c), x);
  };
  b(0, l - 1, R, C) = 0;

  for (Index k = l - 1; k >= 1; --k) {
    for (Index s = 0; s + k < l; ++s) {
      const Index t = s + k;
      if (right_complete_allowed(s, t, l, opts)) {
        const Scalar ctx = b(s, t, R, C);
        for (Index u = s; u < t; ++u) {
          push(s, u + 1, R, I, log_mul(ctx, a(u + 1, t, R, C)));
          push(u + 1, t, R, C, log_mul(ctx, a(s, u + 1, R, I)));
        }
      }
      if (s > 0) {
        const Scalar ctx = b(s, t, L, C);
        for (Index u = s; u < t; ++u) {
          push(s, u, L, C, log_mul(ctx, a(u, t, L, I)));
          push(u, t, L, I, log_mul(ctx, a(s, u, L, C)));
        }
      }
      {
        const Scalar ctx = log_mul(b(s, t, R, I), Scalar(scores(s, t)));
        for (Index u = s; u < t; ++u) {
          push(s, u, R, C, log_mul(ctx, a(u + 1, t, L, C)));
          push(u + 1, t, L, C, log_mul(ctx, a(s, u, R, C)));
        }
      }
      if (s > 0) {
        const Scalar ctx = log_mul(b(s, t, L, I), Scalar(scores(t, s)));
        for (Index u = s; u < t; ++u) {
          push(s, u, R, C, log_mul(ctx, a(u + 1, t, L, C)));
          push(u + 1, t, L, C, log_mul(ctx, a(s, u, R, C)));
        }
      }
    }
  }
  return b;
}

/// Posterior arc probabilities P(h, m) from matching inside/outside charts.
template <typename Scalar>
Matrix<Scalar> arc_marginals(const Chart<Scalar>& alpha, const Chart<Scalar>& beta,
                             Scalar log_partition) {
  using namespace detail;
  const Index l = alpha.length();
  Matrix<Scalar> p = Matrix<Scalar>::Zero(l, l);
  for (Index s = 0; s < l; ++s) {
    for (Index t = s + 1; t < l; ++t) {
      p(s, t) = log_exp(log_mul(alpha(s, t, R, I), beta(s, t, R, I), -log_partition));
      if (s > 0) p(t, s) = log_exp(log_mul(alpha(s, t, L, I), beta(s, t, L, I), -log_partition));
    }
  }
  return p;
}

template <typename Scalar>
struct MarginalResult {
  Matrix<Scalar> marginals;
  Scalar log_partition;
};

/// inside + outside + arc_marginals in one call.
template <typename Derived>
MarginalResult<typename Derived::Scalar> marginals(const Eigen::MatrixBase<Derived>& scores,
                                                   const TreeOptions& opts = {}) {
  auto in = inside(scores, opts);
  auto beta = outside(scores, in.alpha, opts);
  return {arc_marginals(in.alpha, beta, in.log_partition), in.log_partition};
}

/// Max-sum variant of inside() with backpointers. Ties go to the lowest split
/// index.
template <typename Derived>
DecodeResult<typename Derived::Scalar> eisner_decode(const Eigen::MatrixBase<Derived>& scores,
                                                     const TreeOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using namespace detail;
  check_scores(scores);
  const Index l = scores.rows();

  Chart<Scalar> best(l);
  Chart<Index> split(l, Index(-1));
  for (Index s = 0; s < l; ++s) {
    if (s > 0) best(s, s, L, C) = 0;
    best(s, s, R, C) = 0;
  }

  auto argmax = [&](Index s, Index t, auto&& item_score, Scalar& value, Index& where) {
    value = neg_inf<Scalar>();
    where = -1;
    for (Index u = s; u < t; ++u) {
      const Scalar x = item_score(u);
      if (!is_neg_inf(x) && (where < 0 || x > value)) {
        value = x;
        where = u;
      }
    }
  };

  for (Index k = 1; k < l; ++k) {
    for (Index s = 0; s + k < l; ++s) {
      const Index t = s + k;
      Scalar joined;
      Index at;
      argmax(s, t, [&](Index u) { return log_mul(best(s, u, R, C), best(u + 1, t, L, C)); },
             joined, at);
      if (s > 0) {
        best(s, t, L, I) = log_mul(joined, Scalar(scores(t, s)));
        split(s, t, L, I) = at;
      }
      best(s, t, R, I) = log_mul(joined, Scalar(scores(s, t)));
      split(s, t, R, I) = at;

      if (s > 0) {
        argmax(s, t, [&](Index u) { return log_mul(best(s, u, L, C), best(u, t, L, I)); },
               best(s, t, L, C), split(s, t, L, C));
      }
      if (right_complete_allowed(s, t, l, opts)) {
        argmax(s, t, [&](Index u) { return log_mul(best(s, u + 1, R, I), best(u + 1, t, R, C)); },
               best(s, t, R, C), split(s, t, R, C));
      }
    }
  }

  DecodeResult<Scalar> out;
  out.heads.assign(static_cast<std::size_t>(l), kNoHead);
  out.score = best(0, l - 1, R, C);

  struct Item {
    Index s, t;
    Direction d;
    Completeness c;
  };
  std::vector<Item> stack{{0, l - 1, R, C}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    if (it.s == it.t) continue;
    const Index u = split(it.s, it.t, it.d, it.c);
    if (it.c == C) {
      if (it.d == R) {
        stack.push_back({it.s, u + 1, R, I});
        stack.push_back({u + 1, it.t, R, C});
      } else {
        stack.push_back({it.s, u, L, C});
        stack.push_back({u, it.t, L, I});
      }
    } else {
      if (it.d == R)
        out.heads[static_cast<std::size_t>(it.t)] = static_cast<int>(it.s);
      else
        out.heads[static_cast<std::size_t>(it.s)] = static_cast<int>(it.t);
      stack.push_back({it.s, u, R, C});
      stack.push_back({u + 1, it.t, L, C});
    }
  }
  return out;
}

/// True iff heads encodes a tree rooted at 0 whose arcs never cross.
bool is_projective_tree(const HeadArray& heads, const TreeOptions& opts = {});

/// Sum of S over the tree's arcs. Throws ConfigError on an invalid tree.
template <typename Derived>
typename Derived::Scalar tree_score(const Eigen::MatrixBase<Derived>& scores,
                                    const HeadArray& heads) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<Index>(heads.size()) != scores.rows())
    throw ConfigError("head array length does not match score matrix");
  if (!is_projective_tree(heads)) throw ConfigError("head array is not a projective tree");
  Scalar total = 0;
  for (std::size_t m = 1; m < heads.size(); ++m) total += scores(heads[m], static_cast<Index>(m));
  return total;
}

/// All projective trees over l tokens (ROOT included), lexicographic in the
/// head array. Brute-force reference for the dynamic programs; l <= 9.
std::vector<HeadArray> enumerate_projective(Index length, const TreeOptions& opts = {});

namespace brute_force {

// Reference quantities computed by summing over an explicit tree list.

template <typename Derived>
typename Derived::Scalar log_partition(const Eigen::MatrixBase<Derived>& scores,
                                       const std::vector<HeadArray>& trees) {
  using Scalar = typename Derived::Scalar;
  LogSumAccumulator<Scalar> acc;
  for (const auto& tree : trees) acc.add(tree_score(scores, tree));
  return acc.value();
}

template <typename Derived>
Matrix<typename Derived::Scalar> arc_expectations(const Eigen::MatrixBase<Derived>& scores,
                                                  const std::vector<HeadArray>& trees) {
  using Scalar = typename Derived::Scalar;
  const Scalar log_z = log_partition(scores, trees);
  Matrix<Scalar> p = Matrix<Scalar>::Zero(scores.rows(), scores.cols());
  for (const auto& tree : trees) {
    const Scalar w = std::exp(tree_score(scores, tree) - log_z);
    for (std::size_t m = 1; m < tree.size(); ++m) p(tree[m], static_cast<Index>(m)) += w;
  }
  return p;
}

// First tree (in list order) attaining the maximum score.
template <typename Derived>
DecodeResult<typename Derived::Scalar> best_tree(const Eigen::MatrixBase<Derived>& scores,
                                                 const std::vector<HeadArray>& trees) {
  DecodeResult<typename Derived::Scalar> out;
  bool first = true;
  for (const auto& tree : trees) {
    const auto s = tree_score(scores, tree);
    if (first || s > out.score) {
      out.score = s;
      out.heads = tree;
      first = false;
    }
  }
  return out;
}

}  // namespace brute_force

}  // namespace gaplap::chart
