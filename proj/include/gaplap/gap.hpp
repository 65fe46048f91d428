#pragma once

// Globally autoencoding parser: a tree CRF over encoder scores paired with a
// head-word -> modifier-word categorical decoder. Unlabeled sentences feed
// exact arc posteriors into count buffers; the decoder is re-estimated in
// closed form.

#include "gaplap/chart.hpp"
#include "gaplap/common.hpp"
#include "gaplap/corpus.hpp"

#include <map>
#include <span>
#include <utility>

namespace gaplap::gap {

using Eigen::MatrixXd;

// log_theta(m, h) = log P(modifier word m | head word h); every column is a
// distribution over modifiers.
struct DecoderParams {
  MatrixXd log_theta;

  Index vocab_size() const { return log_theta.rows(); }
};

// Sparse (head word, modifier word) -> accumulated expected count.
class CountBuffer {
 public:
  using Key = std::pair<int, int>;

  void add(int head_word, int modifier_word, double value);
  void merge(const CountBuffer& other);
  double at(int head_word, int modifier_word) const;
  const std::map<Key, double>& entries() const { return counts_; }
  bool empty() const { return counts_.empty(); }
  void clear() { counts_.clear(); }

 private:
  std::map<Key, double> counts_;
};

// Linear anneal of the entropy-regularization weight across epochs.
struct AnnealSchedule {
  static constexpr double kMaxSigma = 0.9;

  AnnealSchedule(double start, double end, int epochs);
  double at(int epoch) const;

  double start;
  double end;
  int epochs;
};

/// Add-lambda estimate from gold arcs of the labeled sentences.
DecoderParams init_decoder(std::span<const corpus::IndexedSentence> labeled, Index vocab_size,
                           double smoothing);

/// S'(h, m) = S(h, m) + log_theta(word(m), word(h)) on legal arcs.
MatrixXd transformed_scores(const MatrixXd& scores, const DecoderParams& decoder,
                            std::span<const int> words);

struct SupervisedLoss {
  double value = 0;   // J_l, to maximize
  MatrixXd gradient;  // dJ_l / dS'
};

/// J_l = score of the gold tree minus log Z, with its gradient gold - P.
SupervisedLoss supervised_loss(const MatrixXd& scores, const HeadArray& gold,
                               const chart::TreeOptions& opts = {});

/// J_u = log U - log Z where U is the partition function of S'.
double unlabeled_objective(const MatrixXd& scores, const MatrixXd& transformed,
                           const chart::TreeOptions& opts = {});

/// Arc posteriors Q(h, m) under the transformed scores.
MatrixXd posterior_marginals(const MatrixXd& transformed, const chart::TreeOptions& opts = {});

/// buffer[(word(h), word(m))] += Q(h, m)^(1 / (1 - sigma)) for every legal arc.
void accumulate_counts(CountBuffer& buffer, const MatrixXd& posterior, std::span<const int> words,
                       double sigma);

/// Closed-form maximizer of sum_{h,m} buffer(h, m) log theta(m, h) under the
/// per-head simplex constraint, with add-lambda smoothing.
DecoderParams m_step(const CountBuffer& buffer, Index vocab_size, double smoothing);

/// sum_{h,m} weight(h,m) * log_theta(word(m), word(h)): the expected decoder
/// log-likelihood when weight is an arc posterior.
double expected_log_likelihood(const MatrixXd& posterior, const DecoderParams& decoder,
                               std::span<const int> words);

/// Objective that m_step maximizes, evaluated at an arbitrary decoder.
double buffer_objective(const CountBuffer& buffer, const DecoderParams& decoder);

/// Max-sum decode of the transformed scores.
HeadArray predict(const MatrixXd& scores, const DecoderParams& decoder, std::span<const int> words,
                  const chart::TreeOptions& opts = {});

}  // namespace gaplap::gap
