#include "gaplap/gap.hpp"

#include "gaplap/logspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gaplap::gap {

void CountBuffer::add(int head_word, int modifier_word, double value) {
  if (value < 0.0 || !std::isfinite(value)) throw NumericError("count increments must be finite and >= 0");
  if (value == 0.0) return;
  counts_[{head_word, modifier_word}] += value;
}

void CountBuffer::merge(const CountBuffer& other) {
  for (const auto& [key, value] : other.counts_) counts_[key] += value;
}

double CountBuffer::at(int head_word, int modifier_word) const {
  auto it = counts_.find({head_word, modifier_word});
  return it == counts_.end() ? 0.0 : it->second;
}

AnnealSchedule::AnnealSchedule(double start_sigma, double end_sigma, int num_epochs)
    : start(std::clamp(start_sigma, 0.0, kMaxSigma)),
      end(std::clamp(end_sigma, 0.0, std::clamp(start_sigma, 0.0, kMaxSigma))),
      epochs(num_epochs) {}

double AnnealSchedule::at(int epoch) const {
  if (epochs <= 1) return start;
  const double frac =
      static_cast<double>(std::clamp(epoch, 0, epochs - 1)) / static_cast<double>(epochs - 1);
  return start + (end - start) * frac;
}

DecoderParams init_decoder(std::span<const corpus::IndexedSentence> labeled, Index vocab_size,
                           double smoothing) {
  if (labeled.empty()) throw DataError("decoder initialization needs labeled sentences");
  CountBuffer counts;
  for (const auto& s : labeled) {
    if (!s.labeled()) throw DataError("decoder initialization got an unlabeled sentence");
    for (std::size_t m = 1; m < s.heads.size(); ++m)
      counts.add(s.words[static_cast<std::size_t>(s.heads[m])], s.words[m], 1.0);
  }
  return m_step(counts, vocab_size, smoothing);
}

MatrixXd transformed_scores(const MatrixXd& scores, const DecoderParams& decoder,
                            std::span<const int> words) {
  const Index l = scores.rows();
  if (static_cast<Index>(words.size()) != l)
    throw ConfigError("transformed_scores: word count does not match score matrix");
  MatrixXd out = scores;
  for (Index m = 1; m < l; ++m) {
    const int wm = words[static_cast<std::size_t>(m)];
    for (Index h = 0; h < l; ++h) {
      if (h == m) continue;
      out(h, m) = log_mul(scores(h, m), decoder.log_theta(wm, words[static_cast<std::size_t>(h)]));
    }
  }
  return out;
}

SupervisedLoss supervised_loss(const MatrixXd& scores, const HeadArray& gold,
                               const chart::TreeOptions& opts) {
  if (static_cast<Index>(gold.size()) != scores.rows() || !chart::is_projective_tree(gold, opts))
    throw DataError("supervised loss needs a projective gold tree of matching length");
  auto result = chart::marginals(scores, opts);
  SupervisedLoss out;
  out.value = chart::tree_score(scores, gold) - result.log_partition;
  out.gradient = -result.marginals;
  for (std::size_t m = 1; m < gold.size(); ++m) out.gradient(gold[m], static_cast<Index>(m)) += 1.0;
  return out;
}

double unlabeled_objective(const MatrixXd& scores, const MatrixXd& transformed,
                           const chart::TreeOptions& opts) {
  return chart::inside(transformed, opts).log_partition - chart::inside(scores, opts).log_partition;
}

MatrixXd posterior_marginals(const MatrixXd& transformed, const chart::TreeOptions& opts) {
  return chart::marginals(transformed, opts).marginals;
}

void accumulate_counts(CountBuffer& buffer, const MatrixXd& posterior, std::span<const int> words,
                       double sigma) {
  if (!(sigma >= 0.0 && sigma < 1.0))
    throw ConfigError("entropy weight sigma must lie in [0, 1), got " + std::to_string(sigma));
  const double power = 1.0 / (1.0 - sigma);
  const Index l = posterior.rows();
  for (Index m = 1; m < l; ++m)
    for (Index h = 0; h < l; ++h)
      if (h != m)
        buffer.add(words[static_cast<std::size_t>(h)], words[static_cast<std::size_t>(m)],
                   std::pow(posterior(h, m), power));
}

DecoderParams m_step(const CountBuffer& buffer, Index vocab_size, double smoothing) {
  if (smoothing < 0.0) throw ConfigError("smoothing must be >= 0");
  if (vocab_size < 1) throw ConfigError("decoder vocabulary is empty");
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(vocab_size);
  for (const auto& [key, value] : buffer.entries()) {
    if (key.first < 0 || key.first >= vocab_size || key.second < 0 || key.second >= vocab_size)
      throw ConfigError("count buffer word id outside decoder vocabulary");
    totals(key.first) += value;
  }
  const double v = static_cast<double>(vocab_size);
  auto safe_log = [](double p) { return p > 0.0 ? std::log(p) : neg_inf<double>(); };

  DecoderParams out;
  out.log_theta.resize(vocab_size, vocab_size);
  for (Index h = 0; h < vocab_size; ++h) {
    const double denom = totals(h) + smoothing * v;
    // No mass and no smoothing: fall back to uniform.
    out.log_theta.col(h).setConstant(denom > 0.0 ? safe_log(smoothing / denom) : -std::log(v));
  }
  for (const auto& [key, value] : buffer.entries()) {
    const auto [h, m] = key;
    out.log_theta(m, h) = std::log((value + smoothing) / (totals(h) + smoothing * v));
  }
  return out;
}

double expected_log_likelihood(const MatrixXd& posterior, const DecoderParams& decoder,
                               std::span<const int> words) {
  const Index l = posterior.rows();
  double total = 0.0;
  for (Index m = 1; m < l; ++m)
    for (Index h = 0; h < l; ++h)
      if (h != m && posterior(h, m) > 0.0)
        total += posterior(h, m) * decoder.log_theta(words[static_cast<std::size_t>(m)],
                                                     words[static_cast<std::size_t>(h)]);
  return total;
}

double buffer_objective(const CountBuffer& buffer, const DecoderParams& decoder) {
  double total = 0.0;
  for (const auto& [key, value] : buffer.entries())
    total += value * decoder.log_theta(key.second, key.first);
  return total;
}

HeadArray predict(const MatrixXd& scores, const DecoderParams& decoder, std::span<const int> words,
                  const chart::TreeOptions& opts) {
  return chart::eisner_decode(transformed_scores(scores, decoder, words), opts).heads;
}

}  // namespace gaplap::gap
