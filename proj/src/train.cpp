#include "gaplap/train.hpp"

#include "gaplap/lap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace gaplap {

namespace {

void require_finite(double value, std::string_view what, int epoch, std::size_t sentence) {
  if (!std::isfinite(value))
    throw NumericError("non-finite " + std::string(what) + " at epoch " + std::to_string(epoch) +
                       ", sentence " + std::to_string(sentence));
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// One Adam step on -J_l for a labeled sentence; returns J_l.
double supervised_step(Model& model, encoder::AdamState& adam,
                       const corpus::IndexedSentence& s, int epoch, std::size_t index) {
  const auto fwd = encoder::forward(s, model.encoder);
  const bool use_decoder = model.mode == Mode::Gap && model.decoder;
  const auto scores =
      use_decoder ? gap::transformed_scores(fwd.scores, *model.decoder, s.words) : fwd.scores;
  const auto loss = gap::supervised_loss(scores, s.heads, model.tree);
  require_finite(loss.value, "J_l", epoch, index);
  const auto grads = encoder::backward(-loss.gradient, fwd, model.encoder);
  encoder::adam_step(model.encoder, grads, adam);
  return loss.value;
}

double lap_step(Model& model, encoder::AdamState& adam, const TrainConfig& config,
                const corpus::IndexedSentence& s, std::mt19937_64& rng, int epoch,
                std::size_t index) {
  lap::LapOptions opts;
  opts.use_tree = s.labeled();
  opts.kl_weight = config.kl_weight;
  opts.tree = model.tree;
  const auto noise =
      lap::draw_noise(model.encoder.dims.latent_dim, s.size(), std::max(config.samples, 1), rng);
  auto loss = lap::lap_loss(s, model.encoder, opts, noise);
  require_finite(loss.breakdown.total, "LAP objective", epoch, index);
  encoder::EncoderParams descent = encoder::EncoderParams::zeros(model.encoder.dims);
  encoder::add_scaled(descent, loss.gradient, -1.0);
  encoder::adam_step(model.encoder, descent, adam);
  return loss.breakdown.total;
}

}  // namespace

std::string format_log_line(const EpochLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d\t%.4f\t%.6f\t%.6f\t%.4f", e.epoch, e.sigma,
                e.labeled_objective, e.unlabeled_objective, e.dev_uas);
  return buf;
}

Model initial_model(const TrainConfig& config, const corpus::Vocabulary& vocab,
                    std::span<const corpus::IndexedSentence> labeled, std::mt19937_64& rng) {
  Model model;
  model.mode = config.mode;
  model.vocab = vocab;
  model.tree = config.tree;
  encoder::Dims dims = config.dims;
  dims.word_vocab = vocab.word_count();
  dims.pos_vocab = vocab.pos_count();
  dims.latent = config.mode == Mode::Lap;
  model.encoder = encoder::init_params(dims, rng);
  if (config.mode == Mode::Gap)
    model.decoder = gap::init_decoder(labeled, dims.word_vocab, config.init_smoothing);
  return model;
}

double mean_unlabeled_objective(const Model& model,
                                std::span<const corpus::IndexedSentence> sentences) {
  if (!model.decoder || sentences.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : sentences) {
    const auto scores = encoder::forward(s, model.encoder).scores;
    total += gap::unlabeled_objective(
        scores, gap::transformed_scores(scores, *model.decoder, s.words), model.tree);
  }
  return total / static_cast<double>(sentences.size());
}

TrainResult train(const TrainConfig& config, Model model,
                  std::span<const corpus::IndexedSentence> labeled,
                  std::span<const corpus::IndexedSentence> unlabeled,
                  std::span<const corpus::IndexedSentence> dev, std::mt19937_64& rng,
                  std::ostream* log_out) {
  if (labeled.empty() && config.mode != Mode::Lap)
    throw DataError("training needs at least one labeled sentence");
  for (const auto& s : labeled)
    if (!s.labeled()) throw DataError("labeled set contains a sentence without a gold tree");

  TrainResult result;
  result.best = model;
  double best_uas = -1.0;
  int stale = 0;
  encoder::AdamState adam = encoder::make_adam(model.encoder, config.learning_rate);
  const gap::AnnealSchedule anneal(config.sigma_start, config.sigma_end, config.epochs);
  const Index vocab = model.encoder.dims.word_vocab;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch + 1;

    if (config.mode == Mode::Lap) {
      // Labeled and unlabeled sentences share one Adam stream.
      const std::size_t n = labeled.size() + unlabeled.size();
      double sum_l = 0.0, sum_u = 0.0;
      for (std::size_t k : shuffled(n, rng)) {
        const bool is_labeled = k < labeled.size();
        const auto& s = is_labeled ? labeled[k] : unlabeled[k - labeled.size()];
        const double value = lap_step(model, adam, config, s, rng, epoch, k);
        (is_labeled ? sum_l : sum_u) += value;
      }
      if (!labeled.empty()) entry.labeled_objective = sum_l / static_cast<double>(labeled.size());
      if (!unlabeled.empty())
        entry.unlabeled_objective = sum_u / static_cast<double>(unlabeled.size());
    } else {
      double sum_l = 0.0;
      for (std::size_t k : shuffled(labeled.size(), rng))
        sum_l += supervised_step(model, adam, labeled[k], epoch, k);
      entry.labeled_objective = sum_l / static_cast<double>(labeled.size());

      if (config.mode == Mode::Gap && !unlabeled.empty()) {
        const double sigma = anneal.at(epoch);
        entry.sigma = sigma;
        gap::CountBuffer buffer;
        double sum_u = 0.0;
        for (std::size_t k = 0; k < unlabeled.size(); ++k) {
          const auto& s = unlabeled[k];
          const auto scores = encoder::forward(s, model.encoder).scores;
          const auto transformed = gap::transformed_scores(scores, *model.decoder, s.words);
          const auto posterior = chart::marginals(transformed, model.tree);
          const double ju =
              posterior.log_partition - chart::inside(scores, model.tree).log_partition;
          require_finite(ju, "J_u", epoch, k);
          sum_u += ju;
          gap::accumulate_counts(buffer, posterior.marginals, s.words, sigma);
        }
        if (config.mix_labeled_counts) {
          for (const auto& s : labeled)
            for (std::size_t m = 1; m < s.heads.size(); ++m)
              buffer.add(s.words[static_cast<std::size_t>(s.heads[m])], s.words[m], 1.0);
        }
        entry.unlabeled_objective = sum_u / static_cast<double>(unlabeled.size());
        model.decoder = gap::m_step(buffer, vocab, config.mstep_smoothing);
      }
    }

    if (!dev.empty()) {
      entry.dev_uas = evaluate_uas(model, dev, config.ignore_punct);
      if (entry.dev_uas > best_uas) {
        best_uas = entry.dev_uas;
        result.best = model;
        result.best_epoch = entry.epoch;
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      result.best = model;
      result.best_epoch = entry.epoch;
    }
    result.log.push_back(entry);
    if (log_out) *log_out << format_log_line(entry) << '\n' << std::flush;
    if (!dev.empty() && stale >= config.patience) break;
  }
  return result;
}

}  // namespace gaplap
