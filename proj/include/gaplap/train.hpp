#pragma once

#include "gaplap/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gaplap {

struct TrainConfig {
  Mode mode = Mode::Gap;
  encoder::Dims dims;  // vocabulary sizes are filled from the vocabulary
  double learning_rate = 1e-3;
  int epochs = 30;
  int patience = 5;
  std::uint64_t seed = 1;
  // GAP entropy anneal; the start is clamped to AnnealSchedule::kMaxSigma.
  double sigma_start = 1.0;
  double sigma_end = 0.3;
  double init_smoothing = 0.1;
  double mstep_smoothing = 1e-3;
  // Adds gold arcs of labeled sentences to every M-step buffer.
  bool mix_labeled_counts = false;
  // LAP.
  int samples = 1;
  double kl_weight = 1.0;
  bool ignore_punct = false;
  chart::TreeOptions tree;
};

struct EpochLog {
  int epoch = 0;
  double sigma = 0;
  double labeled_objective = 0;    // mean J_l (GAP/CRF) or mean labeled ELBO (LAP)
  double unlabeled_objective = 0;  // mean J_u (GAP) or mean unlabeled ELBO (LAP)
  double dev_uas = 0;
};

std::string format_log_line(const EpochLog& entry);

struct TrainResult {
  Model best;
  int best_epoch = -1;  // -1: no epoch improved on the initial model
  std::vector<EpochLog> log;
};

/// Random encoder (and for GAP, a decoder initialized from the labeled data).
Model initial_model(const TrainConfig& config, const corpus::Vocabulary& vocab,
                    std::span<const corpus::IndexedSentence> labeled, std::mt19937_64& rng);

/// Runs the configured training loop. When dev is non-empty the model with
/// the best dev UAS is returned and training stops after `patience` epochs
/// without improvement. One log line per epoch goes to log_out when given.
TrainResult train(const TrainConfig& config, Model model,
                  std::span<const corpus::IndexedSentence> labeled,
                  std::span<const corpus::IndexedSentence> unlabeled,
                  std::span<const corpus::IndexedSentence> dev, std::mt19937_64& rng,
                  std::ostream* log_out = nullptr);

/// Mean J_u over sentences under the model's encoder and decoder.
double mean_unlabeled_objective(const Model& model,
                                std::span<const corpus::IndexedSentence> sentences);

}  // namespace gaplap
