#pragma once

// Synthetic treebanks drawn from a planted head -> modifier lexical model.
// Test tooling: gives training runs a corpus whose generating decoder is
// known.

#include "gaplap/corpus.hpp"

#include <cstdint>

namespace gaplap::synth {

struct SynthConfig {
  int sentences = 100;
  int vocab = 50;  // distinct word forms, at least 7
  std::uint64_t seed = 1;
  int min_length = 3;  // words, ROOT excluded
  int max_length = 12;
};

/// Samples projective trees head-outward: every head draws a number of
/// children from a tag-dependent valence model and each child word from the
/// head word's planted modifier distribution. Children are placed on the side
/// preferred by their tag.
corpus::Treebank synthesize(const SynthConfig& config);

}  // namespace gaplap::synth
