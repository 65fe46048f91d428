#pragma once

// Locally autoencoding parser: one diagonal Gaussian latent vector per token,
// trained on the reparameterized ELBO
//   E_q[log p(x | z)] - KL(q(z | x) || N(0, I)) + eps * E_q[log p(T | z)].

#include "gaplap/chart.hpp"
#include "gaplap/common.hpp"
#include "gaplap/corpus.hpp"
#include "gaplap/encoder.hpp"

#include <random>
#include <span>
#include <vector>

namespace gaplap::lap {

using Eigen::MatrixXd;
using encoder::EncoderParams;

inline constexpr double kLogvarMin = -8.0;
inline constexpr double kLogvarMax = 8.0;

// Column t holds token t (ROOT included).
struct GaussianParams {
  MatrixXd mean;    // d_z x l
  MatrixXd logvar;  // d_z x l
};

/// mean = W_mu o_t, logvar = clamp(W_logvar o_t, [-8, 8]).
GaussianParams latent_params(const MatrixXd& hidden, const EncoderParams& params);

/// Reparameterized sample z = mean + exp(logvar / 2) * noise.
MatrixXd sample_latent(const GaussianParams& g, const MatrixXd& noise);

/// KL divergence from N(mean, diag(exp(logvar))) to N(0, I), summed over
/// tokens and dimensions.
double kl_gaussian(const GaussianParams& g);

/// sum_{t >= 1} log softmax(W_rec z_t + b_rec)[word_t].
double reconstruction_logprob(const MatrixXd& z, std::span<const int> words,
                              const EncoderParams& params);

struct LapLossBreakdown {
  double recon = 0;
  double kl = 0;
  double tree = 0;
  double total = 0;  // recon - kl_weight * kl + tree
};

struct LapLoss {
  LapLossBreakdown breakdown;
  EncoderParams gradient;  // d total / d params
};

struct LapOptions {
  bool use_tree = false;  // eps; requires gold heads
  double kl_weight = 1.0;
  chart::TreeOptions tree;
};

/// ELBO estimate averaged over the supplied standard-normal noise draws (one
/// d_z x l matrix per sample), with exact gradients for that noise.
LapLoss lap_loss(const corpus::IndexedSentence& sentence, const EncoderParams& params,
                 const LapOptions& opts, std::span<const MatrixXd> noise);

/// Standard-normal noise for `samples` reparameterized draws.
std::vector<MatrixXd> draw_noise(Index latent_dim, Index length, int samples,
                                 std::mt19937_64& rng);

/// Decodes with z = mean.
chart::DecodeResult<double> lap_predict(const corpus::IndexedSentence& sentence,
                                        const EncoderParams& params,
                                        const chart::TreeOptions& opts = {});

}  // namespace gaplap::lap
