#pragma once

// Neural arc scorer: word and POS embeddings, a bidirectional LSTM, and
//   s(h, m) = w' tanh(W_h o_h + W_m o_m + b)
// with hand-written reverse-mode gradients and Adam.

#include "gaplap/common.hpp"
#include "gaplap/corpus.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace gaplap::encoder {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Dims {
  Index word_vocab = 2;
  Index pos_vocab = 2;
  Index word_dim = 100;
  Index pos_dim = 25;
  Index hidden_dim = 125;
  Index arc_dim = 100;
  Index latent_dim = 100;
  // Adds the Gaussian latent heads and the word reconstruction layer; the
  // arc scorer then reads latent vectors instead of LSTM states.
  bool latent = false;

  Index input_dim() const { return word_dim + pos_dim; }
  Index state_dim() const { return 2 * hidden_dim; }
  Index scorer_input_dim() const { return latent ? latent_dim : state_dim(); }

  friend bool operator==(const Dims&, const Dims&) = default;
};

// Gate rows are stacked as [input; forget; cell; output].
struct LstmParams {
  MatrixXd input_weights;      // 4h x in
  MatrixXd recurrent_weights;  // 4h x h
  VectorXd bias;               // 4h
};

struct EncoderParams {
  Dims dims;
  MatrixXd word_embeddings;  // |V_w| x d_w
  MatrixXd pos_embeddings;   // |V_p| x d_p
  LstmParams forward_lstm;
  LstmParams backward_lstm;
  MatrixXd head_proj;  // d_a x scorer_input
  MatrixXd mod_proj;   // d_a x scorer_input
  VectorXd arc_bias;   // d_a
  VectorXd arc_weights;  // d_a
  // Present only when dims.latent.
  MatrixXd mu_proj;      // d_z x 2h
  MatrixXd logvar_proj;  // d_z x 2h
  MatrixXd recon_proj;   // |V_w| x d_z
  VectorXd recon_bias;   // |V_w|

  static EncoderParams zeros(const Dims& dims);
};

/// Calls f(name, t0, t1, ...) for every tensor, zipping the same field of each
/// params object. Latent tensors are visited only when the first object has
/// dims.latent set.
template <typename F, typename First, typename... Rest>
void for_each_tensor(F&& f, First& first, Rest&... rest) {
  f("encoder.word_embeddings", first.word_embeddings, rest.word_embeddings...);
  f("encoder.pos_embeddings", first.pos_embeddings, rest.pos_embeddings...);
  f("encoder.lstm_fwd.input", first.forward_lstm.input_weights, rest.forward_lstm.input_weights...);
  f("encoder.lstm_fwd.recurrent", first.forward_lstm.recurrent_weights,
    rest.forward_lstm.recurrent_weights...);
  f("encoder.lstm_fwd.bias", first.forward_lstm.bias, rest.forward_lstm.bias...);
  f("encoder.lstm_bwd.input", first.backward_lstm.input_weights,
    rest.backward_lstm.input_weights...);
  f("encoder.lstm_bwd.recurrent", first.backward_lstm.recurrent_weights,
    rest.backward_lstm.recurrent_weights...);
  f("encoder.lstm_bwd.bias", first.backward_lstm.bias, rest.backward_lstm.bias...);
  f("encoder.head_proj", first.head_proj, rest.head_proj...);
  f("encoder.mod_proj", first.mod_proj, rest.mod_proj...);
  f("encoder.arc_bias", first.arc_bias, rest.arc_bias...);
  f("encoder.arc_weights", first.arc_weights, rest.arc_weights...);
  if (first.dims.latent) {
    f("lap.mu_proj", first.mu_proj, rest.mu_proj...);
    f("lap.logvar_proj", first.logvar_proj, rest.logvar_proj...);
    f("lap.recon_proj", first.recon_proj, rest.recon_proj...);
    f("lap.recon_bias", first.recon_bias, rest.recon_bias...);
  }
}

/// Uniform(±sqrt(3 / fan_in)) weights, forget-gate bias 1, zero biases.
EncoderParams init_params(const Dims& dims, std::mt19937_64& rng);

/// Overwrites embedding rows of words present in the pretrained table.
/// Returns the number of rows replaced.
std::size_t apply_pretrained(EncoderParams& params, const corpus::Vocabulary& vocab,
                             const corpus::Embeddings& embeddings);

Index parameter_count(const EncoderParams& params);

/// params += scale * other, tensor by tensor.
void add_scaled(EncoderParams& params, const EncoderParams& other, double scale);

bool all_finite(const EncoderParams& params);

// ---------------------------------------------------------------------------
// Forward pass.

struct LstmTrace {
  MatrixXd gates;   // 4h x l, post-activation, in processing order
  MatrixXd cells;   // h x l
  MatrixXd states;  // h x l
};

struct EncoderTrace {
  std::vector<int> words;
  std::vector<int> tags;
  MatrixXd inputs;  // (d_w + d_p) x l
  LstmTrace forward;
  LstmTrace backward;  // step k reads token l-1-k
};

struct Encoded {
  MatrixXd hidden;  // 2h x l, column t = [forward_t; backward_t]
  EncoderTrace trace;
};

Encoded encode(std::span<const int> words, std::span<const int> tags, const EncoderParams& params);
Encoded encode(const corpus::IndexedSentence& sentence, const EncoderParams& params);

/// Accumulates into grads the gradient flowing from d_hidden back to the LSTM
/// weights and embeddings.
void encode_backward(const MatrixXd& d_hidden, const EncoderTrace& trace,
                     const EncoderParams& params, EncoderParams& grads);

/// l x l arc scores from per-token input columns. Column 0 and the diagonal
/// are set to the -inf surrogate.
MatrixXd score_arcs(const MatrixXd& inputs, const EncoderParams& params);

/// Backpropagates d_scores through score_arcs. Scorer gradients are added to
/// grads; the gradient with respect to inputs is returned.
MatrixXd score_arcs_backward(const MatrixXd& d_scores, const MatrixXd& inputs,
                             const EncoderParams& params, EncoderParams& grads);

// Encoder + scorer in one step, keeping what backward() needs.
struct ArcForward {
  Encoded encoded;
  MatrixXd scores;
  bool valid() const { return encoded.hidden.size() > 0; }
};

ArcForward forward(const corpus::IndexedSentence& sentence, const EncoderParams& params);

/// Gradients of a scalar loss whose gradient with respect to the arc scores
/// is d_scores. Throws ConfigError without a cached forward pass.
EncoderParams backward(const MatrixXd& d_scores, const ArcForward& cache,
                       const EncoderParams& params);

// ---------------------------------------------------------------------------
// Adam.

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  EncoderParams first_moment;
  EncoderParams second_moment;
};

AdamState make_adam(const EncoderParams& params, double learning_rate = 1e-3);

/// One bias-corrected Adam step that decreases the loss whose gradient is
/// grads. Throws NumericError (leaving everything untouched) on a non-finite
/// gradient.
void adam_step(EncoderParams& params, const EncoderParams& grads, AdamState& state);

}  // namespace gaplap::encoder
