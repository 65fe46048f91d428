#include "gaplap/encoder.hpp"

#include "gaplap/logspace.hpp"

#include <cmath>
#include <string>
#include <type_traits>

namespace gaplap::encoder {

namespace {

VectorXd sigmoid(const VectorXd& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

LstmParams lstm_zeros(Index in, Index hidden) {
  return {MatrixXd::Zero(4 * hidden, in), MatrixXd::Zero(4 * hidden, hidden),
          VectorXd::Zero(4 * hidden)};
}

LstmTrace run_lstm(const LstmParams& p, const MatrixXd& inputs, bool reverse) {
  const Index l = inputs.cols();
  const Index h = p.recurrent_weights.cols();
  LstmTrace tr{MatrixXd(4 * h, l), MatrixXd(h, l), MatrixXd(h, l)};
  VectorXd state = VectorXd::Zero(h);
  VectorXd cell = VectorXd::Zero(h);
  for (Index k = 0; k < l; ++k) {
    const Index t = reverse ? l - 1 - k : k;
    const VectorXd pre = p.input_weights * inputs.col(t) + p.recurrent_weights * state + p.bias;
    auto gates = tr.gates.col(k);
    gates.segment(0, h) = sigmoid(pre.segment(0, h));
    gates.segment(h, h) = sigmoid(pre.segment(h, h));
    gates.segment(2 * h, h) = pre.segment(2 * h, h).array().tanh().matrix();
    gates.segment(3 * h, h) = sigmoid(pre.segment(3 * h, h));
    cell = gates.segment(h, h).cwiseProduct(cell) + gates.segment(0, h).cwiseProduct(gates.segment(2 * h, h));
    state = gates.segment(3 * h, h).cwiseProduct(cell.array().tanh().matrix());
    tr.cells.col(k) = cell;
    tr.states.col(k) = state;
  }
  return tr;
}

// d_states column t is the gradient w.r.t. this direction's output at token t.
// Returns the gradient w.r.t. the inputs.
MatrixXd lstm_backward(const LstmParams& p, const LstmTrace& tr, const MatrixXd& inputs,
                       const MatrixXd& d_states, bool reverse, LstmParams& g) {
  const Index l = inputs.cols();
  const Index h = p.recurrent_weights.cols();
  MatrixXd d_inputs = MatrixXd::Zero(inputs.rows(), l);
  VectorXd d_state_next = VectorXd::Zero(h);
  VectorXd d_cell_next = VectorXd::Zero(h);
  VectorXd d_pre(4 * h);
  for (Index k = l - 1; k >= 0; --k) {
    const Index t = reverse ? l - 1 - k : k;
    const auto gates = tr.gates.col(k);
    const auto in_gate = gates.segment(0, h).array();
    const auto forget = gates.segment(h, h).array();
    const auto cand = gates.segment(2 * h, h).array();
    const auto out_gate = gates.segment(3 * h, h).array();
    const VectorXd tanh_cell = tr.cells.col(k).array().tanh().matrix();
    const VectorXd cell_prev = k > 0 ? VectorXd(tr.cells.col(k - 1)) : VectorXd::Zero(h);
    const VectorXd state_prev = k > 0 ? VectorXd(tr.states.col(k - 1)) : VectorXd::Zero(h);

    const VectorXd d_state = d_states.col(t) + d_state_next;
    const VectorXd d_cell =
        d_cell_next + (d_state.array() * out_gate * (1.0 - tanh_cell.array().square())).matrix();

    d_pre.segment(0, h) = (d_cell.array() * cand * in_gate * (1.0 - in_gate)).matrix();
    d_pre.segment(h, h) = (d_cell.array() * cell_prev.array() * forget * (1.0 - forget)).matrix();
    d_pre.segment(2 * h, h) = (d_cell.array() * in_gate * (1.0 - cand.square())).matrix();
    d_pre.segment(3 * h, h) =
        (d_state.array() * tanh_cell.array() * out_gate * (1.0 - out_gate)).matrix();

    g.input_weights.noalias() += d_pre * inputs.col(t).transpose();
    g.recurrent_weights.noalias() += d_pre * state_prev.transpose();
    g.bias += d_pre;
    d_inputs.col(t).noalias() = p.input_weights.transpose() * d_pre;
    d_state_next.noalias() = p.recurrent_weights.transpose() * d_pre;
    d_cell_next = (d_cell.array() * forget).matrix();
  }
  return d_inputs;
}

}  // namespace

EncoderParams EncoderParams::zeros(const Dims& dims) {
  EncoderParams p;
  p.dims = dims;
  p.word_embeddings = MatrixXd::Zero(dims.word_vocab, dims.word_dim);
  p.pos_embeddings = MatrixXd::Zero(dims.pos_vocab, dims.pos_dim);
  p.forward_lstm = lstm_zeros(dims.input_dim(), dims.hidden_dim);
  p.backward_lstm = lstm_zeros(dims.input_dim(), dims.hidden_dim);
  p.head_proj = MatrixXd::Zero(dims.arc_dim, dims.scorer_input_dim());
  p.mod_proj = MatrixXd::Zero(dims.arc_dim, dims.scorer_input_dim());
  p.arc_bias = VectorXd::Zero(dims.arc_dim);
  p.arc_weights = VectorXd::Zero(dims.arc_dim);
  if (dims.latent) {
    p.mu_proj = MatrixXd::Zero(dims.latent_dim, dims.state_dim());
    p.logvar_proj = MatrixXd::Zero(dims.latent_dim, dims.state_dim());
    p.recon_proj = MatrixXd::Zero(dims.word_vocab, dims.latent_dim);
    p.recon_bias = VectorXd::Zero(dims.word_vocab);
  }
  return p;
}

EncoderParams init_params(const Dims& dims, std::mt19937_64& rng) {
  EncoderParams p = EncoderParams::zeros(dims);
  auto fill = [&rng](auto& t, Index fan_in) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double limit = std::sqrt(3.0 / static_cast<double>(std::max<Index>(fan_in, 1)));
    for (Index j = 0; j < t.cols(); ++j)
      for (Index i = 0; i < t.rows(); ++i) t(i, j) = limit * dist(rng);
  };
  for_each_tensor(
      [&](std::string_view name, auto& t) {
        if (name.ends_with("bias")) return;
        using T = std::decay_t<decltype(t)>;
        fill(t, T::ColsAtCompileTime == 1 ? t.rows() : t.cols());
      },
      p);
  for (auto* lstm : {&p.forward_lstm, &p.backward_lstm})
    lstm->bias.segment(dims.hidden_dim, dims.hidden_dim).setOnes();
  return p;
}

std::size_t apply_pretrained(EncoderParams& params, const corpus::Vocabulary& vocab,
                             const corpus::Embeddings& embeddings) {
  if (embeddings.vectors.empty()) return 0;
  if (embeddings.dim != params.dims.word_dim)
    throw ConfigError("pretrained embeddings have dimension " + std::to_string(embeddings.dim) +
                      " but word_dim is " + std::to_string(params.dims.word_dim));
  std::size_t replaced = 0;
  for (Index id = 0; id < vocab.word_count(); ++id) {
    auto it = embeddings.vectors.find(vocab.word(static_cast<int>(id)));
    if (it == embeddings.vectors.end()) continue;
    params.word_embeddings.row(id) = it->second.transpose();
    ++replaced;
  }
  return replaced;
}

Index parameter_count(const EncoderParams& params) {
  Index n = 0;
  for_each_tensor([&n](std::string_view, const auto& t) { n += t.size(); }, params);
  return n;
}

void add_scaled(EncoderParams& params, const EncoderParams& other, double scale) {
  for_each_tensor([scale](std::string_view, auto& t, const auto& o) { t += scale * o; }, params,
                  other);
}

bool all_finite(const EncoderParams& params) {
  bool ok = true;
  for_each_tensor([&ok](std::string_view, const auto& t) { ok = ok && t.allFinite(); }, params);
  return ok;
}

Encoded encode(std::span<const int> words, std::span<const int> tags,
               const EncoderParams& params) {
  const auto& d = params.dims;
  const auto l = static_cast<Index>(words.size());
  if (l == 0 || tags.size() != words.size())
    throw ConfigError("encode: word and tag sequences must be non-empty and aligned");
  Encoded out;
  out.trace.words.assign(words.begin(), words.end());
  out.trace.tags.assign(tags.begin(), tags.end());
  out.trace.inputs.resize(d.input_dim(), l);
  for (Index t = 0; t < l; ++t) {
    const int w = words[static_cast<std::size_t>(t)];
    const int p = tags[static_cast<std::size_t>(t)];
    if (w < 0 || w >= params.word_embeddings.rows())
      throw ConfigError("word id " + std::to_string(w) + " outside embedding table");
    if (p < 0 || p >= params.pos_embeddings.rows())
      throw ConfigError("tag id " + std::to_string(p) + " outside embedding table");
    out.trace.inputs.col(t) << params.word_embeddings.row(w).transpose(),
        params.pos_embeddings.row(p).transpose();
  }
  out.trace.forward = run_lstm(params.forward_lstm, out.trace.inputs, false);
  out.trace.backward = run_lstm(params.backward_lstm, out.trace.inputs, true);
  out.hidden.resize(d.state_dim(), l);
  out.hidden.topRows(d.hidden_dim) = out.trace.forward.states;
  out.hidden.bottomRows(d.hidden_dim) = out.trace.backward.states.rowwise().reverse();
  return out;
}

Encoded encode(const corpus::IndexedSentence& sentence, const EncoderParams& params) {
  return encode(sentence.words, sentence.tags, params);
}

void encode_backward(const MatrixXd& d_hidden, const EncoderTrace& trace,
                     const EncoderParams& params, EncoderParams& grads) {
  const auto& d = params.dims;
  const MatrixXd d_fwd = d_hidden.topRows(d.hidden_dim);
  const MatrixXd d_bwd = d_hidden.bottomRows(d.hidden_dim);
  MatrixXd d_inputs = lstm_backward(params.forward_lstm, trace.forward, trace.inputs, d_fwd, false,
                                    grads.forward_lstm);
  d_inputs += lstm_backward(params.backward_lstm, trace.backward, trace.inputs, d_bwd, true,
                            grads.backward_lstm);
  for (Index t = 0; t < d_inputs.cols(); ++t) {
    grads.word_embeddings.row(trace.words[static_cast<std::size_t>(t)]) +=
        d_inputs.col(t).head(d.word_dim).transpose();
    grads.pos_embeddings.row(trace.tags[static_cast<std::size_t>(t)]) +=
        d_inputs.col(t).tail(d.pos_dim).transpose();
  }
}

MatrixXd score_arcs(const MatrixXd& inputs, const EncoderParams& params) {
  const Index l = inputs.cols();
  const MatrixXd heads = params.head_proj * inputs;
  const MatrixXd mods = (params.mod_proj * inputs).colwise() + params.arc_bias;
  MatrixXd scores = MatrixXd::Constant(l, l, neg_inf<double>());
  for (Index m = 1; m < l; ++m)
    for (Index h = 0; h < l; ++h)
      if (h != m)
        scores(h, m) = params.arc_weights.dot((heads.col(h) + mods.col(m)).array().tanh().matrix());
  return scores;
}

MatrixXd score_arcs_backward(const MatrixXd& d_scores, const MatrixXd& inputs,
                             const EncoderParams& params, EncoderParams& grads) {
  const Index l = inputs.cols();
  const MatrixXd heads = params.head_proj * inputs;
  const MatrixXd mods = (params.mod_proj * inputs).colwise() + params.arc_bias;
  MatrixXd d_heads = MatrixXd::Zero(heads.rows(), l);
  MatrixXd d_mods = MatrixXd::Zero(mods.rows(), l);
  for (Index m = 1; m < l; ++m) {
    for (Index h = 0; h < l; ++h) {
      const double g = d_scores(h, m);
      if (h == m || g == 0.0) continue;
      const VectorXd act = (heads.col(h) + mods.col(m)).array().tanh().matrix();
      grads.arc_weights += g * act;
      const VectorXd d_pre =
          (g * params.arc_weights.array() * (1.0 - act.array().square())).matrix();
      d_heads.col(h) += d_pre;
      d_mods.col(m) += d_pre;
    }
  }
  grads.arc_bias += d_mods.rowwise().sum();
  grads.head_proj.noalias() += d_heads * inputs.transpose();
  grads.mod_proj.noalias() += d_mods * inputs.transpose();
  return params.head_proj.transpose() * d_heads + params.mod_proj.transpose() * d_mods;
}

ArcForward forward(const corpus::IndexedSentence& sentence, const EncoderParams& params) {
  if (params.dims.latent)
    throw ConfigError("latent encoders score arcs from latent samples, not LSTM states");
  ArcForward out;
  out.encoded = encode(sentence, params);
  out.scores = score_arcs(out.encoded.hidden, params);
  return out;
}

EncoderParams backward(const MatrixXd& d_scores, const ArcForward& cache,
                       const EncoderParams& params) {
  if (!cache.valid()) throw ConfigError("backward called without a cached forward pass");
  if (d_scores.rows() != cache.scores.rows() || d_scores.cols() != cache.scores.cols())
    throw ConfigError("score gradient shape does not match the forward pass");
  EncoderParams grads = EncoderParams::zeros(params.dims);
  const MatrixXd d_hidden = score_arcs_backward(d_scores, cache.encoded.hidden, params, grads);
  encode_backward(d_hidden, cache.encoded.trace, params, grads);
  return grads;
}

AdamState make_adam(const EncoderParams& params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  state.first_moment = EncoderParams::zeros(params.dims);
  state.second_moment = EncoderParams::zeros(params.dims);
  return state;
}

void adam_step(EncoderParams& params, const EncoderParams& grads, AdamState& state) {
  if (!all_finite(grads)) throw NumericError("non-finite gradient passed to Adam");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double b1 = state.beta1, b2 = state.beta2, lr = state.learning_rate, eps = state.epsilon;
  for_each_tensor(
      [&](std::string_view, auto& p, const auto& g, auto& m, auto& v) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      },
      params, grads, state.first_moment, state.second_moment);
}

}  // namespace gaplap::encoder
