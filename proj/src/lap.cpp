#include "gaplap/lap.hpp"

#include "gaplap/gap.hpp"

#include <cmath>

namespace gaplap::lap {

namespace {

double log_sum_exp(const Eigen::VectorXd& x) {
  const double hi = x.maxCoeff();
  return hi + std::log((x.array() - hi).exp().sum());
}

}  // namespace

GaussianParams latent_params(const MatrixXd& hidden, const EncoderParams& params) {
  if (!params.dims.latent) throw ConfigError("encoder has no latent heads");
  return {params.mu_proj * hidden,
          (params.logvar_proj * hidden).cwiseMax(kLogvarMin).cwiseMin(kLogvarMax)};
}

MatrixXd sample_latent(const GaussianParams& g, const MatrixXd& noise) {
  if (noise.rows() != g.mean.rows() || noise.cols() != g.mean.cols())
    throw ConfigError("noise shape does not match the latent parameters");
  return g.mean + ((0.5 * g.logvar).array().exp() * noise.array()).matrix();
}

double kl_gaussian(const GaussianParams& g) {
  return 0.5 * (g.mean.array().square() + g.logvar.array().exp() - 1.0 - g.logvar.array()).sum();
}

double reconstruction_logprob(const MatrixXd& z, std::span<const int> words,
                              const EncoderParams& params) {
  double total = 0.0;
  for (Index t = 1; t < z.cols(); ++t) {
    const Eigen::VectorXd logits = params.recon_proj * z.col(t) + params.recon_bias;
    total += logits(words[static_cast<std::size_t>(t)]) - log_sum_exp(logits);
  }
  return total;
}

std::vector<MatrixXd> draw_noise(Index latent_dim, Index length, int samples,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MatrixXd> out;
  for (int j = 0; j < samples; ++j) {
    MatrixXd eps(latent_dim, length);
    for (Index c = 0; c < length; ++c)
      for (Index r = 0; r < latent_dim; ++r) eps(r, c) = normal(rng);
    out.push_back(std::move(eps));
  }
  return out;
}

LapLoss lap_loss(const corpus::IndexedSentence& sentence, const EncoderParams& params,
                 const LapOptions& opts, std::span<const MatrixXd> noise) {
  if (!params.dims.latent) throw ConfigError("encoder has no latent heads");
  if (opts.use_tree && !sentence.labeled())
    throw ConfigError("tree term requested for a sentence without a gold tree");
  if (noise.empty()) throw ConfigError("lap_loss needs at least one noise sample");

  const auto encoded = encoder::encode(sentence, params);
  const MatrixXd& hidden = encoded.hidden;
  const MatrixXd raw_logvar = params.logvar_proj * hidden;
  const GaussianParams g = latent_params(hidden, params);
  const MatrixXd stddev = (0.5 * g.logvar).array().exp().matrix();
  const Index l = hidden.cols();
  const double inv_n = 1.0 / static_cast<double>(noise.size());

  LapLoss out;
  out.gradient = EncoderParams::zeros(params.dims);
  auto& grads = out.gradient;
  MatrixXd d_mean = MatrixXd::Zero(g.mean.rows(), l);
  MatrixXd d_logvar = MatrixXd::Zero(g.mean.rows(), l);

  for (const auto& eps : noise) {
    const MatrixXd z = sample_latent(g, eps);
    MatrixXd d_z = MatrixXd::Zero(z.rows(), l);

    for (Index t = 1; t < l; ++t) {
      const int w = sentence.words[static_cast<std::size_t>(t)];
      const Eigen::VectorXd logits = params.recon_proj * z.col(t) + params.recon_bias;
      const double lse = log_sum_exp(logits);
      out.breakdown.recon += inv_n * (logits(w) - lse);
      Eigen::VectorXd d_logits = -(logits.array() - lse).exp().matrix();
      d_logits(w) += 1.0;
      d_logits *= inv_n;
      grads.recon_proj.noalias() += d_logits * z.col(t).transpose();
      grads.recon_bias += d_logits;
      d_z.col(t).noalias() += params.recon_proj.transpose() * d_logits;
    }

    if (opts.use_tree) {
      const MatrixXd scores = encoder::score_arcs(z, params);
      const auto crf = gap::supervised_loss(scores, sentence.heads, opts.tree);
      out.breakdown.tree += inv_n * crf.value;
      d_z += encoder::score_arcs_backward(inv_n * crf.gradient, z, params, grads);
    }

    d_mean += d_z;
    d_logvar += (d_z.array() * eps.array() * 0.5 * stddev.array()).matrix();
  }

  out.breakdown.kl = kl_gaussian(g);
  d_mean -= opts.kl_weight * g.mean;
  d_logvar -= (opts.kl_weight * 0.5 * (g.logvar.array().exp() - 1.0)).matrix();
  d_logvar = (raw_logvar.array() >= kLogvarMin && raw_logvar.array() <= kLogvarMax)
                 .select(d_logvar, 0.0);
  out.breakdown.total =
      out.breakdown.recon - opts.kl_weight * out.breakdown.kl + out.breakdown.tree;

  grads.mu_proj.noalias() += d_mean * hidden.transpose();
  grads.logvar_proj.noalias() += d_logvar * hidden.transpose();
  const MatrixXd d_hidden =
      params.mu_proj.transpose() * d_mean + params.logvar_proj.transpose() * d_logvar;
  encoder::encode_backward(d_hidden, encoded.trace, params, grads);
  return out;
}

chart::DecodeResult<double> lap_predict(const corpus::IndexedSentence& sentence,
                                        const EncoderParams& params,
                                        const chart::TreeOptions& opts) {
  const auto encoded = encoder::encode(sentence, params);
  const GaussianParams g = latent_params(encoded.hidden, params);
  return chart::eisner_decode(encoder::score_arcs(g.mean, params), opts);
}

}  // namespace gaplap::lap
