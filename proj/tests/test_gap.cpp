#include "gaplap/gap.hpp"
#include "gaplap/encoder.hpp"
#include "gaplap/selfcheck.hpp"
#include "gaplap/train.hpp"

#include "fd.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gaplap;
using namespace gaplap::gap;
using Eigen::MatrixXd;

namespace {

corpus::IndexedSentence sentence(std::vector<int> words, HeadArray heads = {}) {
  corpus::IndexedSentence s;
  s.words = std::move(words);
  s.tags.assign(s.words.size(), 2);
  s.tags[0] = 0;
  s.heads = std::move(heads);
  s.punct.assign(s.words.size(), false);
  return s;
}

DecoderParams uniform(Index v) {
  return DecoderParams{MatrixXd::Constant(v, v, -std::log(static_cast<double>(v)))};
}

DecoderParams random_decoder(Index v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(1.0);
  CountBuffer b;
  for (int h = 0; h < v; ++h)
    for (int m = 0; m < v; ++m) b.add(h, m, g(rng));
  return m_step(b, v, 0.0);
}

double max_column_error(const DecoderParams& d) {
  return (d.log_theta.array().exp().colwise().sum() - 1.0).abs().maxCoeff();
}

}  // namespace

TEST_CASE("decoder initialisation") {
  // Head 2 ("dog") -> modifier 3 ("barks") once.
  const auto s = sentence({0, 2, 3}, {kNoHead, 0, 1});
  const std::vector<corpus::IndexedSentence> one{sentence({0, 2, 3}, {kNoHead, 2, 0})};
  const auto d = init_decoder(one, 4, 1e-9);
  CHECK(std::exp(d.log_theta(2, 3)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(max_column_error(d) < 1e-9);
  // Unseen head: uniform column.
  const auto smooth = init_decoder(one, 4, 0.1);
  for (int m = 0; m < 4; ++m) CHECK(std::exp(smooth.log_theta(m, 1)) == doctest::Approx(0.25));
  CHECK(max_column_error(smooth) < 1e-9);

  // Head 1 with two modifiers of word 2 and two of word 3, no smoothing.
  const std::vector<corpus::IndexedSentence> two{sentence({0, 1, 2, 3}, {kNoHead, 0, 1, 1}),
                                                 sentence({0, 1, 2, 3}, {kNoHead, 0, 1, 1})};
  const auto z = init_decoder(two, 4, 0.0);
  CHECK(std::exp(z.log_theta(2, 1)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::exp(z.log_theta(3, 1)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(max_column_error(z) < 1e-9);
  CHECK_THROWS_AS(init_decoder({}, 4, 0.1), DataError);
  (void)s;
}

TEST_CASE("transformed scores") {
  const auto s = sentence({0, 1, 2, 3});
  const MatrixXd scores = selfcheck::random_scores(4, 3);
  const auto shifted = transformed_scores(scores, uniform(5), s.words);
  for (Index h = 0; h < 4; ++h)
    for (Index m = 1; m < 4; ++m)
      if (h != m) CHECK(std::abs(shifted(h, m) - (scores(h, m) - std::log(5.0))) < 1e-12);

  DecoderParams d{MatrixXd::Zero(5, 5)};
  d.log_theta(2, 1) = -1;  // head word 1 -> modifier word 2
  const auto t = transformed_scores(MatrixXd::Zero(4, 4), d, s.words);
  CHECK(t(1, 2) == -1.0);
  CHECK(t(2, 1) == 0.0);

  const auto r = random_decoder(5, 4);
  const auto words = std::vector<int>{0, 4, 2, 4};
  MatrixXd blocked = scores;
  blocked(2, 0) = neg_inf<double>();
  blocked(2, 2) = neg_inf<double>();
  const auto rt = transformed_scores(blocked, r, words);
  for (Index h = 0; h < 4; ++h)
    for (Index m = 1; m < 4; ++m)
      if (h != m) CHECK(std::abs(rt(h, m) - scores(h, m) - r.log_theta(words[m], words[h])) < 1e-12);
  // Blocked entries stay blocked.
  CHECK(is_neg_inf(rt(2, 0)));
  CHECK(is_neg_inf(rt(2, 2)));
}

TEST_CASE("supervised loss") {
  CHECK(supervised_loss(MatrixXd::Zero(2, 2), {kNoHead, 0}).value == 0.0);
  for (const auto& tree : chart::enumerate_projective(3))
    CHECK(supervised_loss(MatrixXd::Zero(3, 3), tree).value ==
          doctest::Approx(-std::log(3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(supervised_loss(MatrixXd::Zero(5, 5), {kNoHead, 3, 4, 0, 3}), DataError);

  const MatrixXd s = selfcheck::random_scores(5, 8);
  const HeadArray gold{kNoHead, 2, 0, 4, 2};
  const auto j = supervised_loss(s, gold);
  CHECK(j.value <= 0.0);
  for (Index h = 0; h < 5; ++h)
    for (Index m = 1; m < 5; ++m) {
      if (h == m) continue;
      MatrixXd p = s, q = s;
      p(h, m) += 1e-5;
      q(h, m) -= 1e-5;
      const double fd = (supervised_loss(p, gold).value - supervised_loss(q, gold).value) / 2e-5;
      CHECK(selfcheck::gradient_error(j.gradient(h, m), fd) < 1e-4);
    }
}

TEST_CASE("unlabeled objective") {
  const auto s = sentence({0, 1, 2, 3, 1});
  const MatrixXd sc = selfcheck::random_scores(5, 12);
  CHECK(unlabeled_objective(sc, transformed_scores(sc, uniform(6), s.words)) ==
        doctest::Approx(-4 * std::log(6.0)).epsilon(1e-12));
  const auto d = random_decoder(6, 2);
  const MatrixXd two = selfcheck::random_scores(2, 1);
  const std::vector<int> w2{0, 3};
  CHECK(unlabeled_objective(two, transformed_scores(two, d, w2)) ==
        doctest::Approx(d.log_theta(3, 0)).epsilon(1e-12));
  for (Index l = 2; l <= 6; ++l) {
    const auto trees = chart::enumerate_projective(l);
    std::vector<int> words(static_cast<std::size_t>(l));
    for (Index i = 0; i < l; ++i) words[i] = static_cast<int>((i * 7 + 1) % 6) * (i > 0);
    const MatrixXd a = selfcheck::random_scores(static_cast<int>(l), 30 + l);
    const auto t = transformed_scores(a, d, words);
    const double ju = unlabeled_objective(a, t);
    CHECK(ju <= 0.0);
    CHECK(std::abs(ju - (chart::brute_force::log_partition(t, trees) -
                         chart::brute_force::log_partition(a, trees))) < 1e-9);
  }
}

TEST_CASE("posterior marginals") {
  const auto d = random_decoder(6, 3);
  CHECK(posterior_marginals(transformed_scores(MatrixXd::Zero(2, 2), d, std::vector<int>{0, 2}))(
            0, 1) == doctest::Approx(1.0));
  const MatrixXd a = selfcheck::random_scores(5, 77);
  const std::vector<int> words{0, 1, 5, 2, 1};
  const auto prior = chart::marginals(a).marginals;
  CHECK((posterior_marginals(transformed_scores(a, uniform(6), words)) - prior).cwiseAbs().maxCoeff() <
        1e-12);
  for (Index l = 2; l <= 6; ++l) {
    std::vector<int> w(static_cast<std::size_t>(l));
    for (Index i = 1; i < l; ++i) w[i] = static_cast<int>(i % 5) + 1;
    const MatrixXd b = selfcheck::random_scores(static_cast<int>(l), 90 + l);
    const auto t = transformed_scores(b, d, w);
    const auto q = posterior_marginals(t);
    CHECK((q - chart::brute_force::arc_expectations(t, chart::enumerate_projective(l)))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    for (Index m = 1; m < l; ++m) CHECK(std::abs(q.col(m).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("count buffers") {
  CountBuffer a;
  a.add(1, 2, 0.5);
  a.add(1, 2, 0.25);
  a.add(3, 1, 0.0);
  CHECK(a.at(1, 2) == 0.75);
  CHECK(a.entries().size() == 1);
  CountBuffer b;
  b.add(1, 2, 1.0);
  b.add(0, 4, 2.0);
  a.merge(b);
  CHECK(a.at(1, 2) == 1.75);
  CHECK(a.at(0, 4) == 2.0);
  CHECK_THROWS_AS(a.add(0, 1, -1.0), NumericError);
  CHECK_THROWS_AS(a.add(0, 1, std::nan("")), NumericError);
}

TEST_CASE("powered counts") {
  MatrixXd q = MatrixXd::Zero(3, 3);
  q(0, 1) = 0.5;
  q(2, 1) = 0.5;
  q(0, 2) = 1.0;
  const std::vector<int> w{0, 4, 5};
  CountBuffer soft, hard;
  accumulate_counts(soft, q, w, 0.0);
  accumulate_counts(hard, q, w, 0.5);
  CHECK(soft.at(0, 4) == 0.5);
  CHECK(hard.at(0, 4) == 0.25);
  CHECK(soft.at(0, 5) == 1.0);
  CHECK(hard.at(0, 5) == 1.0);
  CHECK(hard.at(5, 4) == 0.25);
  CHECK(hard.at(4, 5) == 0.0);
  CHECK_THROWS_AS(accumulate_counts(soft, q, w, 1.0), ConfigError);
  CHECK_THROWS_AS(accumulate_counts(soft, q, w, -0.1), ConfigError);
}

TEST_CASE("anneal schedule") {
  const AnnealSchedule a(1.0, 0.3, 7);
  CHECK(a.start == 0.9);
  CHECK(a.at(0) == 0.9);
  CHECK(a.at(6) == doctest::Approx(0.3));
  CHECK(a.at(3) == doctest::Approx(0.6));
  CHECK(a.at(100) == doctest::Approx(0.3));
  for (int e = 1; e < 7; ++e) CHECK(a.at(e) <= a.at(e - 1));
  const AnnealSchedule flat(0.2, 0.5, 3);
  CHECK(flat.end == 0.2);
  CHECK(AnnealSchedule(0.5, 0.1, 1).at(0) == 0.5);
}

TEST_CASE("m-step") {
  CountBuffer b;
  b.add(1, 2, 2.0);
  b.add(1, 3, 2.0);
  const auto d = m_step(b, 4, 0.0);
  CHECK(std::exp(d.log_theta(2, 1)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::exp(d.log_theta(3, 1)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(max_column_error(d) < 1e-9);  // empty heads fall back to uniform
  CHECK(std::exp(d.log_theta(0, 0)) == doctest::Approx(0.25));

  const auto empty = m_step(CountBuffer{}, 5, 0.3);
  CHECK((empty.log_theta.array() + std::log(5.0)).abs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(m_step(b, 4, -1.0), ConfigError);
  CHECK_THROWS_AS(m_step(b, 0, 1.0), ConfigError);

  // Scale invariance without smoothing.
  CountBuffer scaled;
  for (const auto& [k, v] : b.entries()) scaled.add(k.first, k.second, 7.5 * v);
  CHECK((m_step(scaled, 4, 0.0).log_theta - d.log_theta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("m-step is optimal against random simplex perturbations") {
  std::mt19937_64 rng(21);
  std::gamma_distribution<double> gamma(0.7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index v = 6;
  for (int trial = 0; trial < 20; ++trial) {
    CountBuffer b;
    for (int h = 0; h < v; ++h)
      for (int m = 0; m < v; ++m)
        if (unit(rng) < 0.6) b.add(h, m, gamma(rng));
    const auto best = m_step(b, v, 0.0);
    const double top = buffer_objective(b, best);
    for (int k = 0; k < 100; ++k) {
      // Mix each column with a random distribution.
      const double mix = 0.2 * unit(rng);
      DecoderParams alt = best;
      for (Index h = 0; h < v; ++h) {
        Eigen::VectorXd r(v);
        for (Index m = 0; m < v; ++m) r(m) = gamma(rng) + 1e-12;
        r /= r.sum();
        alt.log_theta.col(h) =
            ((1 - mix) * best.log_theta.col(h).array().exp() + mix * r.array()).log();
      }
      CHECK(max_column_error(alt) < 1e-9);
      CHECK(buffer_objective(b, alt) <= top);
    }
  }
}

TEST_CASE("analytic expected log-likelihood equals enumeration") {
  const auto d = random_decoder(7, 5);
  for (Index l = 2; l <= 6; ++l) {
    std::vector<int> w(static_cast<std::size_t>(l));
    for (Index i = 1; i < l; ++i) w[i] = static_cast<int>((3 * i) % 6) + 1;
    const MatrixXd a = selfcheck::random_scores(static_cast<int>(l), 400 + l);
    const auto t = transformed_scores(a, d, w);
    const auto trees = chart::enumerate_projective(l);
    const double log_u = chart::brute_force::log_partition(t, trees);
    double enumerated = 0;
    for (const auto& tree : trees) {
      double loglik = 0;
      for (std::size_t m = 1; m < tree.size(); ++m) loglik += d.log_theta(w[m], w[tree[m]]);
      enumerated += std::exp(chart::tree_score(t, tree) - log_u) * loglik;
    }
    CHECK(std::abs(expected_log_likelihood(posterior_marginals(t), d, w) - enumerated) < 1e-9);
  }
}

TEST_CASE("EM on a frozen encoder never decreases the unlabeled objective") {
  std::vector<std::vector<int>> words{{0, 1, 2, 3}, {0, 2, 1, 3, 1}, {0, 3, 3, 2}};
  std::vector<MatrixXd> scores;
  for (std::size_t k = 0; k < words.size(); ++k)
    scores.push_back(selfcheck::random_scores(static_cast<int>(words[k].size()), 50 + k));
  auto decoder = random_decoder(4, 6);
  auto objective = [&](const DecoderParams& d) {
    double total = 0;
    for (std::size_t k = 0; k < words.size(); ++k)
      total += unlabeled_objective(scores[k], transformed_scores(scores[k], d, words[k]));
    return total;
  };
  double previous = objective(decoder);
  for (int it = 0; it < 10; ++it) {
    CountBuffer b;
    double surrogate_old = 0;
    std::vector<MatrixXd> q;
    for (std::size_t k = 0; k < words.size(); ++k) {
      q.push_back(posterior_marginals(transformed_scores(scores[k], decoder, words[k])));
      accumulate_counts(b, q.back(), words[k], 0.0);
      surrogate_old += expected_log_likelihood(q.back(), decoder, words[k]);
    }
    decoder = m_step(b, 4, 0.0);
    double surrogate_new = 0;
    for (std::size_t k = 0; k < words.size(); ++k)
      surrogate_new += expected_log_likelihood(q[k], decoder, words[k]);
    CHECK(surrogate_new >= surrogate_old - 1e-9);
    CHECK(max_column_error(decoder) < 1e-9);
    const double current = objective(decoder);
    CHECK(current >= previous - 1e-9);
    previous = current;
  }
}

TEST_CASE("labeled GAP path gradient through the encoder") {
  encoder::Dims dims;
  dims.word_vocab = 5;
  dims.pos_vocab = 3;
  dims.word_dim = 3;
  dims.pos_dim = 2;
  dims.hidden_dim = 2;
  dims.arc_dim = 3;
  std::mt19937_64 rng(14);
  const auto p = encoder::init_params(dims, rng);
  const auto s = sentence({0, 4, 2, 3, 4}, {kNoHead, 2, 0, 2, 3});
  const auto d = random_decoder(5, 8);
  auto loss = [&](const encoder::EncoderParams& q) {
    return supervised_loss(transformed_scores(encoder::forward(s, q).scores, d, s.words), s.heads)
        .value;
  };
  const auto fwd = encoder::forward(s, p);
  const auto j = supervised_loss(transformed_scores(fwd.scores, d, s.words), s.heads);
  const auto r = testing::check_gradient(p, encoder::backward(j.gradient, fwd, p), loss);
  INFO(r.worst_tensor);
  CHECK(r.worst < 1e-4);
}

TEST_CASE("without unlabeled data the decoder stays at its initial value") {
  TrainConfig cfg;
  cfg.dims.word_dim = 4;
  cfg.dims.pos_dim = 2;
  cfg.dims.hidden_dim = 3;
  cfg.dims.arc_dim = 3;
  cfg.epochs = 3;
  corpus::Vocabulary vocab({"<ROOT>", "<UNK>", "a", "b"}, {"<ROOT>", "<UNK>", "X"});
  const std::vector<corpus::IndexedSentence> lab{sentence({0, 2, 3}, {kNoHead, 2, 0}),
                                                 sentence({0, 3, 2, 2}, {kNoHead, 0, 1, 1})};
  std::mt19937_64 rng(1);
  const Model init = initial_model(cfg, vocab, lab, rng);
  const auto result = train(cfg, init, lab, {}, {}, rng);
  CHECK(result.best.decoder->log_theta == init.decoder->log_theta);
  CHECK(result.log.size() == 3);
  CHECK(result.log[0].unlabeled_objective == 0.0);
}
