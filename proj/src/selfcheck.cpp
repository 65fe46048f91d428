#include "gaplap/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace gaplap::selfcheck {

ChartBackend ChartBackend::reference() {
  ChartBackend b;
  b.inside = [](const MatrixXd& s) { return chart::inside(s); };
  b.outside = [](const MatrixXd& s, const chart::Chart<double>& a) { return chart::outside(s, a); };
  b.decode = [](const MatrixXd& s) { return chart::eisner_decode(s); };
  return b;
}

MatrixXd random_scores(int length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 2.0);
  MatrixXd s(length, length);
  for (int h = 0; h < length; ++h)
    for (int m = 0; m < length; ++m) s(h, m) = normal(rng);
  return s;
}

double gradient_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= 1e-8) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

Report run(const Options& options, const ChartBackend& backend) {
  Report report;
  std::map<int, std::vector<HeadArray>> trees;
  auto fail = [&](const char* check, int l, std::uint64_t seed, double err) {
    report.failures.push_back({check, l, seed, err});
  };

  for (int trial = 0; trial < options.trials; ++trial) {
    for (int l = options.min_length; l <= options.max_length; ++l) {
      const std::uint64_t seed = options.seed * 1000003ULL + static_cast<std::uint64_t>(trial) * 31ULL +
                                 static_cast<std::uint64_t>(l);
      const MatrixXd s = random_scores(l, seed);
      auto& all = trees[l];
      if (all.empty()) all = chart::enumerate_projective(l);

      const auto in = backend.inside(s);
      const double log_z = chart::brute_force::log_partition(s, all);
      ++report.checks;
      if (!(std::abs(in.log_partition - log_z) < options.tolerance))
        fail("inside log partition", l, seed, std::abs(in.log_partition - log_z));

      const auto beta = backend.outside(s, in.alpha);
      const MatrixXd p = chart::arc_marginals(in.alpha, beta, in.log_partition);
      const MatrixXd expected = chart::brute_force::arc_expectations(s, all);
      const double marg_err = (p - expected).cwiseAbs().maxCoeff();
      ++report.checks;
      if (!(marg_err < options.tolerance)) fail("arc marginals", l, seed, marg_err);

      double norm_err = 0.0;
      for (int m = 1; m < l; ++m) norm_err = std::max(norm_err, std::abs(p.col(m).sum() - 1.0));
      ++report.checks;
      if (!(norm_err < options.tolerance)) fail("head-sum normalization", l, seed, norm_err);

      const auto decoded = backend.decode(s);
      const auto best = chart::brute_force::best_tree(s, all);
      ++report.checks;
      if (decoded.heads != best.heads || !(std::abs(decoded.score - best.score) < options.tolerance))
        fail("eisner decode", l, seed, std::abs(decoded.score - best.score));

      if (options.check_gradients) {
        const double h = 1e-5;
        double worst = 0.0;
        for (int head = 0; head < l; ++head) {
          for (int mod = 1; mod < l; ++mod) {
            if (head == mod) continue;
            MatrixXd plus = s, minus = s;
            plus(head, mod) += h;
            minus(head, mod) -= h;
            const double numeric =
                (backend.inside(plus).log_partition - backend.inside(minus).log_partition) / (2 * h);
            worst = std::max(worst, gradient_error(p(head, mod), numeric));
          }
        }
        ++report.checks;
        if (!(worst < options.gradient_tolerance)) fail("dlogZ/dS = marginal", l, seed, worst);
      }
    }
  }
  return report;
}

}  // namespace gaplap::selfcheck
