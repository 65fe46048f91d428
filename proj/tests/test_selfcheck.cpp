#include "gaplap/selfcheck.hpp"

#include <doctest.h>

using namespace gaplap;

TEST_CASE("selfcheck passes on the reference charts") {
  selfcheck::Options o;
  o.trials = 50;
  const auto r = selfcheck::run(o);
  CHECK(r.passed());
  CHECK(r.checks > 0);
}

TEST_CASE("zero trials is a trivial pass") {
  selfcheck::Options o;
  o.trials = 0;
  const auto r = selfcheck::run(o);
  CHECK(r.passed());
  CHECK(r.checks == 0);
}

TEST_CASE("random matrices are reproducible from their seed") {
  CHECK(selfcheck::random_scores(5, 42) == selfcheck::random_scores(5, 42));
  CHECK(selfcheck::random_scores(5, 42) != selfcheck::random_scores(5, 43));
}

TEST_CASE("gradient error floor") {
  CHECK(selfcheck::gradient_error(1e-10, 0.0) == 0.0);
  CHECK(selfcheck::gradient_error(1.0, 1.0) == 0.0);
  CHECK(selfcheck::gradient_error(1.0, 1.1) == doctest::Approx(0.1 / 1.1));
}

TEST_CASE("a perturbed inside recurrence is caught") {
  auto broken = selfcheck::ChartBackend::reference();
  // Drops the contribution of one split point in every right-incomplete item
  // of width 3, as a miscoded loop bound would.
  broken.inside = [](const Eigen::MatrixXd& s) {
    using namespace chart;
    const Index l = s.rows();
    InsideResult<double> out{Chart<double>(l), neg_inf<double>()};
    auto& a = out.alpha;
    constexpr auto L = Direction::Left, R = Direction::Right;
    constexpr auto I = Completeness::Incomplete, C = Completeness::Complete;
    for (Index i = 0; i < l; ++i) {
      a(i, i, R, C) = 0;
      if (i > 0) a(i, i, L, C) = 0;
    }
    for (Index k = 1; k < l; ++k)
      for (Index i = 0; i + k < l; ++i) {
        const Index j = i + k;
        LogSumAccumulator<double> ri, li, rc, lc;
        for (Index u = i; u < j; ++u) {
          if (k == 2 && u == i) continue;  // the mutation
          const double both = log_mul(a(i, u, R, C), a(u + 1, j, L, C));
          ri.add(log_mul(both, s(i, j)));
          if (i > 0) li.add(log_mul(both, s(j, i)));
        }
        a(i, j, R, I) = ri.value();
        a(i, j, L, I) = li.value();
        for (Index u = i + 1; u <= j; ++u) rc.add(log_mul(a(i, u, R, I), a(u, j, R, C)));
        for (Index u = i; u < j; ++u) lc.add(log_mul(a(i, u, L, C), a(u, j, L, I)));
        a(i, j, R, C) = rc.value();
        a(i, j, L, C) = i > 0 ? lc.value() : neg_inf<double>();
      }
    out.log_partition = a(0, l - 1, R, C);
    return out;
  };
  selfcheck::Options o;
  o.trials = 5;
  o.check_gradients = false;
  const auto r = selfcheck::run(o, broken);
  CHECK_FALSE(r.passed());
  REQUIRE_FALSE(r.failures.empty());
  const auto& f = r.failures.front();
  CHECK(f.length >= 3);
  // The reported seed regenerates a matrix on which the mutation disagrees.
  const auto s = selfcheck::random_scores(f.length, f.seed);
  CHECK(std::abs(broken.inside(s).log_partition -
                 chart::inside(s).log_partition) > 1e-9);
}
