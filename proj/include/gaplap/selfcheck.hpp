#pragma once

// Randomized agreement checks between the chart algorithms and brute-force
// enumeration over all projective trees.

#include "gaplap/chart.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gaplap::selfcheck {

using Eigen::MatrixXd;

// The chart routines under test; swappable so a deliberately broken
// implementation can be shown to fail.
struct ChartBackend {
  std::function<chart::InsideResult<double>(const MatrixXd&)> inside;
  std::function<chart::Chart<double>(const MatrixXd&, const chart::Chart<double>&)> outside;
  std::function<chart::DecodeResult<double>(const MatrixXd&)> decode;

  static ChartBackend reference();
};

struct Options {
  int trials = 1000;
  int min_length = 2;
  int max_length = 7;
  std::uint64_t seed = 1;
  double tolerance = 1e-9;        // log partition and marginals
  double gradient_tolerance = 1e-4;  // relative, finite differences
  bool check_gradients = true;
};

struct Failure {
  std::string check;
  int length = 0;
  std::uint64_t seed = 0;  // regenerates the offending score matrix
  double error = 0;
};

struct Report {
  long checks = 0;
  std::vector<Failure> failures;
  bool passed() const { return failures.empty(); }
};

/// Score matrix used for trial `seed` at length `length`.
MatrixXd random_scores(int length, std::uint64_t seed);

/// Relative error with an absolute floor: |a - b| / max(|a|, |b|), or 0 when
/// |a - b| <= 1e-8.
double gradient_error(double analytic, double numeric);

Report run(const Options& options, const ChartBackend& backend = ChartBackend::reference());

}  // namespace gaplap::selfcheck
