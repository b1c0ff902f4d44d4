#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "rll/dataset.hpp"

namespace rll {

// Per worker slot: P(reports 1 | true 1) and P(reports 0 | true 0).
struct WorkerConfusion {
  double sensitivity = 0.5;
  double specificity = 0.5;
};

struct EMResult {
  std::unordered_map<std::string, double> posterior_positive;
  std::vector<WorkerConfusion> confusions;
  double class_prior = 0.5;
  std::vector<double> log_likelihood_trace;  // one entry per EM iteration
  int iterations = 0;
};

// 1 if ones >= zeros (tie goes to 1), else 0. Throws on empty input.
int majority_vote(const std::vector<int>& crowd_labels);

// Binary Dawid-Skene EM over worker slots. Initialization comes from soft
// majority-vote counts; all probabilities are clamped to [1e-6, 1 - 1e-6]
// so unanimous slots cannot produce log(0). Stops when the observed-data
// log-likelihood improves by less than tol or after max_iters iterations.
// The E-step is parallelized across examples; every reduction runs in
// example-index order, so results do not depend on the thread count.
EMResult dawid_skene(const Dataset& ds, int max_iters = 200, double tol = 1e-8);

// Single-threaded reference implementation kept for testing.
EMResult dawid_skene_serial(const Dataset& ds, int max_iters = 200, double tol = 1e-8);

}  // namespace rll
