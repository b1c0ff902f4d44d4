#pragma once

#include <cstdint>
#include <vector>

#include "rll/dataset.hpp"

namespace rll {

// Synthetic crowdsourced-label regime: two spherical Gaussian classes
// separated along the first feature axis, a configurable positive:negative
// ratio and d worker slots that report the true label with per-slot
// accuracy. Slot accuracies run weakest first so truncating to the first d'
// slots means fewer (not better) workers.
struct SynthConfig {
  int n_examples = 400;
  int feature_dim = 20;
  double class_ratio = 1.8;       // positive : negative
  double class_separation = 3.0;  // distance between class means
  double noise_scale = 1.0;       // within-class standard deviation
  std::vector<double> worker_accuracies = {0.55, 0.6, 0.7, 0.85, 0.9};

  // Optional asymmetric worker model for stressing Dawid-Skene; when both
  // are non-empty they override worker_accuracies and must share its length.
  std::vector<double> worker_sensitivities;
  std::vector<double> worker_specificities;

  std::uint64_t seed = 0;

  void validate() const;
};

// Deterministic per seed. expert_label always carries the true label.
Dataset generate(const SynthConfig& cfg);

// Per worker slot, the fraction of labels that match the expert label.
// Requires expert labels on every example.
std::vector<double> empirical_worker_agreement(const Dataset& ds);

}  // namespace rll
