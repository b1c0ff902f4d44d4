#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rll/dataset.hpp"

namespace rll {

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;
};

// Label confidence attached to one example. positive_posterior estimates
// P(true label = 1); assigned_label is the thresholded call (ties go to 1);
// assigned_confidence is the confidence of that call, max(p, 1 - p).
struct ConfidenceScore {
  double positive_posterior = 0.0;
  int assigned_label = 0;
  double assigned_confidence = 0.0;
};

enum class ConfidenceMode { off, mle, bayesian };

// Fraction of 1-labels. Throws on an empty sequence.
double mle_confidence(const std::vector<int>& crowd_labels);

// (alpha + sum y) / (alpha + beta + d). Empty labels give the prior mean.
double bayesian_confidence(const std::vector<int>& crowd_labels, const BetaPrior& prior);

// Beta prior with mean ratio/(1+ratio) and pseudo-count total `strength`.
BetaPrior prior_from_class_ratio(double positive_to_negative_ratio, double strength);

using ConfidenceProfile = std::unordered_map<std::string, ConfidenceScore>;

// mode = off: majority-vote label with confidence pinned at 1.0 (the
// unweighted variant); mle / bayesian score each example from its own
// crowd labels. bayesian requires a prior.
ConfidenceProfile confidence_profile(const Dataset& ds, ConfidenceMode mode,
                                     const std::optional<BetaPrior>& prior = std::nullopt);

}  // namespace rll
