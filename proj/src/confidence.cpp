#include "rll/confidence.hpp"

#include "rll/error.hpp"
#include "rll/truth_inference.hpp"

namespace rll {

double mle_confidence(const std::vector<int>& crowd_labels) {
  if (crowd_labels.empty()) {
    throw Error("mle_confidence needs at least one label");
  }
  int ones = 0;
  for (int y : crowd_labels) {
    ones += y;
  }
  return static_cast<double>(ones) / static_cast<double>(crowd_labels.size());
}

double bayesian_confidence(const std::vector<int>& crowd_labels, const BetaPrior& prior) {
  if (prior.alpha <= 0.0 || prior.beta <= 0.0) {
    throw Error("beta prior parameters must be positive");
  }
  int ones = 0;
  for (int y : crowd_labels) {
    ones += y;
  }
  const double d = static_cast<double>(crowd_labels.size());
  return (prior.alpha + ones) / (prior.alpha + prior.beta + d);
}

BetaPrior prior_from_class_ratio(double positive_to_negative_ratio, double strength) {
  if (positive_to_negative_ratio <= 0.0) {
    throw Error("class ratio must be positive");
  }
  if (strength <= 0.0) {
    throw Error("prior strength must be positive");
  }
  const double pi = positive_to_negative_ratio / (1.0 + positive_to_negative_ratio);
  const double alpha = strength * pi;
  // beta as the remainder keeps alpha + beta == strength exactly
  return BetaPrior{alpha, strength - alpha};
}

namespace {

ConfidenceScore score_from_posterior(double p) {
  ConfidenceScore s;
  s.positive_posterior = p;
  s.assigned_label = p >= 0.5 ? 1 : 0;
  s.assigned_confidence = p >= 0.5 ? p : 1.0 - p;
  return s;
}

}  // namespace

ConfidenceProfile confidence_profile(const Dataset& ds, ConfidenceMode mode,
                                     const std::optional<BetaPrior>& prior) {
  if (mode == ConfidenceMode::bayesian && !prior) {
    throw Error("bayesian confidence mode requires a prior");
  }
  ConfidenceProfile profile;
  profile.reserve(ds.size());
  for (const auto& ex : ds.examples) {
    ConfidenceScore s;
    switch (mode) {
      case ConfidenceMode::off:
        // unweighted variant: majority label, confidence pinned to 1
        s.positive_posterior = majority_vote(ex.crowd_labels) == 1 ? 1.0 : 0.0;
        s.assigned_label = static_cast<int>(s.positive_posterior);
        s.assigned_confidence = 1.0;
        break;
      case ConfidenceMode::mle:
        s = score_from_posterior(mle_confidence(ex.crowd_labels));
        break;
      case ConfidenceMode::bayesian:
        s = score_from_posterior(bayesian_confidence(ex.crowd_labels, *prior));
        break;
    }
    profile.emplace(ex.id, s);
  }
  return profile;
}

}  // namespace rll
