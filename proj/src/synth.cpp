#include "rll/synth.hpp"

#include <cstdio>

#include "rll/error.hpp"
#include "rll/rng.hpp"

namespace rll {

void SynthConfig::validate() const {
  if (n_examples < 1) {
    throw Error("n_examples must be >= 1");
  }
  if (feature_dim < 1) {
    throw Error("feature_dim must be >= 1");
  }
  if (class_ratio <= 0.0) {
    throw Error("class_ratio must be positive");
  }
  if (class_separation < 0.0) {
    throw Error("class_separation must be non-negative");
  }
  if (noise_scale <= 0.0) {
    throw Error("noise_scale must be positive");
  }
  const bool asym = !worker_sensitivities.empty() || !worker_specificities.empty();
  if (asym) {
    if (worker_sensitivities.size() != worker_specificities.size() ||
        worker_sensitivities.empty()) {
      throw Error("asymmetric worker model needs matching sensitivity and "
                  "specificity lists");
    }
    for (double v : worker_sensitivities) {
      if (v <= 0.0 || v > 1.0) {
        throw Error("worker sensitivities must be in (0, 1]");
      }
    }
    for (double v : worker_specificities) {
      if (v <= 0.0 || v > 1.0) {
        throw Error("worker specificities must be in (0, 1]");
      }
    }
  } else {
    if (worker_accuracies.empty()) {
      throw Error("need at least one worker slot");
    }
    for (double a : worker_accuracies) {
      if (a <= 0.5 || a > 1.0) {
        throw Error("worker accuracies must be in (0.5, 1]");
      }
    }
  }
}

Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const bool asym = !cfg.worker_sensitivities.empty();
  const int d = static_cast<int>(asym ? cfg.worker_sensitivities.size()
                                      : cfg.worker_accuracies.size());
  const double positive_prob = cfg.class_ratio / (1.0 + cfg.class_ratio);
  const double half_sep = cfg.class_separation / 2.0;

  Rng rng(cfg.seed);
  Dataset ds;
  ds.feature_dim = cfg.feature_dim;
  ds.worker_count = d;
  ds.examples.reserve(cfg.n_examples);

  char idbuf[24];
  for (int i = 0; i < cfg.n_examples; ++i) {
    Example ex;
    std::snprintf(idbuf, sizeof(idbuf), "ex%06d", i);
    ex.id = idbuf;
    const int truth = rng.uniform01() < positive_prob ? 1 : 0;
    // classes separated along the first feature axis
    ex.features.resize(cfg.feature_dim);
    const double mean0 = truth == 1 ? half_sep : -half_sep;
    for (int f = 0; f < cfg.feature_dim; ++f) {
      ex.features[f] = (f == 0 ? mean0 : 0.0) + cfg.noise_scale * rng.gaussian();
    }
    ex.crowd_labels.resize(d);
    for (int j = 0; j < d; ++j) {
      const double p_truthful =
          asym ? (truth == 1 ? cfg.worker_sensitivities[j] : cfg.worker_specificities[j])
               : cfg.worker_accuracies[j];
      ex.crowd_labels[j] = rng.uniform01() < p_truthful ? truth : 1 - truth;
    }
    ex.expert_label = truth;
    ds.examples.push_back(std::move(ex));
  }
  ds.validate();
  return ds;
}

std::vector<double> empirical_worker_agreement(const Dataset& ds) {
  if (!ds.all_expert_labeled()) {
    throw Error("empirical_worker_agreement requires expert labels");
  }
  std::vector<double> agreement(ds.worker_count, 0.0);
  for (const auto& ex : ds.examples) {
    for (int j = 0; j < ds.worker_count; ++j) {
      if (ex.crowd_labels[j] == *ex.expert_label) {
        agreement[j] += 1.0;
      }
    }
  }
  for (double& a : agreement) {
    a /= static_cast<double>(ds.size());
  }
  return agreement;
}

}  // namespace rll
