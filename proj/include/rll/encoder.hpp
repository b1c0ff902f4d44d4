#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rll/confidence.hpp"
#include "rll/dataset.hpp"
#include "rll/grouping.hpp"

namespace rll {

// Fully-connected encoder: tanh on hidden layers, linear output. layer_sizes
// runs input first, embedding last. eta is the softmax smoothing scale.
struct EncoderConfig {
  std::vector<int> layer_sizes;
  double eta = 10.0;
  double learning_rate = 0.05;
  int epochs = 300;
  std::uint64_t seed = 0;
  double init_scale = 1.0;  // weights ~ U(+-init_scale / sqrt(fan_in))
};

struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // row-major, out x in
  std::vector<double> bias;     // out

  bool operator==(const Layer&) const = default;
};

struct EncoderParams {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;

  bool operator==(const EncoderParams&) const = default;
};

using EmbeddingVector = std::vector<double>;
using FeatureMap = std::unordered_map<std::string, std::vector<double>>;
using EmbeddingMap = std::unordered_map<std::string, EmbeddingVector>;

// Seeded symmetric-uniform weight init, zero biases.
EncoderParams init_params(const EncoderConfig& cfg);

// Gradient-shaped zero copy of params.
EncoderParams zeros_like(const EncoderParams& params);

// dst += a * src, entrywise over all weights and biases.
void axpy_params(double a, const EncoderParams& src, EncoderParams& dst);

EmbeddingVector forward(const EncoderParams& params, const std::vector<double>& x);

// a.b / (|a||b|), clamped to [-1, 1]. Zero-norm inputs are an error.
double cosine_relevance(const EmbeddingVector& a, const EmbeddingVector& b);

// Confidence-weighted softmax posterior of the target among the k+1
// candidates (target plus negatives; the anchor is excluded). Logits are
// eta * delta * relevance, max-shifted before exponentiation.
double group_posterior(const EncoderParams& params, const Group& g,
                       const FeatureMap& features, const ConfidenceProfile& conf,
                       double eta);

// Negative sum of log group posteriors.
double batch_loss(const EncoderParams& params, const std::vector<Group>& groups,
                  const FeatureMap& features, const ConfidenceProfile& conf,
                  double eta);

// Analytic gradient of batch_loss in params shape. Confidences are constants;
// no gradient flows into them.
EncoderParams gradient(const EncoderParams& params, const std::vector<Group>& groups,
                       const FeatureMap& features, const ConfidenceProfile& conf,
                       double eta);

// Max over coordinates of |analytic - central difference| / (|cd| + 1e-12).
double finite_difference_check(const EncoderParams& params,
                               const std::vector<Group>& groups,
                               const FeatureMap& features,
                               const ConfidenceProfile& conf, double eta, double h);

struct TrainResult {
  EncoderParams params;
  std::vector<double> loss_trace;  // mean group loss per epoch, pre-step
};

// Full-batch gradient descent over freshly resampled groups each epoch.
// Deterministic given the seeds in cfg and grouping. Aborts with a
// diagnostic if the loss goes non-finite.
TrainResult train(const Dataset& ds, const ConfidenceProfile& profile,
                  const GroupingConfig& grouping_cfg, const EncoderConfig& encoder_cfg);

EmbeddingMap embed_dataset(const EncoderParams& params, const Dataset& ds);

// Checkpoint: versioned header, layer sizes, then row-major weight and bias
// arrays as decimal text. Reload reproduces embeddings bit-identically on
// the writing platform.
void save_params(const EncoderParams& params, const std::string& path);
EncoderParams load_params(const std::string& path);

}  // namespace rll
