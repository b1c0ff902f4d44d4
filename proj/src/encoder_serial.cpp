// Serial reference forms of the encoder batch kernels, kept for testing
// against the OpenMP forms and timed by tools/rll_bench. The per-group math
// is shared; only the looping and accumulation differ: these accumulate
// straight through the group sequence, while the parallel forms reduce
// per-group (loss) or per-chunk (gradient) partials in a fixed order.

#include <cstring>

#include "rll/encoder_kernels.hpp"
#include "rll/error.hpp"

namespace rll::kernels {

namespace {

int checked_k(const std::vector<IndexGroup>& groups) {
  const int k = static_cast<int>(groups.front().negatives.size());
  for (const auto& g : groups) {
    if (static_cast<int>(g.negatives.size()) != k) {
      throw Error("groups in a batch must share k");
    }
  }
  return k;
}

}  // namespace

double batch_loss_serial(const EncoderParams& params, const FeatureMatrix& x,
                         const std::vector<IndexGroup>& groups,
                         const std::vector<double>& conf, double eta) {
  if (groups.empty()) {
    throw Error("batch_loss needs at least one group");
  }
  GroupWork work;
  work.resize(params, checked_k(groups));
  double total = 0.0;
  for (const auto& g : groups) {
    total += group_forward(params, x, g, conf, eta, work);
  }
  return total;
}

double batch_gradient_serial(const EncoderParams& params, const FeatureMatrix& x,
                             const std::vector<IndexGroup>& groups,
                             const std::vector<double>& conf, double eta,
                             EncoderParams& grad) {
  if (groups.empty()) {
    throw Error("gradient needs at least one group");
  }
  GroupWork work;
  work.resize(params, checked_k(groups));
  for (auto& layer : grad.layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  double total = 0.0;
  for (const auto& g : groups) {
    total += group_forward(params, x, g, conf, eta, work);
    group_backward(params, x, g, conf, eta, work, grad);
  }
  return total;
}

void embed_all_serial(const EncoderParams& params, const FeatureMatrix& x,
                      FeatureMatrix& out) {
  out = FeatureMatrix(x.rows, params.output_dim());
  std::vector<std::vector<double>> acts;
  for (int i = 0; i < x.rows; ++i) {
    forward_trace(params, x.row(i), acts);
    std::memcpy(out.row(i), acts.back().data(), sizeof(double) * out.cols);
  }
}

}  // namespace rll::kernels
