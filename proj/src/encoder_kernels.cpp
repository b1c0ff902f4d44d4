#include "rll/encoder_kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstring>

#include "rll/error.hpp"

namespace rll::kernels {

FeatureMatrix feature_matrix(const Dataset& ds) {
  FeatureMatrix x(static_cast<int>(ds.size()), ds.feature_dim);
  for (int i = 0; i < x.rows; ++i) {
    std::memcpy(x.row(i), ds.examples[i].features.data(),
                sizeof(double) * ds.feature_dim);
  }
  return x;
}

void GroupWork::resize(const EncoderParams& params, int k) {
  const int members = k + 2;
  const int layer_count = static_cast<int>(params.layers.size());
  acts.resize(members);
  grad_embed.resize(members);
  int max_width = params.input_dim();
  for (const auto& layer : params.layers) {
    max_width = std::max(max_width, layer.out);
  }
  for (int m = 0; m < members; ++m) {
    acts[m].resize(layer_count + 1);
    acts[m][0].resize(params.input_dim());
    for (int l = 0; l < layer_count; ++l) {
      acts[m][l + 1].resize(params.layers[l].out);
    }
    grad_embed[m].assign(params.output_dim(), 0.0);
  }
  norms.assign(members, 0.0);
  relevance.assign(k + 1, 0.0);
  soft.assign(k + 1, 0.0);
  delta.resize(max_width);
  delta_prev.resize(max_width);
}

void forward_trace(const EncoderParams& params, const double* x,
                   std::vector<std::vector<double>>& acts) {
  const int layer_count = static_cast<int>(params.layers.size());
  acts.resize(layer_count + 1);
  acts[0].assign(x, x + params.input_dim());
  for (int l = 0; l < layer_count; ++l) {
    const Layer& layer = params.layers[l];
    const std::vector<double>& in = acts[l];
    std::vector<double>& out = acts[l + 1];
    out.resize(layer.out);
    const bool hidden = l + 1 < layer_count;
    for (int o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + static_cast<std::size_t>(o) * layer.in;
      double z = layer.bias[o];
      for (int i = 0; i < layer.in; ++i) {
        z += w[i] * in[i];
      }
      out[o] = hidden ? std::tanh(z) : z;
    }
  }
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

}  // namespace

double group_forward(const EncoderParams& params, const FeatureMatrix& x,
                     const IndexGroup& g, const std::vector<double>& conf,
                     double eta, GroupWork& work) {
  const int k = static_cast<int>(g.negatives.size());
  const int members = k + 2;

  forward_trace(params, x.row(g.anchor), work.acts[0]);
  forward_trace(params, x.row(g.target), work.acts[1]);
  for (int i = 0; i < k; ++i) {
    forward_trace(params, x.row(g.negatives[i]), work.acts[2 + i]);
  }
  for (int m = 0; m < members; ++m) {
    const auto& f = work.acts[m].back();
    const double n2 = dot(f, f);
    if (n2 == 0.0 || !std::isfinite(n2)) {
      throw Error("degenerate embedding (zero or non-finite norm)");
    }
    work.norms[m] = std::sqrt(n2);
  }

  const auto& f_anchor = work.acts[0].back();
  const double anchor_norm = work.norms[0];
  for (int c = 0; c < k + 1; ++c) {
    const auto& f_cand = work.acts[c + 1].back();
    double r = dot(f_anchor, f_cand) / (anchor_norm * work.norms[c + 1]);
    if (!std::isfinite(r)) {
      // a NaN must not reach the clamp, which would silently absorb it
      throw Error("non-finite relevance");
    }
    r = std::min(1.0, std::max(-1.0, r));
    work.relevance[c] = r;
  }

  // logits eta * (delta * r); candidate 0 is the target
  double max_logit = -1e300;
  for (int c = 0; c < k + 1; ++c) {
    const double delta = conf[c == 0 ? g.target : g.negatives[c - 1]];
    const double logit = eta * (delta * work.relevance[c]);
    work.soft[c] = logit;
    max_logit = std::max(max_logit, logit);
  }
  const double target_logit = work.soft[0];
  double z = 0.0;
  for (int c = 0; c < k + 1; ++c) {
    work.soft[c] = std::exp(work.soft[c] - max_logit);
    z += work.soft[c];
  }
  for (int c = 0; c < k + 1; ++c) {
    work.soft[c] /= z;
  }
  return std::log(z) - (target_logit - max_logit);
}

namespace {

// Backprop one member's embedding gradient through the layer stack,
// accumulating weight and bias gradients.
void backward_accumulate(const EncoderParams& params,
                         const std::vector<std::vector<double>>& acts,
                         const std::vector<double>& grad_embed,
                         EncoderParams& grad, std::vector<double>& delta,
                         std::vector<double>& delta_prev) {
  const int layer_count = static_cast<int>(params.layers.size());
  std::copy(grad_embed.begin(), grad_embed.end(), delta.begin());
  for (int l = layer_count; l >= 1; --l) {
    const Layer& layer = params.layers[l - 1];
    Layer& g = grad.layers[l - 1];
    const std::vector<double>& in = acts[l - 1];
    for (int o = 0; o < layer.out; ++o) {
      const double dl = delta[o];
      g.bias[o] += dl;
      double* gw = g.weights.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) {
        gw[i] += dl * in[i];
      }
    }
    if (l > 1) {
      for (int i = 0; i < layer.in; ++i) {
        double s = 0.0;
        for (int o = 0; o < layer.out; ++o) {
          s += layer.weights[static_cast<std::size_t>(o) * layer.in + i] * delta[o];
        }
        // tanh derivative through the previous layer's output
        delta_prev[i] = s * (1.0 - in[i] * in[i]);
      }
      std::swap(delta, delta_prev);
    }
  }
}

}  // namespace

void group_backward(const EncoderParams& params, const FeatureMatrix& x,
                    const IndexGroup& g, const std::vector<double>& conf,
                    double eta, GroupWork& work, EncoderParams& grad) {
  (void)x;
  const int k = static_cast<int>(g.negatives.size());
  const auto& f_anchor = work.acts[0].back();
  const double anchor_norm = work.norms[0];
  const int emb_dim = static_cast<int>(f_anchor.size());

  std::fill(work.grad_embed[0].begin(), work.grad_embed[0].end(), 0.0);
  for (int c = 0; c < k + 1; ++c) {
    const int member = c + 1;
    const double delta_c = conf[c == 0 ? g.target : g.negatives[c - 1]];
    // d loss / d relevance_c
    const double coef = ((work.soft[c] - (c == 0 ? 1.0 : 0.0)) * eta) * delta_c;
    const auto& f_cand = work.acts[member].back();
    const double cand_norm = work.norms[member];
    const double inv_cross = 1.0 / (anchor_norm * cand_norm);
    const double r = work.relevance[c];
    const double inv_cand2 = 1.0 / (cand_norm * cand_norm);
    const double inv_anchor2 = 1.0 / (anchor_norm * anchor_norm);
    auto& ge = work.grad_embed[member];
    for (int i = 0; i < emb_dim; ++i) {
      ge[i] = coef * (f_anchor[i] * inv_cross - r * f_cand[i] * inv_cand2);
      work.grad_embed[0][i] += coef * (f_cand[i] * inv_cross - r * f_anchor[i] * inv_anchor2);
    }
  }

  for (int m = 0; m < k + 2; ++m) {
    backward_accumulate(params, work.acts[m], work.grad_embed[m], grad,
                        work.delta, work.delta_prev);
  }
}

namespace {

int group_k(const std::vector<IndexGroup>& groups) {
  const int k = static_cast<int>(groups.front().negatives.size());
  for (const auto& g : groups) {
    if (static_cast<int>(g.negatives.size()) != k) {
      throw Error("groups in a batch must share k");
    }
  }
  return k;
}

void zero_params(EncoderParams& p) {
  for (auto& layer : p.layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

void add_params(const EncoderParams& src, EncoderParams& dst) {
  for (std::size_t l = 0; l < src.layers.size(); ++l) {
    const auto& s = src.layers[l];
    auto& d = dst.layers[l];
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
      d.weights[i] += s.weights[i];
    }
    for (std::size_t i = 0; i < s.bias.size(); ++i) {
      d.bias[i] += s.bias[i];
    }
  }
}

// Groups per gradient chunk. Fixed so the accumulation tree, and therefore
// the bits of the result, never depend on the thread count.
constexpr int kGradChunk = 16;

}  // namespace

double batch_loss_omp(const EncoderParams& params, const FeatureMatrix& x,
                      const std::vector<IndexGroup>& groups,
                      const std::vector<double>& conf, double eta) {
  if (groups.empty()) {
    throw Error("batch_loss needs at least one group");
  }
  const int n = static_cast<int>(groups.size());
  std::vector<double> losses(n);
  std::atomic<bool> failed{false};
  std::string failure;

#pragma omp parallel
  {
    GroupWork work;
    work.resize(params, group_k(groups));
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      if (failed.load(std::memory_order_relaxed)) {
        continue;
      }
      try {
        losses[i] = group_forward(params, x, groups[i], conf, eta, work);
      } catch (const Error& e) {
#pragma omp critical
        {
          if (!failed.load(std::memory_order_relaxed)) {
            failure = e.what();
            failed.store(true, std::memory_order_relaxed);
          }
        }
      }
    }
  }
  if (failed.load()) {
    throw Error(failure);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += losses[i];
  }
  return total;
}

double batch_gradient_omp(const EncoderParams& params, const FeatureMatrix& x,
                          const std::vector<IndexGroup>& groups,
                          const std::vector<double>& conf, double eta,
                          EncoderParams& grad) {
  if (groups.empty()) {
    throw Error("gradient needs at least one group");
  }
  const int n = static_cast<int>(groups.size());
  const int chunks = (n + kGradChunk - 1) / kGradChunk;
  std::vector<EncoderParams> partials(chunks, zeros_like(params));
  std::vector<double> chunk_loss(chunks, 0.0);
  std::atomic<bool> failed{false};
  std::string failure;

#pragma omp parallel
  {
    GroupWork work;
    work.resize(params, group_k(groups));
#pragma omp for schedule(static)
    for (int c = 0; c < chunks; ++c) {
      if (failed.load(std::memory_order_relaxed)) {
        continue;
      }
      const int begin = c * kGradChunk;
      const int end = std::min(n, begin + kGradChunk);
      try {
        for (int i = begin; i < end; ++i) {
          chunk_loss[c] += group_forward(params, x, groups[i], conf, eta, work);
          group_backward(params, x, groups[i], conf, eta, work, partials[c]);
        }
      } catch (const Error& e) {
#pragma omp critical
        {
          if (!failed.load(std::memory_order_relaxed)) {
            failure = e.what();
            failed.store(true, std::memory_order_relaxed);
          }
        }
      }
    }
  }
  if (failed.load()) {
    throw Error(failure);
  }

  zero_params(grad);
  double total = 0.0;
  for (int c = 0; c < chunks; ++c) {
    add_params(partials[c], grad);
    total += chunk_loss[c];
  }
  return total;
}

void embed_all_omp(const EncoderParams& params, const FeatureMatrix& x,
                   FeatureMatrix& out) {
  out = FeatureMatrix(x.rows, params.output_dim());
#pragma omp parallel
  {
    std::vector<std::vector<double>> acts;
#pragma omp for schedule(static)
    for (int i = 0; i < x.rows; ++i) {
      forward_trace(params, x.row(i), acts);
      std::memcpy(out.row(i), acts.back().data(), sizeof(double) * out.cols);
    }
  }
}

}  // namespace rll::kernels
