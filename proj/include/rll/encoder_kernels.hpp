#pragma once

#include <vector>

#include "rll/encoder.hpp"
#include "rll/grouping.hpp"

// Index-based compute kernels behind the encoder API. Each kernel has an
// OpenMP-parallel form and a serial reference form; tests compare the two
// and tools/rll_bench times them. The parallel forms keep results
// independent of the thread count: per-item work is embarrassingly parallel
// and every reduction runs in a fixed order (per-group losses summed in
// group order, gradients accumulated per fixed-size chunk, chunks combined
// in chunk order).
namespace rll::kernels {

// Dense row-major feature matrix; row i holds example i.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}
  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
};

FeatureMatrix feature_matrix(const Dataset& ds);

// Scratch for one group's forward and backward pass. Member 0 is the anchor,
// member 1 the target, members 2.. the negatives.
struct GroupWork {
  std::vector<std::vector<std::vector<double>>> acts;  // [member][layer]
  std::vector<double> norms;                           // per member
  std::vector<double> relevance;                       // per candidate (k+1)
  std::vector<double> soft;                            // softmax over candidates
  std::vector<std::vector<double>> grad_embed;         // per member
  std::vector<double> delta, delta_prev;               // backprop scratch

  void resize(const EncoderParams& params, int k);
};

// Writes all layer activations for input x into acts (resized as needed).
void forward_trace(const EncoderParams& params, const double* x,
                   std::vector<std::vector<double>>& acts);

// Loss of one group; fills work with activations, relevances and softmax.
double group_forward(const EncoderParams& params, const FeatureMatrix& x,
                     const IndexGroup& g, const std::vector<double>& conf,
                     double eta, GroupWork& work);

// Accumulates d(group loss)/d(params) into grad, reusing a filled work.
void group_backward(const EncoderParams& params, const FeatureMatrix& x,
                    const IndexGroup& g, const std::vector<double>& conf,
                    double eta, GroupWork& work, EncoderParams& grad);

double batch_loss_omp(const EncoderParams& params, const FeatureMatrix& x,
                      const std::vector<IndexGroup>& groups,
                      const std::vector<double>& conf, double eta);
double batch_loss_serial(const EncoderParams& params, const FeatureMatrix& x,
                         const std::vector<IndexGroup>& groups,
                         const std::vector<double>& conf, double eta);

// Returns the batch loss and writes the summed gradient into grad.
double batch_gradient_omp(const EncoderParams& params, const FeatureMatrix& x,
                          const std::vector<IndexGroup>& groups,
                          const std::vector<double>& conf, double eta,
                          EncoderParams& grad);
double batch_gradient_serial(const EncoderParams& params, const FeatureMatrix& x,
                             const std::vector<IndexGroup>& groups,
                             const std::vector<double>& conf, double eta,
                             EncoderParams& grad);

// Embeds every row of x into out (rows x embedding_dim).
void embed_all_omp(const EncoderParams& params, const FeatureMatrix& x,
                   FeatureMatrix& out);
void embed_all_serial(const EncoderParams& params, const FeatureMatrix& x,
                      FeatureMatrix& out);

}  // namespace rll::kernels
