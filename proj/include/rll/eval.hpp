#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rll/dataset.hpp"
#include "rll/encoder.hpp"

namespace rll {

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2 = 0.0;
};

struct LogRegConfig {
  double l2 = 1e-2;
  double lr = 0.1;
  int iters = 2000;
  std::uint64_t seed = 0;  // unused: zero init + full batch is deterministic
};

// L2-regularized logistic regression by full-batch gradient descent from
// zero initialization (mean NLL + l2/2 * |w|^2; bias unregularized).
// Requires at least one example per class.
LogisticModel train_logreg(const std::unordered_map<std::string, std::vector<double>>& features,
                           const std::unordered_map<std::string, int>& labels,
                           const LogRegConfig& cfg);

// Overflow-safe sigmoid(w.x + b).
double predict(const LogisticModel& model, const std::vector<double>& x);

double accuracy(const std::unordered_map<std::string, int>& pred,
                const std::unordered_map<std::string, int>& truth);

// Positive-class F1; 0 when precision + recall is 0.
double f1(const std::unordered_map<std::string, int>& pred,
          const std::unordered_map<std::string, int>& truth);

enum class Method { raw_features, majority_vote, dawid_skene_em, rll, rll_mle, rll_bayesian };

Method method_from_string(const std::string& s);
std::string method_name(Method m);

struct EvalConfig {
  Method method = Method::rll_bayesian;
  int folds = 5;

  // grouping
  int k = 3;
  int groups_per_epoch = 0;  // <= 0: 50 * |D+| of the training folds

  // encoder sizes after the input layer; empty picks {64, 32, 16}
  std::vector<int> layer_sizes;
  double eta = 10.0;
  double learning_rate = 0.05;
  int epochs = 300;
  double init_scale = 1.0;

  // Beta prior for the bayesian variant; unset estimates the class ratio
  // from training-fold majority votes.
  std::optional<double> prior_ratio;
  double prior_strength = 2.0;

  LogRegConfig logreg;

  // Dawid-Skene settings for the em baseline
  int em_max_iters = 200;
  double em_tol = 1e-8;

  // When non-empty, encoder checkpoints land here as
  // <method>_s<seed>_f<fold>.ckpt (encoder methods only).
  std::string save_models_dir;
};

struct MetricsReport {
  std::string method;
  std::vector<double> fold_accuracy;  // one entry per (seed, fold), in order
  std::vector<double> fold_f1;
  double mean_accuracy = 0.0;
  double mean_f1 = 0.0;

  // config echo
  int k = 0;
  int d = 0;
  double eta = 0.0;
  std::vector<std::uint64_t> seeds;
  std::optional<int> swept_value;     // set by sweep_k / sweep_d
  std::optional<std::string> error;   // sweep error isolation
};

// Runs a full folds-way cross validation once per seed and aggregates.
// All training-side computation (confidences, label inference, encoder,
// downstream classifier) sees only the training folds, with expert labels
// stripped; expert labels are read exclusively when scoring the held-out
// fold. Fold pipelines may run concurrently (capped by RLL_THREADS,
// default 1); results aggregate in (seed, fold) order either way.
MetricsReport cross_validate(const Dataset& ds, const EvalConfig& cfg,
                             const std::vector<std::uint64_t>& seeds);

// One report per k, ascending. A k that no fold can satisfy is reported as
// an error marker without disturbing the other entries.
std::vector<MetricsReport> sweep_k(const Dataset& ds, const std::vector<int>& ks,
                                   const EvalConfig& base,
                                   const std::vector<std::uint64_t>& seeds);

// Truncates every example's crowd labels to the first d' slots, then cross
// validates. Every d' must be <= the dataset's worker_count.
std::vector<MetricsReport> sweep_d(const Dataset& ds, const std::vector<int>& d_values,
                                   const EvalConfig& base,
                                   const std::vector<std::uint64_t>& seeds);

Dataset truncate_workers(const Dataset& ds, int d);

// The training-side view of one cross-validation split: the non-test folds
// with expert labels stripped. Everything cross_validate trains on flows
// through this, so no training computation can read an expert label.
Dataset training_view(const Dataset& ds, const FoldAssignment& fa, int test_fold);

// Aligned "Method | Accuracy | F1" table.
std::string render_table(const std::vector<MetricsReport>& reports);
std::string report_json(const std::vector<MetricsReport>& reports);
// CSV with columns (param, fold, accuracy, f1).
std::string sweep_csv(const std::vector<MetricsReport>& reports);

}  // namespace rll
