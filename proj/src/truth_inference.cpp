#include "rll/truth_inference.hpp"

#include <algorithm>
#include <cmath>

#include "rll/error.hpp"

namespace rll {

int majority_vote(const std::vector<int>& crowd_labels) {
  if (crowd_labels.empty()) {
    throw Error("majority_vote needs at least one label");
  }
  int ones = 0;
  for (int y : crowd_labels) {
    ones += y;
  }
  return 2 * ones >= static_cast<int>(crowd_labels.size()) ? 1 : 0;
}

namespace {

constexpr double kProbClamp = 1e-6;

double clamp_prob(double p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

void check_em_args(const Dataset& ds, int max_iters, double tol) {
  if (max_iters < 1) {
    throw Error("dawid_skene needs max_iters >= 1");
  }
  if (tol <= 0.0) {
    throw Error("dawid_skene needs tol > 0");
  }
  if (ds.examples.empty() || ds.worker_count < 1) {
    throw Error("dawid_skene needs a non-empty dataset with workers");
  }
}

}  // namespace

EMResult dawid_skene(const Dataset& ds, int max_iters, double tol) {
  check_em_args(ds, max_iters, tol);
  const int n = static_cast<int>(ds.size());
  const int d = ds.worker_count;

  // soft majority-vote initialization
  std::vector<double> mu(n);
  for (int i = 0; i < n; ++i) {
    int ones = 0;
    for (int y : ds.examples[i].crowd_labels) {
      ones += y;
    }
    mu[i] = static_cast<double>(ones) / d;
  }

  std::vector<double> se(d, 0.5), sp(d, 0.5);
  std::vector<double> log_se1(d), log_se0(d), log_sp0(d), log_sp1(d);
  std::vector<double> item_ll(n);
  double pi = 0.5;
  EMResult res;
  double prev_ll = 0.0;

  for (int iter = 1; iter <= max_iters; ++iter) {
    // M-step; sums run in example-index order
    double sum_mu = 0.0;
    for (int i = 0; i < n; ++i) {
      sum_mu += mu[i];
    }
    pi = clamp_prob(sum_mu / n);
    for (int j = 0; j < d; ++j) {
      double se_num = 0.0, sp_num = 0.0;
      for (int i = 0; i < n; ++i) {
        const int y = ds.examples[i].crowd_labels[j];
        se_num += mu[i] * y;
        sp_num += (1.0 - mu[i]) * (1 - y);
      }
      se[j] = clamp_prob(sum_mu > 0.0 ? se_num / sum_mu : 0.5);
      const double neg_mass = n - sum_mu;
      sp[j] = clamp_prob(neg_mass > 0.0 ? sp_num / neg_mass : 0.5);
    }
    for (int j = 0; j < d; ++j) {
      log_se1[j] = std::log(se[j]);
      log_se0[j] = std::log(1.0 - se[j]);
      log_sp0[j] = std::log(sp[j]);
      log_sp1[j] = std::log(1.0 - sp[j]);
    }
    const double log_pi1 = std::log(pi);
    const double log_pi0 = std::log(1.0 - pi);

    // E-step: per-example posteriors are independent
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double a = log_pi1, b = log_pi0;
      const auto& row = ds.examples[i].crowd_labels;
      for (int j = 0; j < d; ++j) {
        if (row[j] == 1) {
          a += log_se1[j];
          b += log_sp1[j];
        } else {
          a += log_se0[j];
          b += log_sp0[j];
        }
      }
      const double m = std::max(a, b);
      const double l = m + std::log(std::exp(a - m) + std::exp(b - m));
      mu[i] = std::exp(a - l);
      item_ll[i] = l;
    }
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      ll += item_ll[i];
    }
    res.log_likelihood_trace.push_back(ll);
    res.iterations = iter;
    if (iter > 1 && ll - prev_ll < tol) {
      break;
    }
    prev_ll = ll;
  }

  res.class_prior = pi;
  res.confusions.resize(d);
  for (int j = 0; j < d; ++j) {
    res.confusions[j] = WorkerConfusion{se[j], sp[j]};
  }
  res.posterior_positive.reserve(n);
  for (int i = 0; i < n; ++i) {
    res.posterior_positive.emplace(ds.examples[i].id, mu[i]);
  }
  return res;
}

}  // namespace rll
