#include "rll/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rll/confidence.hpp"
#include "rll/error.hpp"
#include "rll/grouping.hpp"
#include "rll/io.hpp"
#include "rll/rng.hpp"
#include "rll/truth_inference.hpp"

namespace rll {

using nlohmann::json;

LogisticModel train_logreg(const std::unordered_map<std::string, std::vector<double>>& features,
                           const std::unordered_map<std::string, int>& labels,
                           const LogRegConfig& cfg) {
  if (features.empty()) {
    throw Error("train_logreg needs examples");
  }
  if (cfg.iters < 0 || cfg.lr <= 0.0 || cfg.l2 < 0.0) {
    throw Error("bad logistic regression config");
  }

  // sort ids so results do not depend on hash iteration order
  std::vector<std::string> ids;
  ids.reserve(features.size());
  for (const auto& [id, _] : features) {
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());

  const int n = static_cast<int>(ids.size());
  const int dim = static_cast<int>(features.begin()->second.size());
  std::vector<const std::vector<double>*> x(n);
  std::vector<int> y(n);
  int positives = 0;
  for (int i = 0; i < n; ++i) {
    const auto& fv = features.at(ids[i]);
    if (static_cast<int>(fv.size()) != dim) {
      throw Error("inconsistent feature dimensions in train_logreg");
    }
    auto it = labels.find(ids[i]);
    if (it == labels.end()) {
      throw Error("missing label for id " + ids[i]);
    }
    x[i] = &fv;
    y[i] = it->second;
    positives += it->second;
  }
  if (positives == 0 || positives == n) {
    throw Error("single-class training set");
  }

  LogisticModel model;
  model.weights.assign(dim, 0.0);
  model.bias = 0.0;
  model.l2 = cfg.l2;

  std::vector<double> grad_w(dim);
  for (int iter = 0; iter < cfg.iters; ++iter) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    for (int i = 0; i < n; ++i) {
      const double p = predict(model, *x[i]);
      const double err = p - y[i];
      const auto& fv = *x[i];
      for (int f = 0; f < dim; ++f) {
        grad_w[f] += err * fv[f];
      }
      grad_b += err;
    }
    const double inv_n = 1.0 / n;
    for (int f = 0; f < dim; ++f) {
      model.weights[f] -= cfg.lr * (grad_w[f] * inv_n + cfg.l2 * model.weights[f]);
    }
    model.bias -= cfg.lr * grad_b * inv_n;
  }
  return model;
}

double predict(const LogisticModel& model, const std::vector<double>& x) {
  if (x.size() != model.weights.size()) {
    throw Error("dimension mismatch in predict");
  }
  double z = model.bias;
  for (std::size_t i = 0; i < x.size(); ++i) {
    z += model.weights[i] * x[i];
  }
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

void check_same_ids(const std::unordered_map<std::string, int>& pred,
                    const std::unordered_map<std::string, int>& truth) {
  if (pred.size() != truth.size()) {
    throw Error("prediction and truth id sets differ");
  }
  for (const auto& [id, _] : pred) {
    if (!truth.count(id)) {
      throw Error("prediction and truth id sets differ");
    }
  }
}

}  // namespace

double accuracy(const std::unordered_map<std::string, int>& pred,
                const std::unordered_map<std::string, int>& truth) {
  check_same_ids(pred, truth);
  int correct = 0;
  for (const auto& [id, p] : pred) {
    correct += p == truth.at(id) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double f1(const std::unordered_map<std::string, int>& pred,
          const std::unordered_map<std::string, int>& truth) {
  check_same_ids(pred, truth);
  int tp = 0, fp = 0, fn = 0;
  for (const auto& [id, p] : pred) {
    const int t = truth.at(id);
    if (p == 1 && t == 1) ++tp;
    if (p == 1 && t == 0) ++fp;
    if (p == 0 && t == 1) ++fn;
  }
  if (tp == 0) {
    return 0.0;
  }
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

Method method_from_string(const std::string& s) {
  if (s == "raw") return Method::raw_features;
  if (s == "mv") return Method::majority_vote;
  if (s == "em") return Method::dawid_skene_em;
  if (s == "rll") return Method::rll;
  if (s == "rll-mle") return Method::rll_mle;
  if (s == "rll-bayes") return Method::rll_bayesian;
  throw Error("unknown method: " + s +
              " (expected raw, mv, em, rll, rll-mle or rll-bayes)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::raw_features: return "raw";
    case Method::majority_vote: return "mv";
    case Method::dawid_skene_em: return "em";
    case Method::rll: return "rll";
    case Method::rll_mle: return "rll-mle";
    case Method::rll_bayesian: return "rll-bayes";
  }
  throw Error("unknown method");
}

namespace {

int env_threads() {
  const char* v = std::getenv("RLL_THREADS");
  if (v == nullptr) {
    return 1;
  }
  const int t = std::atoi(v);
  return t > 0 ? t : 1;
}

std::unordered_map<std::string, int> majority_labels(const Dataset& ds) {
  std::unordered_map<std::string, int> labels;
  labels.reserve(ds.size());
  for (const auto& ex : ds.examples) {
    labels.emplace(ex.id, majority_vote(ex.crowd_labels));
  }
  return labels;
}

std::unordered_map<std::string, std::vector<double>> raw_features_of(const Dataset& ds) {
  std::unordered_map<std::string, std::vector<double>> out;
  out.reserve(ds.size());
  for (const auto& ex : ds.examples) {
    out.emplace(ex.id, ex.features);
  }
  return out;
}

double estimated_class_ratio(const std::unordered_map<std::string, int>& mv_labels) {
  double pos = 0.0;
  for (const auto& [_, y] : mv_labels) {
    pos += y;
  }
  const double neg = static_cast<double>(mv_labels.size()) - pos;
  // add-one smoothing keeps the ratio finite when a side is empty
  return (pos + 1.0) / (neg + 1.0);
}

struct FoldOutcome {
  double acc = 0.0;
  double f1 = 0.0;
};

FoldOutcome run_fold(const Dataset& ds, const FoldAssignment& fa, int fold,
                     const EvalConfig& cfg, std::uint64_t seed) {
  const Dataset train_ds = training_view(ds, fa, fold);
  std::unordered_map<std::string, int> pred, truth;
  for (const auto& ex : ds.examples) {
    if (fa.fold_of.at(ex.id) == fold) {
      truth.emplace(ex.id, *ex.expert_label);
    }
  }
  if (truth.empty()) {
    throw Error("empty test fold");
  }

  auto classify_test = [&](const LogisticModel& model, auto&& feature_of) {
    for (const auto& ex : ds.examples) {
      if (fa.fold_of.at(ex.id) == fold) {
        pred.emplace(ex.id, predict(model, feature_of(ex)) >= 0.5 ? 1 : 0);
      }
    }
  };

  switch (cfg.method) {
    case Method::majority_vote: {
      // direct readout of the test examples' own crowd labels
      for (const auto& ex : ds.examples) {
        if (fa.fold_of.at(ex.id) == fold) {
          pred.emplace(ex.id, majority_vote(ex.crowd_labels));
        }
      }
      break;
    }
    case Method::raw_features: {
      const auto model = train_logreg(raw_features_of(train_ds),
                                      majority_labels(train_ds), cfg.logreg);
      classify_test(model, [](const Example& ex) -> const std::vector<double>& {
        return ex.features;
      });
      break;
    }
    case Method::dawid_skene_em: {
      const EMResult em = dawid_skene(train_ds, cfg.em_max_iters, cfg.em_tol);
      std::unordered_map<std::string, int> labels;
      labels.reserve(train_ds.size());
      for (const auto& ex : train_ds.examples) {
        labels.emplace(ex.id, em.posterior_positive.at(ex.id) >= 0.5 ? 1 : 0);
      }
      const auto model = train_logreg(raw_features_of(train_ds), labels, cfg.logreg);
      classify_test(model, [](const Example& ex) -> const std::vector<double>& {
        return ex.features;
      });
      break;
    }
    case Method::rll:
    case Method::rll_mle:
    case Method::rll_bayesian: {
      const auto mv = majority_labels(train_ds);
      ConfidenceMode mode = ConfidenceMode::off;
      std::optional<BetaPrior> prior;
      if (cfg.method == Method::rll_mle) {
        mode = ConfidenceMode::mle;
      } else if (cfg.method == Method::rll_bayesian) {
        mode = ConfidenceMode::bayesian;
        const double ratio =
            cfg.prior_ratio ? *cfg.prior_ratio : estimated_class_ratio(mv);
        prior = prior_from_class_ratio(ratio, cfg.prior_strength);
      }
      const ConfidenceProfile profile = confidence_profile(train_ds, mode, prior);

      GroupingConfig gcfg;
      gcfg.k = cfg.k;
      gcfg.groups_per_epoch = cfg.groups_per_epoch;
      gcfg.seed = mix_seed(seed, 0xA11CE);

      EncoderConfig ecfg;
      ecfg.layer_sizes.push_back(ds.feature_dim);
      if (cfg.layer_sizes.empty()) {
        ecfg.layer_sizes.insert(ecfg.layer_sizes.end(), {64, 32, 16});
      } else {
        ecfg.layer_sizes.insert(ecfg.layer_sizes.end(), cfg.layer_sizes.begin(),
                                cfg.layer_sizes.end());
      }
      ecfg.eta = cfg.eta;
      ecfg.learning_rate = cfg.learning_rate;
      ecfg.epochs = cfg.epochs;
      ecfg.init_scale = cfg.init_scale;
      ecfg.seed = mix_seed(seed, 0xB0B);

      const TrainResult tr = train(train_ds, profile, gcfg, ecfg);
      if (!cfg.save_models_dir.empty()) {
        std::filesystem::create_directories(cfg.save_models_dir);
        save_params(tr.params, cfg.save_models_dir + "/" + method_name(cfg.method) +
                                   "_s" + std::to_string(seed) + "_f" +
                                   std::to_string(fold) + ".ckpt");
      }

      const EmbeddingMap emb = embed_dataset(tr.params, ds);
      std::unordered_map<std::string, std::vector<double>> train_emb;
      train_emb.reserve(train_ds.size());
      for (const auto& ex : train_ds.examples) {
        train_emb.emplace(ex.id, emb.at(ex.id));
      }
      const auto model = train_logreg(train_emb, mv, cfg.logreg);
      classify_test(model, [&emb](const Example& ex) -> const std::vector<double>& {
        return emb.at(ex.id);
      });
      break;
    }
  }

  FoldOutcome out;
  out.acc = accuracy(pred, truth);
  out.f1 = f1(pred, truth);
  return out;
}

}  // namespace

MetricsReport cross_validate(const Dataset& ds, const EvalConfig& cfg,
                             const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) {
    throw Error("cross_validate needs at least one seed");
  }
  ds.validate();
  if (!ds.all_expert_labeled()) {
    throw Error("cross validation requires expert labels on every example");
  }

  MetricsReport report;
  report.method = method_name(cfg.method);
  report.k = cfg.k;
  report.d = ds.worker_count;
  report.eta = cfg.eta;
  report.seeds = seeds;

  struct Item {
    std::uint64_t seed;
    int fold;
    const FoldAssignment* fa;
  };
  std::vector<FoldAssignment> assignments;
  assignments.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    assignments.push_back(stratified_folds(ds, cfg.folds, s));
  }
  std::vector<Item> items;
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    for (int f = 0; f < cfg.folds; ++f) {
      items.push_back(Item{seeds[si], f, &assignments[si]});
    }
  }

  std::vector<FoldOutcome> outcomes(items.size());
  const int threads = std::min<int>(env_threads(), static_cast<int>(items.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      outcomes[i] = run_fold(ds, *items[i].fa, items[i].fold, cfg,
                             mix_seed(items[i].seed, items[i].fold));
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= items.size()) {
            return;
          }
          try {
            outcomes[i] = run_fold(ds, *items[i].fa, items[i].fold, cfg,
                                   mix_seed(items[i].seed, items[i].fold));
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!first_error) {
              first_error = std::current_exception();
            }
          }
        }
      });
    }
    for (auto& th : pool) {
      th.join();
    }
    if (first_error) {
      std::rethrow_exception(first_error);
    }
  }

  report.fold_accuracy.reserve(outcomes.size());
  report.fold_f1.reserve(outcomes.size());
  double acc_sum = 0.0, f1_sum = 0.0;
  for (const auto& o : outcomes) {
    report.fold_accuracy.push_back(o.acc);
    report.fold_f1.push_back(o.f1);
    acc_sum += o.acc;
    f1_sum += o.f1;
  }
  report.mean_accuracy = acc_sum / static_cast<double>(outcomes.size());
  report.mean_f1 = f1_sum / static_cast<double>(outcomes.size());
  return report;
}

std::vector<MetricsReport> sweep_k(const Dataset& ds, const std::vector<int>& ks,
                                   const EvalConfig& base,
                                   const std::vector<std::uint64_t>& seeds) {
  std::vector<int> sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<MetricsReport> reports;
  reports.reserve(sorted.size());
  for (int k : sorted) {
    EvalConfig cfg = base;
    cfg.k = k;
    try {
      MetricsReport r = cross_validate(ds, cfg, seeds);
      r.swept_value = k;
      reports.push_back(std::move(r));
    } catch (const Error& e) {
      MetricsReport r;
      r.method = method_name(base.method);
      r.k = k;
      r.d = ds.worker_count;
      r.eta = base.eta;
      r.seeds = seeds;
      r.swept_value = k;
      r.error = e.what();
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

Dataset training_view(const Dataset& ds, const FoldAssignment& fa, int test_fold) {
  Dataset out;
  out.feature_dim = ds.feature_dim;
  out.worker_count = ds.worker_count;
  for (const auto& ex : ds.examples) {
    if (fa.fold_of.at(ex.id) == test_fold) {
      continue;
    }
    Example copy = ex;
    copy.expert_label.reset();
    out.examples.push_back(std::move(copy));
  }
  return out;
}

Dataset truncate_workers(const Dataset& ds, int d) {
  if (d < 1 || d > ds.worker_count) {
    throw Error("d=" + std::to_string(d) + " exceeds available workers (" +
                std::to_string(ds.worker_count) + ")");
  }
  Dataset out = ds;
  out.worker_count = d;
  for (auto& ex : out.examples) {
    ex.crowd_labels.resize(d);
  }
  return out;
}

std::vector<MetricsReport> sweep_d(const Dataset& ds, const std::vector<int>& d_values,
                                   const EvalConfig& base,
                                   const std::vector<std::uint64_t>& seeds) {
  std::vector<int> sorted = d_values;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int d : sorted) {
    if (d < 1 || d > ds.worker_count) {
      throw Error("d=" + std::to_string(d) + " exceeds available workers (" +
                  std::to_string(ds.worker_count) + ")");
    }
  }

  std::vector<MetricsReport> reports;
  reports.reserve(sorted.size());
  for (int d : sorted) {
    const Dataset truncated = truncate_workers(ds, d);
    try {
      MetricsReport r = cross_validate(truncated, base, seeds);
      r.swept_value = d;
      reports.push_back(std::move(r));
    } catch (const Error& e) {
      MetricsReport r;
      r.method = method_name(base.method);
      r.k = base.k;
      r.d = d;
      r.eta = base.eta;
      r.seeds = seeds;
      r.swept_value = d;
      r.error = e.what();
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::string render_table(const std::vector<MetricsReport>& reports) {
  std::size_t name_width = 6;
  for (const auto& r : reports) {
    std::string label = r.method;
    if (r.swept_value) {
      label += "[" + std::to_string(*r.swept_value) + "]";
    }
    name_width = std::max(name_width, label.size());
  }
  std::ostringstream out;
  out << std::left;
  out.setf(std::ios::fixed);
  out.precision(4);
  out.width(static_cast<std::streamsize>(name_width));
  out << "Method";
  out << " | Accuracy | F1\n";
  for (const auto& r : reports) {
    std::string label = r.method;
    if (r.swept_value) {
      label += "[" + std::to_string(*r.swept_value) + "]";
    }
    out.width(static_cast<std::streamsize>(name_width));
    out << label;
    if (r.error) {
      out << " | error: " << *r.error << "\n";
    } else {
      out << " |   " << r.mean_accuracy << " | " << r.mean_f1 << "\n";
    }
  }
  return out.str();
}

std::string report_json(const std::vector<MetricsReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json j;
    j["method"] = r.method;
    j["k"] = r.k;
    j["d"] = r.d;
    j["eta"] = r.eta;
    j["seeds"] = r.seeds;
    if (r.swept_value) {
      j["swept_value"] = *r.swept_value;
    }
    if (r.error) {
      j["error"] = *r.error;
    } else {
      j["fold_accuracy"] = r.fold_accuracy;
      j["fold_f1"] = r.fold_f1;
      j["mean_accuracy"] = r.mean_accuracy;
      j["mean_f1"] = r.mean_f1;
    }
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::string sweep_csv(const std::vector<MetricsReport>& reports) {
  std::string out = "param,fold,accuracy,f1\n";
  for (const auto& r : reports) {
    const std::string param =
        r.swept_value ? std::to_string(*r.swept_value) : r.method;
    if (r.error) {
      out += param + ",error,,\n";
      continue;
    }
    const std::size_t folds_per_seed =
        r.seeds.empty() ? r.fold_accuracy.size()
                        : r.fold_accuracy.size() / r.seeds.size();
    for (std::size_t i = 0; i < r.fold_accuracy.size(); ++i) {
      out += param + ',' + std::to_string(i % folds_per_seed) + ',' +
             fmt_double(r.fold_accuracy[i]) + ',' + fmt_double(r.fold_f1[i]) + '\n';
    }
  }
  return out;
}

}  // namespace rll
