// Command line front end: generate | infer | evaluate | sweep.
// All randomness flows from --seed flags; reruns with identical flags
// produce byte-identical output files.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rll/confidence.hpp"
#include "rll/dataset.hpp"
#include "rll/error.hpp"
#include "rll/eval.hpp"
#include "rll/io.hpp"
#include "rll/synth.hpp"
#include "rll/truth_inference.hpp"

namespace {

using nlohmann::json;

rll::SynthConfig synth_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw rll::Error("cannot open config file: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw rll::Error("malformed config file " + path + ": " + e.what());
  }
  rll::SynthConfig cfg;
  if (j.contains("n_examples")) cfg.n_examples = j["n_examples"].get<int>();
  if (j.contains("feature_dim")) cfg.feature_dim = j["feature_dim"].get<int>();
  if (j.contains("class_ratio")) cfg.class_ratio = j["class_ratio"].get<double>();
  if (j.contains("class_separation")) cfg.class_separation = j["class_separation"].get<double>();
  if (j.contains("noise_scale")) cfg.noise_scale = j["noise_scale"].get<double>();
  if (j.contains("worker_accuracies"))
    cfg.worker_accuracies = j["worker_accuracies"].get<std::vector<double>>();
  if (j.contains("worker_sensitivities"))
    cfg.worker_sensitivities = j["worker_sensitivities"].get<std::vector<double>>();
  if (j.contains("worker_specificities"))
    cfg.worker_specificities = j["worker_specificities"].get<std::vector<double>>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  return cfg;
}

struct GenerateArgs {
  std::string out;
  std::string config;
  int n = 400;
  int dim = 20;
  double ratio = 1.8;
  double sep = 3.0;
  double noise = 1.0;
  std::vector<double> accuracies;
  std::vector<double> sensitivities;
  std::vector<double> specificities;
  std::uint64_t seed = 1;
};

int cmd_generate(const GenerateArgs& args, const CLI::App* sub) {
  rll::SynthConfig cfg;
  if (!args.config.empty()) {
    cfg = synth_config_from_file(args.config);
  }
  // explicit flags win over the config file
  if (sub->count("--n")) cfg.n_examples = args.n;
  if (sub->count("--dim")) cfg.feature_dim = args.dim;
  if (sub->count("--ratio")) cfg.class_ratio = args.ratio;
  if (sub->count("--sep")) cfg.class_separation = args.sep;
  if (sub->count("--noise")) cfg.noise_scale = args.noise;
  if (sub->count("--accuracies")) cfg.worker_accuracies = args.accuracies;
  if (sub->count("--sensitivities")) cfg.worker_sensitivities = args.sensitivities;
  if (sub->count("--specificities")) cfg.worker_specificities = args.specificities;
  if (sub->count("--seed")) cfg.seed = args.seed;

  const rll::Dataset ds = rll::generate(cfg);
  rll::save_dataset(ds, args.out);

  int positives = 0;
  for (const auto& ex : ds.examples) {
    positives += *ex.expert_label;
  }
  std::printf("wrote %zu examples to %s (d=%d, positive fraction %.4f)\n",
              ds.size(), args.out.c_str(), ds.worker_count,
              static_cast<double>(positives) / ds.size());
  return 0;
}

struct InferArgs {
  std::string data;
  std::string out;
  std::optional<double> prior_ratio;
  double prior_strength = 2.0;
  int max_iters = 200;
  double tol = 1e-8;
};

int cmd_infer(const InferArgs& args) {
  const rll::Dataset ds = rll::load_dataset(args.data);

  std::vector<int> mv(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    mv[i] = rll::majority_vote(ds.examples[i].crowd_labels);
  }

  double ratio;
  if (args.prior_ratio) {
    ratio = *args.prior_ratio;
  } else {
    double pos = 0.0;
    for (int v : mv) {
      pos += v;
    }
    ratio = (pos + 1.0) / (static_cast<double>(ds.size()) - pos + 1.0);
  }
  const rll::BetaPrior prior = rll::prior_from_class_ratio(ratio, args.prior_strength);
  const rll::EMResult em = rll::dawid_skene(ds, args.max_iters, args.tol);

  std::string csv = "id,mv,mle,bayes,ds_posterior\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& ex = ds.examples[i];
    csv += ex.id + ',' + std::to_string(mv[i]) + ',' +
           rll::fmt_double(rll::mle_confidence(ex.crowd_labels)) + ',' +
           rll::fmt_double(rll::bayesian_confidence(ex.crowd_labels, prior)) + ',' +
           rll::fmt_double(em.posterior_positive.at(ex.id)) + '\n';
  }
  rll::atomic_write(args.out, csv);
  std::printf("wrote %zu rows to %s (EM iterations: %d)\n", ds.size(),
              args.out.c_str(), em.iterations);

  if (ds.all_expert_labeled()) {
    int mv_ok = 0, ds_ok = 0, bayes_ok = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& ex = ds.examples[i];
      const int expert = *ex.expert_label;
      mv_ok += mv[i] == expert;
      ds_ok += (em.posterior_positive.at(ex.id) >= 0.5 ? 1 : 0) == expert;
      bayes_ok += (rll::bayesian_confidence(ex.crowd_labels, prior) >= 0.5 ? 1 : 0) == expert;
    }
    const double n = static_cast<double>(ds.size());
    std::printf("agreement vs expert: mv=%.4f bayes=%.4f ds=%.4f\n", mv_ok / n,
                bayes_ok / n, ds_ok / n);
  } else {
    std::printf("no expert labels; skipping agreement summary\n");
  }
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string config;
  std::vector<std::string> methods = {"rll", "rll-mle", "rll-bayes"};
  int folds = 5;
  int k = 3;
  double eta = 10.0;
  int epochs = 300;
  int groups_per_epoch = 0;
  std::vector<int> layers = {64, 32, 16};
  double lr = 0.05;
  double init_scale = 1.0;
  std::optional<double> prior_ratio;
  double prior_strength = 2.0;
  double l2 = 1e-2;
  double logreg_lr = 0.1;
  int logreg_iters = 2000;
  std::uint64_t seed = 1;
  int replicates = 1;
  std::string out_table;
  std::string out_json;
  std::string save_models;

  // sweep only
  std::string sweep;
  std::vector<int> values;
  std::string method = "rll-bayes";
  std::string out_csv;
};

// Fills in any knob the command line left untouched from a JSON config
// file; explicit flags always win.
void apply_eval_config_file(EvalArgs& args, const CLI::App* sub) {
  if (args.config.empty()) {
    return;
  }
  std::ifstream in(args.config);
  if (!in) {
    throw rll::Error("cannot open config file: " + args.config);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw rll::Error("malformed config file " + args.config + ": " + e.what());
  }
  auto provided = [&](const char* flag) {
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  auto set_if = [&](const char* flag, const char* key, auto& field) {
    if (!provided(flag) && j.contains(key)) {
      field = j[key].get<std::decay_t<decltype(field)>>();
    }
  };
  set_if("--methods", "methods", args.methods);
  set_if("--folds", "folds", args.folds);
  set_if("--k", "k", args.k);
  set_if("--eta", "eta", args.eta);
  set_if("--epochs", "epochs", args.epochs);
  set_if("--groups-per-epoch", "groups_per_epoch", args.groups_per_epoch);
  set_if("--layers", "layers", args.layers);
  set_if("--lr", "lr", args.lr);
  set_if("--init-scale", "init_scale", args.init_scale);
  set_if("--prior-strength", "prior_strength", args.prior_strength);
  set_if("--l2", "l2", args.l2);
  set_if("--logreg-lr", "logreg_lr", args.logreg_lr);
  set_if("--logreg-iters", "logreg_iters", args.logreg_iters);
  set_if("--seed", "seed", args.seed);
  set_if("--replicates", "replicates", args.replicates);
  set_if("--method", "method", args.method);
  set_if("--values", "values", args.values);
  if (sub->count("--prior-ratio") == 0 && j.contains("prior_ratio")) {
    args.prior_ratio = j["prior_ratio"].get<double>();
  }
}

rll::EvalConfig eval_config(const EvalArgs& args) {
  rll::EvalConfig cfg;
  cfg.folds = args.folds;
  cfg.k = args.k;
  cfg.eta = args.eta;
  cfg.epochs = args.epochs;
  cfg.groups_per_epoch = args.groups_per_epoch;
  cfg.layer_sizes = args.layers;
  cfg.learning_rate = args.lr;
  cfg.init_scale = args.init_scale;
  cfg.prior_ratio = args.prior_ratio;
  cfg.prior_strength = args.prior_strength;
  cfg.logreg.l2 = args.l2;
  cfg.logreg.lr = args.logreg_lr;
  cfg.logreg.iters = args.logreg_iters;
  cfg.save_models_dir = args.save_models;
  return cfg;
}

std::vector<std::uint64_t> seeds_of(const EvalArgs& args) {
  if (args.replicates < 1) {
    throw rll::Error("replicates must be >= 1");
  }
  std::vector<std::uint64_t> seeds(args.replicates);
  for (int r = 0; r < args.replicates; ++r) {
    seeds[r] = args.seed + static_cast<std::uint64_t>(r);
  }
  return seeds;
}

int cmd_evaluate(EvalArgs& args, const CLI::App* sub) {
  apply_eval_config_file(args, sub);
  const rll::Dataset ds = rll::load_dataset(args.data);
  const auto seeds = seeds_of(args);

  std::vector<rll::MetricsReport> reports;
  for (const auto& name : args.methods) {
    rll::EvalConfig cfg = eval_config(args);
    cfg.method = rll::method_from_string(name);
    reports.push_back(rll::cross_validate(ds, cfg, seeds));
  }

  const std::string table = rll::render_table(reports);
  std::fputs(table.c_str(), stdout);
  if (!args.out_table.empty()) {
    rll::atomic_write(args.out_table, table);
  }
  if (!args.out_json.empty()) {
    rll::atomic_write(args.out_json, rll::report_json(reports));
  }
  return 0;
}

int cmd_sweep(EvalArgs& args, const CLI::App* sub) {
  apply_eval_config_file(args, sub);
  const rll::Dataset ds = rll::load_dataset(args.data);
  const auto seeds = seeds_of(args);
  rll::EvalConfig cfg = eval_config(args);
  cfg.method = rll::method_from_string(args.method);

  std::vector<rll::MetricsReport> reports;
  if (args.sweep == "k") {
    reports = rll::sweep_k(ds, args.values, cfg, seeds);
  } else if (args.sweep == "d") {
    reports = rll::sweep_d(ds, args.values, cfg, seeds);
  } else {
    throw rll::Error("--sweep must be k or d");
  }

  for (const auto& r : reports) {
    if (r.error) {
      std::fprintf(stderr, "sweep value %d failed: %s\n",
                   r.swept_value.value_or(-1), r.error->c_str());
    }
  }
  std::fputs(rll::render_table(reports).c_str(), stdout);
  rll::atomic_write(args.out_csv, rll::sweep_csv(reports));
  std::printf("wrote %s\n", args.out_csv.c_str());
  return 0;
}

void add_eval_options(CLI::App* sub, EvalArgs& args) {
  sub->add_option("--data", args.data, "input JSONL dataset")->required();
  sub->add_option("--config", args.config, "JSON config file (flags win)");
  sub->add_option("--folds", args.folds, "cross-validation folds");
  sub->add_option("--k", args.k, "negatives per group");
  sub->add_option("--eta", args.eta, "softmax smoothing");
  sub->add_option("--epochs", args.epochs, "training epochs");
  sub->add_option("--groups-per-epoch", args.groups_per_epoch,
                  "groups sampled per epoch (0: 50 * positives)");
  sub->add_option("--layers", args.layers, "encoder sizes after the input layer")
      ->delimiter(',');
  sub->add_option("--lr", args.lr, "encoder learning rate");
  sub->add_option("--init-scale", args.init_scale, "weight init scale");
  sub->add_option("--prior-ratio", args.prior_ratio,
                  "class prior ratio for the Beta prior (default: estimated "
                  "from training-fold majority votes)");
  sub->add_option("--prior-strength", args.prior_strength, "Beta prior pseudo-count");
  sub->add_option("--l2", args.l2, "logistic regression L2");
  sub->add_option("--logreg-lr", args.logreg_lr, "logistic regression step size");
  sub->add_option("--logreg-iters", args.logreg_iters, "logistic regression iterations");
  sub->add_option("--seed", args.seed, "base seed");
  sub->add_option("--replicates", args.replicates,
                  "number of seeds (seed, seed+1, ...) to average over");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"representation learning from crowdsourced labels"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* sub_gen = app.add_subcommand("generate", "write a synthetic dataset");
  sub_gen->add_option("--out", gen.out, "output JSONL path")->required();
  sub_gen->add_option("--config", gen.config, "JSON config file (flags win)");
  sub_gen->add_option("--n", gen.n, "number of examples");
  sub_gen->add_option("--dim", gen.dim, "feature dimension");
  sub_gen->add_option("--ratio", gen.ratio, "positive:negative class ratio");
  sub_gen->add_option("--sep", gen.sep, "distance between class means");
  sub_gen->add_option("--noise", gen.noise, "within-class standard deviation");
  sub_gen->add_option("--accuracies", gen.accuracies,
                      "per-slot worker accuracies, weakest first")
      ->delimiter(',');
  sub_gen->add_option("--sensitivities", gen.sensitivities,
                      "per-slot P(1|true 1) for asymmetric workers")
      ->delimiter(',');
  sub_gen->add_option("--specificities", gen.specificities,
                      "per-slot P(0|true 0) for asymmetric workers")
      ->delimiter(',');
  sub_gen->add_option("--seed", gen.seed, "generator seed");

  InferArgs inf;
  CLI::App* sub_inf = app.add_subcommand(
      "infer", "run majority vote, confidence estimates and Dawid-Skene");
  sub_inf->add_option("--data", inf.data, "input JSONL dataset")->required();
  sub_inf->add_option("--out", inf.out, "output CSV path")->required();
  sub_inf->add_option("--prior-ratio", inf.prior_ratio,
                      "class prior ratio (default: estimated from majority votes)");
  sub_inf->add_option("--prior-strength", inf.prior_strength, "Beta prior pseudo-count");
  sub_inf->add_option("--max-iters", inf.max_iters, "EM iteration cap");
  sub_inf->add_option("--tol", inf.tol, "EM log-likelihood tolerance");

  EvalArgs ev;
  CLI::App* sub_ev = app.add_subcommand("evaluate", "cross-validate methods");
  add_eval_options(sub_ev, ev);
  sub_ev->add_option("--methods", ev.methods,
                     "methods to compare: raw, mv, em, rll, rll-mle, rll-bayes")
      ->delimiter(',');
  sub_ev->add_option("--out-table", ev.out_table, "write the table here");
  sub_ev->add_option("--out-json", ev.out_json, "write the JSON report here");
  sub_ev->add_option("--save-models", ev.save_models,
                     "directory for per-fold encoder checkpoints");

  EvalArgs sw;
  CLI::App* sub_sw = app.add_subcommand("sweep", "sweep k or d and emit CSV");
  add_eval_options(sub_sw, sw);
  sub_sw->add_option("--sweep", sw.sweep, "k or d")->required();
  sub_sw->add_option("--values", sw.values, "swept values")->required()->delimiter(',');
  sub_sw->add_option("--method", sw.method, "method to sweep (default rll-bayes)");
  sub_sw->add_option("--out", sw.out_csv, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sub_gen->parsed()) {
      return cmd_generate(gen, sub_gen);
    }
    if (sub_inf->parsed()) {
      return cmd_infer(inf);
    }
    if (sub_ev->parsed()) {
      return cmd_evaluate(ev, sub_ev);
    }
    if (sub_sw->parsed()) {
      return cmd_sweep(sw, sub_sw);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rll: %s\n", e.what());
    return 1;
  }
  return 0;
}
