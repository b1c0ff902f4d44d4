#include <cmath>

#include "doctest.h"
#include "rll/error.hpp"
#include "rll/synth.hpp"
#include "support/helpers.hpp"

using namespace rll;
using test_helpers::throws_with;

TEST_CASE("perfect workers copy the expert label") {
  SynthConfig cfg;
  cfg.n_examples = 200;
  cfg.worker_accuracies = {1.0, 1.0, 1.0};
  cfg.seed = 5;
  const Dataset ds = generate(cfg);
  for (const auto& ex : ds.examples) {
    for (int y : ex.crowd_labels) {
      CHECK(y == *ex.expert_label);
    }
  }
  const auto agreement = empirical_worker_agreement(ds);
  for (double a : agreement) {
    CHECK(a == 1.0);
  }
}

TEST_CASE("generation is deterministic per seed") {
  SynthConfig cfg;
  cfg.n_examples = 100;
  cfg.seed = 77;
  CHECK(generate(cfg) == generate(cfg));
  cfg.seed = 78;
  CHECK(!(generate(cfg) == generate(SynthConfig{.n_examples = 100, .seed = 77})));
}

TEST_CASE("positive fraction concentrates at ratio/(1+ratio)") {
  SynthConfig cfg;
  cfg.n_examples = 2000;
  cfg.class_ratio = 1.8;
  cfg.seed = 9;
  const Dataset ds = generate(cfg);
  double pos = 0.0;
  for (const auto& ex : ds.examples) {
    pos += *ex.expert_label;
  }
  const double p = 1.8 / 2.8;
  const double sigma = std::sqrt(p * (1.0 - p) / 2000.0);
  CHECK(std::fabs(pos / 2000.0 - p) <= 3.0 * sigma);
}

TEST_CASE("empirical agreement concentrates at the slot accuracy") {
  SynthConfig cfg;
  cfg.n_examples = 2000;
  cfg.worker_accuracies = {0.6, 0.9};
  cfg.seed = 123;
  const Dataset ds = generate(cfg);
  const auto agreement = empirical_worker_agreement(ds);
  CHECK(std::fabs(agreement[0] - 0.6) <= 3.0 * std::sqrt(0.6 * 0.4 / 2000.0));
  CHECK(std::fabs(agreement[1] - 0.9) <= 3.0 * std::sqrt(0.9 * 0.1 / 2000.0));
}

TEST_CASE("single-example agreements are 0 or 1") {
  SynthConfig cfg;
  cfg.n_examples = 1;
  cfg.seed = 3;
  const Dataset ds = generate(cfg);
  for (double a : empirical_worker_agreement(ds)) {
    CHECK((a == 0.0 || a == 1.0));
  }
}

TEST_CASE("agreement requires expert labels") {
  SynthConfig cfg;
  cfg.n_examples = 5;
  Dataset ds = generate(cfg);
  ds.examples[2].expert_label.reset();
  CHECK(throws_with([&] { empirical_worker_agreement(ds); }, "expert"));
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.worker_accuracies = {0.5};
  CHECK(throws_with([&] { generate(cfg); }, "(0.5, 1]"));
  cfg = SynthConfig{};
  cfg.class_ratio = 0.0;
  CHECK(throws_with([&] { generate(cfg); }, "class_ratio"));
  cfg = SynthConfig{};
  cfg.noise_scale = 0.0;
  CHECK(throws_with([&] { generate(cfg); }, "noise_scale"));
  cfg = SynthConfig{};
  cfg.worker_sensitivities = {0.9};
  CHECK(throws_with([&] { generate(cfg); }, "asymmetric"));
}

TEST_CASE("flipping the class ratio mirrors the distribution") {
  SynthConfig a;
  a.n_examples = 4000;
  a.class_ratio = 1.8;
  a.seed = 11;
  SynthConfig b = a;
  b.class_ratio = 1.0 / 1.8;
  b.seed = 12;

  const Dataset da = generate(a);
  const Dataset db = generate(b);

  auto stats = [](const Dataset& ds) {
    double pos = 0.0, pos_axis = 0.0, neg_axis = 0.0;
    int npos = 0, nneg = 0;
    for (const auto& ex : ds.examples) {
      if (*ex.expert_label == 1) {
        pos += 1.0;
        pos_axis += ex.features[0];
        ++npos;
      } else {
        neg_axis += ex.features[0];
        ++nneg;
      }
    }
    return std::tuple{pos / ds.size(), pos_axis / npos, neg_axis / nneg};
  };
  const auto [fa, pa, na] = stats(da);
  const auto [fb, pb, nb] = stats(db);

  CHECK(std::fabs(fa - (1.0 - fb)) < 0.05);
  // positive mean of one mirrors the negative mean of the other
  CHECK(std::fabs(pa - (-nb)) < 0.15);
  CHECK(std::fabs(na - (-pb)) < 0.15);
}

TEST_CASE("asymmetric workers hit their per-class rates") {
  SynthConfig cfg;
  cfg.n_examples = 3000;
  cfg.worker_sensitivities = {0.95, 0.7};
  cfg.worker_specificities = {0.6, 0.9};
  cfg.seed = 2;
  const Dataset ds = generate(cfg);

  double se0 = 0.0, sp0 = 0.0;
  int npos = 0, nneg = 0;
  for (const auto& ex : ds.examples) {
    if (*ex.expert_label == 1) {
      se0 += ex.crowd_labels[0] == 1;
      ++npos;
    } else {
      sp0 += ex.crowd_labels[0] == 0;
      ++nneg;
    }
  }
  CHECK(std::fabs(se0 / npos - 0.95) < 0.03);
  CHECK(std::fabs(sp0 / nneg - 0.6) < 0.05);
}
