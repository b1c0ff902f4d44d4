#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rll {

// One data instance: raw feature vector, the d crowd labels (one per worker
// slot, each 0 or 1) and an optional expert label kept for evaluation only.
struct Example {
  std::string id;
  std::vector<double> features;
  std::vector<int> crowd_labels;
  std::optional<int> expert_label;

  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  int feature_dim = 0;
  int worker_count = 0;

  std::size_t size() const { return examples.size(); }
  bool all_expert_labeled() const;

  // Throws Error on any invariant violation: empty dataset, inconsistent
  // feature_dim or worker_count, duplicate ids, labels outside {0,1}.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

// id -> position in ds.examples
std::unordered_map<std::string, int> id_index(const Dataset& ds);

// Maps every example id to a fold index in [0, fold_count).
struct FoldAssignment {
  std::unordered_map<std::string, int> fold_of;
  int fold_count = 0;
};

// JSON-lines file, one object per line:
//   {"id": "...", "features": [...], "crowd_labels": [0,1,...],
//    "expert_label": 0|1|null}
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

// Stratified on expert labels (each fold's positive count within one of an
// even split), fold sizes differing by at most one. Deterministic per seed.
// Requires 2 <= folds <= ds.size() and expert labels on every example.
FoldAssignment stratified_folds(const Dataset& ds, int folds, std::uint64_t seed);

}  // namespace rll
