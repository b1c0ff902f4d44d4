#include "rll/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "rll/error.hpp"
#include "rll/io.hpp"
#include "rll/rng.hpp"

namespace rll {

using nlohmann::json;

bool Dataset::all_expert_labeled() const {
  for (const auto& ex : examples) {
    if (!ex.expert_label.has_value()) {
      return false;
    }
  }
  return true;
}

void Dataset::validate() const {
  if (examples.empty()) {
    throw Error("dataset is empty");
  }
  if (feature_dim <= 0 || worker_count <= 0) {
    throw Error("dataset needs positive feature_dim and worker_count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& ex : examples) {
    if (!seen.insert(ex.id).second) {
      throw Error("duplicate id: " + ex.id);
    }
    if (static_cast<int>(ex.features.size()) != feature_dim) {
      throw Error("inconsistent feature_dim for id " + ex.id);
    }
    if (static_cast<int>(ex.crowd_labels.size()) != worker_count) {
      throw Error("inconsistent worker_count for id " + ex.id);
    }
    for (int y : ex.crowd_labels) {
      if (y != 0 && y != 1) {
        throw Error("crowd label outside {0,1} for id " + ex.id);
      }
    }
    if (ex.expert_label && *ex.expert_label != 0 && *ex.expert_label != 1) {
      throw Error("expert label outside {0,1} for id " + ex.id);
    }
  }
}

std::unordered_map<std::string, int> id_index(const Dataset& ds) {
  std::unordered_map<std::string, int> idx;
  idx.reserve(ds.size());
  for (int i = 0; i < static_cast<int>(ds.size()); ++i) {
    idx.emplace(ds.examples[i].id, i);
  }
  return idx;
}

namespace {

Example parse_record(const json& j, int lineno) {
  auto fail = [lineno](const std::string& msg) -> Error {
    return Error("line " + std::to_string(lineno) + ": " + msg);
  };
  if (!j.is_object()) {
    throw fail("record is not a JSON object");
  }
  Example ex;
  if (!j.contains("id") || !j["id"].is_string()) {
    throw fail("missing or non-string \"id\"");
  }
  ex.id = j["id"].get<std::string>();
  if (!j.contains("features") || !j["features"].is_array()) {
    throw fail("missing or non-array \"features\"");
  }
  for (const auto& v : j["features"]) {
    if (!v.is_number()) {
      throw fail("non-numeric feature");
    }
    ex.features.push_back(v.get<double>());
  }
  if (!j.contains("crowd_labels") || !j["crowd_labels"].is_array()) {
    throw fail("missing or non-array \"crowd_labels\"");
  }
  for (const auto& v : j["crowd_labels"]) {
    if (!v.is_number_integer()) {
      throw fail("crowd label outside {0,1}");
    }
    const int y = v.get<int>();
    if (y != 0 && y != 1) {
      throw fail("crowd label outside {0,1}");
    }
    ex.crowd_labels.push_back(y);
  }
  if (j.contains("expert_label") && !j["expert_label"].is_null()) {
    if (!j["expert_label"].is_number_integer()) {
      throw fail("expert label outside {0,1}");
    }
    const int y = j["expert_label"].get<int>();
    if (y != 0 && y != 1) {
      throw fail("expert label outside {0,1}");
    }
    ex.expert_label = y;
  }
  return ex;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open dataset file: " + path);
  }
  Dataset ds;
  std::string line;
  int lineno = 0;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("line " + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    Example ex = parse_record(j, lineno);
    if (ds.examples.empty()) {
      ds.feature_dim = static_cast<int>(ex.features.size());
      ds.worker_count = static_cast<int>(ex.crowd_labels.size());
      if (ds.feature_dim == 0) {
        throw Error("line " + std::to_string(lineno) + ": empty feature vector");
      }
      if (ds.worker_count == 0) {
        throw Error("line " + std::to_string(lineno) + ": empty crowd_labels");
      }
    } else {
      if (static_cast<int>(ex.features.size()) != ds.feature_dim) {
        throw Error("line " + std::to_string(lineno) + ": inconsistent feature_dim");
      }
      if (static_cast<int>(ex.crowd_labels.size()) != ds.worker_count) {
        throw Error("line " + std::to_string(lineno) + ": inconsistent worker_count");
      }
    }
    if (!seen.insert(ex.id).second) {
      throw Error("line " + std::to_string(lineno) + ": duplicate id: " + ex.id);
    }
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) {
    throw Error("dataset file has no records: " + path);
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::string out;
  for (const auto& ex : ds.examples) {
    json j;
    j["id"] = ex.id;
    j["features"] = ex.features;
    j["crowd_labels"] = ex.crowd_labels;
    if (ex.expert_label) {
      j["expert_label"] = *ex.expert_label;
    } else {
      j["expert_label"] = nullptr;
    }
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

FoldAssignment stratified_folds(const Dataset& ds, int folds, std::uint64_t seed) {
  if (folds < 2) {
    throw Error("folds must be >= 2");
  }
  if (static_cast<std::size_t>(folds) > ds.size()) {
    throw Error("folds exceed dataset size");
  }
  if (!ds.all_expert_labeled()) {
    throw Error("stratified_folds requires expert labels on every example");
  }

  std::vector<int> pos, neg;
  for (int i = 0; i < static_cast<int>(ds.size()); ++i) {
    (*ds.examples[i].expert_label == 1 ? pos : neg).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);

  FoldAssignment fa;
  fa.fold_count = folds;
  fa.fold_of.reserve(ds.size());
  std::vector<int> load(folds, 0);

  // Positives round-robin keeps per-fold positive counts within one of each
  // other; negatives then go to the lightest fold, which keeps total sizes
  // within one as well.
  int f = 0;
  for (int i : pos) {
    fa.fold_of.emplace(ds.examples[i].id, f);
    ++load[f];
    f = (f + 1) % folds;
  }
  for (int i : neg) {
    int best = 0;
    for (int c = 1; c < folds; ++c) {
      if (load[c] < load[best]) {
        best = c;
      }
    }
    fa.fold_of.emplace(ds.examples[i].id, best);
    ++load[best];
  }
  return fa;
}

}  // namespace rll
