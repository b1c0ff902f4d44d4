#include "rll/grouping.hpp"

#include <numeric>

#include "rll/error.hpp"

namespace rll {

int default_groups_per_epoch(std::size_t positive_count) {
  return static_cast<int>(50 * positive_count);
}

std::pair<std::vector<std::string>, std::vector<std::string>> partition_by_label(
    const Dataset& ds, const ConfidenceProfile& profile) {
  std::vector<std::string> pos, neg;
  for (const auto& ex : ds.examples) {
    auto it = profile.find(ex.id);
    if (it == profile.end()) {
      throw Error("missing confidence profile entry for id " + ex.id);
    }
    (it->second.assigned_label == 1 ? pos : neg).push_back(ex.id);
  }
  return {std::move(pos), std::move(neg)};
}

GroupSampler::GroupSampler(int positive_count, int negative_count, int k,
                           std::uint64_t seed)
    : rng_(seed), p_(positive_count), m_(negative_count), k_(k) {
  if (k_ < 1) {
    throw Error("grouping needs k >= 1");
  }
  if (p_ < 2) {
    throw Error("need two positives to form groups");
  }
  if (m_ < k_) {
    throw Error("not enough negatives for k=" + std::to_string(k_));
  }
  scratch_.resize(m_);
  std::iota(scratch_.begin(), scratch_.end(), 0);
}

IndexGroup GroupSampler::next() {
  IndexGroup g;
  g.anchor = static_cast<int>(rng_.below(p_));
  g.target = static_cast<int>(rng_.below(p_ - 1));
  if (g.target >= g.anchor) {
    ++g.target;
  }
  // prefix Fisher-Yates: first k entries are a uniform k-subset of D-
  g.negatives.resize(k_);
  for (int i = 0; i < k_; ++i) {
    const int j = i + static_cast<int>(rng_.below(m_ - i));
    std::swap(scratch_[i], scratch_[j]);
    g.negatives[i] = scratch_[i];
  }
  return g;
}

std::vector<Group> generate_groups(const std::vector<std::string>& positive_ids,
                                   const std::vector<std::string>& negative_ids,
                                   const GroupingConfig& cfg) {
  if (cfg.groups_per_epoch < 1) {
    throw Error("groups_per_epoch must be >= 1");
  }
  GroupSampler sampler(static_cast<int>(positive_ids.size()),
                       static_cast<int>(negative_ids.size()), cfg.k, cfg.seed);
  std::vector<Group> out;
  out.reserve(cfg.groups_per_epoch);
  for (int i = 0; i < cfg.groups_per_epoch; ++i) {
    const IndexGroup g = sampler.next();
    Group group;
    group.anchor_id = positive_ids[g.anchor];
    group.target_id = positive_ids[g.target];
    group.negative_ids.reserve(g.negatives.size());
    for (int idx : g.negatives) {
      group.negative_ids.push_back(negative_ids[idx]);
    }
    out.push_back(std::move(group));
  }
  return out;
}

std::uint64_t max_group_count(std::uint64_t p, std::uint64_t m, std::uint64_t k) {
  if (p < 2) {
    throw Error("need two positives to form groups");
  }
  if (k < 1 || m < k) {
    throw Error("need m >= k >= 1");
  }
  // C(m, k), exact at every step
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (m - k + i) / i;
  }
  return p * (p - 1) * c;
}

}  // namespace rll
