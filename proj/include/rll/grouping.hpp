#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rll/confidence.hpp"
#include "rll/dataset.hpp"
#include "rll/rng.hpp"

namespace rll {

// One training instance: an anchor positive, a target positive and k
// negatives. The positive pair is ordered (the anchor conditions the
// retrieval); the negatives are a k-subset, distinct within the group.
struct Group {
  std::string anchor_id;
  std::string target_id;
  std::vector<std::string> negative_ids;
};

struct GroupingConfig {
  int k = 3;
  int groups_per_epoch = 0;  // <= 0 picks default_groups_per_epoch at use site
  std::uint64_t seed = 0;
};

int default_groups_per_epoch(std::size_t positive_count);  // 50 * |D+|

// Splits ids by the profile's assigned label: 1 -> positives, 0 -> negatives.
// Order follows the dataset. Throws on an id missing from the profile.
std::pair<std::vector<std::string>, std::vector<std::string>> partition_by_label(
    const Dataset& ds, const ConfidenceProfile& profile);

// Index-level group over [0, p) positives and [0, m) negatives.
struct IndexGroup {
  int anchor = 0;
  int target = 0;
  std::vector<int> negatives;
};

// Draws groups from one seeded stream: anchor uniform over positives, target
// uniform over the remaining positives, negatives a uniform k-subset drawn
// without replacement. Used by generate_groups and by the trainer, which
// resamples fresh groups from the same stream every epoch.
class GroupSampler {
 public:
  GroupSampler(int positive_count, int negative_count, int k, std::uint64_t seed);
  IndexGroup next();

 private:
  Rng rng_;
  int p_, m_, k_;
  std::vector<int> scratch_;  // permutation of 0..m-1, prefix-shuffled per draw
};

std::vector<Group> generate_groups(const std::vector<std::string>& positive_ids,
                                   const std::vector<std::string>& negative_ids,
                                   const GroupingConfig& cfg);

// p*(p-1)*C(m,k): the exact number of distinct groups this sampler can emit
// (ordered positive pair, unordered negative subset).
std::uint64_t max_group_count(std::uint64_t p, std::uint64_t m, std::uint64_t k);

}  // namespace rll
