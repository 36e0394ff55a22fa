#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "structmap/vecstore.hpp"

namespace structmap {

/// One training pair: tokens i1, i2 of an anchor and a positive sentence from
/// the same equivalence group.
struct PairSample {
  std::int64_t group_id = 0;
  std::int64_t anchor_sent = 0;
  std::int64_t positive_sent = 0;
  std::int32_t i1 = 0;
  std::int32_t i2 = 0;

  bool operator==(const PairSample&) const = default;
};

/// Store rows of the two tokens forming a pair vector f(row1) - f(row2).
struct PairRows {
  std::uint64_t row1 = 0;
  std::uint64_t row2 = 0;

  bool operator==(const PairRows&) const = default;
};

/// A mini-batch of (anchor, positive) pairs. negative_index[i] = j means the
/// negative of entry i is the anchor pair vector of entry j; it is empty
/// until the batch has been mined.
struct TripletBatch {
  std::vector<PairSample> samples;
  std::vector<PairRows> anchors;
  std::vector<PairRows> positives;
  std::vector<std::int64_t> group_ids;
  std::vector<std::size_t> negative_index;

  std::size_t size() const noexcept { return anchors.size(); }
  bool mined() const noexcept { return !anchors.empty() && negative_index.size() == anchors.size(); }
  std::size_t distinct_groups() const;
};

/// Number of ordered (sentence pair x index pair) samples a group offers.
std::uint64_t pair_space_size(const EquivalenceGroup& g);

/// Draws up to pairs_per_group distinct samples per usable group, uniformly
/// without replacement. Groups with fewer valid samples contribute all of
/// them. Throws NoUsableGroups when no group has >= 2 sentences and >= 2
/// content positions.
std::vector<PairSample> sample_pairs(const Dataset& d, int pairs_per_group, std::uint64_t seed);

/// Shuffles, then fills batches of batch_size with at most one sample per
/// group; colliding samples are deferred to later batches. With symmetry the
/// swapped copy of entry i is appended at i + L. Store rows are resolved from d.
std::vector<TripletBatch> build_batches(const Dataset& d, const std::vector<PairSample>& samples,
                                        int batch_size, bool symmetry, std::uint64_t seed);

/// Hard negative per column: argmin over columns j of another group of the
/// cosine distance to column i. Ties go to the smallest j. Throws
/// NoValidNegative if some entry has no candidate from another group.
std::vector<std::size_t> mine_hard_negatives(const Eigen::MatrixXd& anchor_pair_vectors,
                                             const std::vector<std::int64_t>& group_ids);

}  // namespace structmap
