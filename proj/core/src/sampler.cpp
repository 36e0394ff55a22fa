#include "structmap/sampler.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

#include "structmap/cosine.hpp"
#include "structmap/error.hpp"
#include "structmap/parallel.hpp"
#include "structmap/seed.hpp"

namespace structmap {

std::size_t TripletBatch::distinct_groups() const {
  return std::set<std::int64_t>(group_ids.begin(), group_ids.end()).size();
}

namespace {

bool usable(const EquivalenceGroup& g) {
  return g.sentence_ids.size() >= 2 && g.content_indices.size() >= 2;
}

// Maps k in [0, n(n-1)) to an ordered pair (a, b) with a != b.
std::pair<std::size_t, std::size_t> ordered_pair(std::uint64_t k, std::size_t n) {
  const auto a = static_cast<std::size_t>(k / (n - 1));
  auto b = static_cast<std::size_t>(k % (n - 1));
  if (b >= a) ++b;
  return {a, b};
}

// Floyd's algorithm: k distinct values from [0, space), returned ascending.
std::vector<std::uint64_t> distinct_draws(std::uint64_t space, std::uint64_t k,
                                          std::mt19937_64& rng) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k) * 2);
  for (std::uint64_t j = space - k; j < space; ++j) {
    const auto t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::uint64_t pair_space_size(const EquivalenceGroup& g) {
  const std::uint64_t s = g.sentence_ids.size();
  const std::uint64_t c = g.content_indices.size();
  if (s < 2 || c < 2) return 0;
  return s * (s - 1) * c * (c - 1);
}

std::vector<PairSample> sample_pairs(const Dataset& d, int pairs_per_group, std::uint64_t seed) {
  if (pairs_per_group < 1)
    throw Error(ErrorCode::InvalidConfig, "pairs_per_group must be >= 1");

  std::vector<PairSample> out;
  bool any = false;
  for (const auto& g : d.groups) {
    if (!usable(g)) continue;
    any = true;
    const std::uint64_t space = pair_space_size(g);
    const std::uint64_t want = std::min<std::uint64_t>(space, static_cast<std::uint64_t>(pairs_per_group));
    std::mt19937_64 rng(derive_seed(seed, 0x5a3, static_cast<std::uint64_t>(g.group_id)));

    std::vector<std::uint64_t> picks;
    if (want == space) {
      picks.resize(static_cast<std::size_t>(space));
      for (std::uint64_t k = 0; k < space; ++k) picks[static_cast<std::size_t>(k)] = k;
    } else {
      picks = distinct_draws(space, want, rng);
    }

    const std::size_t ns = g.sentence_ids.size();
    const std::size_t nc = g.content_indices.size();
    const std::uint64_t index_space = static_cast<std::uint64_t>(nc) * (nc - 1);
    for (const auto k : picks) {
      const auto [sa, sp] = ordered_pair(k / index_space, ns);
      const auto [ia, ib] = ordered_pair(k % index_space, nc);
      out.push_back({g.group_id, g.sentence_ids[sa], g.sentence_ids[sp], g.content_indices[ia],
                     g.content_indices[ib]});
    }
  }
  if (!any)
    throw Error(ErrorCode::NoUsableGroups,
                "no group has at least two sentences and two content positions");
  return out;
}

std::vector<TripletBatch> build_batches(const Dataset& d, const std::vector<PairSample>& samples,
                                        int batch_size, bool symmetry, std::uint64_t seed) {
  if (batch_size < 2) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 2");
  const auto cap = static_cast<std::size_t>(batch_size);

  std::vector<PairSample> order = samples;
  std::mt19937_64 rng(derive_seed(seed, 0xba7));
  std::shuffle(order.begin(), order.end(), rng);

  auto make_batch = [&](std::vector<PairSample> chosen) {
    TripletBatch b;
    const std::size_t n = chosen.size();
    if (symmetry) {
      chosen.reserve(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        PairSample s = chosen[i];
        std::swap(s.anchor_sent, s.positive_sent);
        chosen.push_back(s);
      }
    }
    b.samples = std::move(chosen);
    for (const auto& s : b.samples) {
      b.anchors.push_back({d.row_at(s.anchor_sent, s.i1), d.row_at(s.anchor_sent, s.i2)});
      b.positives.push_back({d.row_at(s.positive_sent, s.i1), d.row_at(s.positive_sent, s.i2)});
      b.group_ids.push_back(s.group_id);
    }
    return b;
  };

  std::vector<TripletBatch> batches;
  std::vector<PairSample> deferred;
  std::size_t next = 0;
  while (next < order.size() || !deferred.empty()) {
    std::vector<PairSample> chosen;
    std::unordered_set<std::int64_t> present;
    std::vector<PairSample> still_deferred;
    for (auto& s : deferred) {
      if (chosen.size() < cap && present.insert(s.group_id).second) {
        chosen.push_back(s);
      } else {
        still_deferred.push_back(s);
      }
    }
    deferred = std::move(still_deferred);
    while (chosen.size() < cap && next < order.size()) {
      const auto& s = order[next++];
      if (present.insert(s.group_id).second) {
        chosen.push_back(s);
      } else {
        deferred.push_back(s);
      }
    }
    batches.push_back(make_batch(std::move(chosen)));
  }
  return batches;
}

std::vector<std::size_t> mine_hard_negatives(const Eigen::MatrixXd& anchor_pair_vectors,
                                             const std::vector<std::int64_t>& group_ids) {
  const auto n = static_cast<std::size_t>(anchor_pair_vectors.cols());
  if (group_ids.size() != n)
    throw Error(ErrorCode::LengthMismatch, "mine_hard_negatives: " + std::to_string(n) +
                                               " vectors but " + std::to_string(group_ids.size()) +
                                               " group ids");
  const auto dim = static_cast<std::size_t>(anchor_pair_vectors.rows());
  auto col = [&](std::size_t i) {
    return std::span<const double>(anchor_pair_vectors.data() + i * dim, dim);
  };

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = squared_norm(col(i));

  std::vector<std::size_t> out(n, static_cast<std::size_t>(-1));
  parallel_for(0, n, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = static_cast<std::size_t>(-1);
    const auto u = col(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (group_ids[j] == group_ids[i]) continue;
      const double dist = cosine_from_parts(dot(u, col(j)), sq[i], sq[j]).value;
      if (dist < best) {
        best = dist;
        arg = j;
      }
    }
    out[i] = arg;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (out[i] == static_cast<std::size_t>(-1))
      throw Error(ErrorCode::NoValidNegative,
                  "entry " + std::to_string(i) + " has no candidate from another group");
  }
  return out;
}

}  // namespace structmap
