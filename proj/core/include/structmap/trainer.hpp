#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "structmap/sylinear.hpp"
#include "structmap/vecstore.hpp"

namespace structmap {

struct TrainConfig {
  int epochs = 5;
  int batch_size = 500;
  int pairs_per_group = 11;
  bool symmetry = true;
  int out_dim = 75;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int checkpoint_every = 0;  // epochs; 0 disables intermediate checkpoints
  int log_every = 0;         // batches; 0 disables progress events

  /// Where checkpoints, the final map and the run manifest go. Empty: nothing
  /// is written.
  std::filesystem::path out_dir;

  void check() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;          // mean loss per entry, one per epoch
  std::vector<std::size_t> skipped;        // degenerate entries, one per epoch
  std::vector<std::size_t> skipped_batches;  // batches with a single group
  std::size_t n_pairs = 0;
  std::size_t n_steps = 0;
  std::filesystem::path final_map_path;
  double wall_seconds = 0.0;
};

struct BatchEvent {
  int epoch = 0;  // 1-based
  std::size_t batch = 0;
  std::size_t entries = 0;
  double loss = 0.0;
  std::size_t skipped = 0;
};

using TrainObserver = std::function<void(const BatchEvent&)>;

/// Epochs of reshuffle -> batch -> mine under the current map -> loss and
/// gradient -> Adam step. The pair pool is sampled once. Returns the map after
/// the last step. Deterministic in (d, cfg) regardless of thread count.
std::pair<LinearMap, TrainReport> train(const Dataset& d, const TrainConfig& cfg,
                                        const TrainObserver& observer = {});

/// Mines one batch under f and attaches the negative assignment.
void mine_batch(const LinearMap& f, const Dataset& d, TripletBatch& batch);

/// Writes run_manifest.json (resolved config and per-epoch losses) into dir.
void write_run_manifest(const std::filesystem::path& dir, const TrainConfig& cfg,
                        const TrainReport& report);

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch);

}  // namespace structmap
