#include "structmap/trainer.hpp"

#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "structmap/error.hpp"
#include "structmap/sampler.hpp"
#include "structmap/seed.hpp"

namespace structmap {

void TrainConfig::check() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "train.epochs must be >= 1");
  if (batch_size < 2) throw Error(ErrorCode::InvalidConfig, "train.batch_size must be >= 2");
  if (pairs_per_group < 1) throw Error(ErrorCode::InvalidConfig, "train.pairs_per_group must be >= 1");
  if (out_dim < 1) throw Error(ErrorCode::InvalidConfig, "train.out_dim must be >= 1");
  if (checkpoint_every < 0) throw Error(ErrorCode::InvalidConfig, "train.checkpoint_every must be >= 0");
  if (log_every < 0) throw Error(ErrorCode::InvalidConfig, "train.log_every must be >= 0");
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch) {
  return dir / ("map.epoch" + std::to_string(epoch) + ".smap");
}

void mine_batch(const LinearMap& f, const Dataset& d, TripletBatch& batch) {
  const Eigen::MatrixXd anchors = f.weights * pair_inputs(d.store, batch.anchors);
  batch.negative_index = mine_hard_negatives(anchors, batch.group_ids);
}

std::pair<LinearMap, TrainReport> train(const Dataset& d, const TrainConfig& cfg,
                                        const TrainObserver& observer) {
  cfg.check();
  if (d.store.dim == 0) throw Error(ErrorCode::InvalidDims, "dataset has no vectors");
  const auto start = std::chrono::steady_clock::now();

  const auto pool = sample_pairs(d, cfg.pairs_per_group, derive_seed(cfg.seed, 0x9a17));
  LinearMap f = init_map(static_cast<int>(d.store.dim), cfg.out_dim, derive_seed(cfg.seed, 0x1417));
  AdamState adam = AdamState::zeros_like(f, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  TrainReport report;
  report.n_pairs = pool.size();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto batches = build_batches(d, pool, cfg.batch_size, cfg.symmetry,
                                 derive_seed(cfg.seed, 0xe90c, static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    std::size_t entries = 0;
    std::size_t skipped = 0;
    std::size_t skipped_batches = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      auto& batch = batches[b];
      if (batch.distinct_groups() < 2) {
        ++skipped_batches;
        continue;
      }
      mine_batch(f, d, batch);
      const auto lg = batch_loss_grad(f, d, batch);
      std::tie(f, adam) = adam_step(f, adam, lg.grad);
      ++report.n_steps;
      loss_sum += lg.loss * static_cast<double>(batch.size());
      entries += batch.size();
      skipped += lg.skipped;
      if (observer && cfg.log_every > 0 && (b + 1) % static_cast<std::size_t>(cfg.log_every) == 0)
        observer({epoch, b + 1, batch.size(), lg.loss, lg.skipped});
    }
    if (!f.weights.allFinite())
      throw Error(ErrorCode::NonFinite, "weights became non-finite in epoch " + std::to_string(epoch));
    report.epoch_loss.push_back(entries > 0 ? loss_sum / static_cast<double>(entries) : 0.0);
    report.skipped.push_back(skipped);
    report.skipped_batches.push_back(skipped_batches);
    if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0)
      write_map(f, checkpoint_path(cfg.out_dir, epoch));
  }

  if (!cfg.out_dir.empty()) {
    report.final_map_path = cfg.out_dir / "map.smap";
    write_map(f, report.final_map_path);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.out_dir.empty()) write_run_manifest(cfg.out_dir, cfg, report);
  return {std::move(f), std::move(report)};
}

void write_run_manifest(const std::filesystem::path& dir, const TrainConfig& cfg,
                        const TrainReport& report) {
  nlohmann::ordered_json j;
  j["config"] = {{"epochs", cfg.epochs},
                 {"batch_size", cfg.batch_size},
                 {"pairs_per_group", cfg.pairs_per_group},
                 {"symmetry", cfg.symmetry},
                 {"out_dim", cfg.out_dim},
                 {"seed", cfg.seed},
                 {"lr", cfg.lr},
                 {"beta1", cfg.beta1},
                 {"beta2", cfg.beta2},
                 {"eps", cfg.eps},
                 {"checkpoint_every", cfg.checkpoint_every},
                 {"log_every", cfg.log_every}};
  j["epoch_loss"] = report.epoch_loss;
  j["skipped_entries"] = report.skipped;
  j["skipped_batches"] = report.skipped_batches;
  j["n_pairs"] = report.n_pairs;
  j["n_steps"] = report.n_steps;
  j["final_map"] = report.final_map_path.string();
  j["wall_seconds"] = report.wall_seconds;
  std::ofstream out(dir / "run_manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write run manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

}  // namespace structmap
