#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include <Eigen/Core>

#include "structmap/cosine.hpp"
#include "structmap/sampler.hpp"
#include "structmap/vecstore.hpp"

namespace structmap {

/// f(x) = W x with W of shape out_dim x in_dim. No bias: it cancels in every
/// pair vector.
struct LinearMap {
  Eigen::MatrixXd weights;

  Eigen::Index in_dim() const noexcept { return weights.cols(); }
  Eigen::Index out_dim() const noexcept { return weights.rows(); }
};

struct AdamState {
  std::int64_t step = 0;
  Eigen::MatrixXd m1;
  Eigen::MatrixXd m2;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Zero moments shaped like f.weights, with the given hyperparameters.
  static AdamState zeros_like(const LinearMap& f, double lr = 1e-3, double beta1 = 0.9,
                              double beta2 = 0.999, double eps = 1e-8);
  /// Throws InvalidConfig when a hyperparameter is out of range.
  void check() const;
};

Eigen::VectorXd forward(const LinearMap& f, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd pair_vector(const LinearMap& f, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& y);

/// Softmax triplet loss e^dAP / (e^dAP + e^dAN), evaluated stably.
double triplet_loss(double d_ap, double d_an) noexcept;

struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad;
  std::size_t skipped = 0;  // entries with a degenerate pair vector
};

/// Raw input differences x(row1) - x(row2) as the columns of an n x B matrix.
Eigen::MatrixXd pair_inputs(const VectorStore& store, const std::vector<PairRows>& pairs);

/// Mean softmax triplet loss of a mined batch and its analytic gradient with
/// respect to W. Input vectors are constants. Entries with any degenerate
/// pair vector contribute nothing and are counted in `skipped`.
LossGrad batch_loss_grad(const LinearMap& f, const Dataset& d, const TripletBatch& batch);

/// Same, on precomputed input differences (columns of anchor/positive inputs).
LossGrad batch_loss_grad(const LinearMap& f, const Eigen::MatrixXd& anchor_inputs,
                         const Eigen::MatrixXd& positive_inputs,
                         const std::vector<std::size_t>& negative_index);

/// One bias-corrected Adam update; returns updated copies.
std::pair<LinearMap, AdamState> adam_step(const LinearMap& f, const AdamState& s,
                                          const Eigen::MatrixXd& grad);

/// W ~ U[-1/sqrt(n), 1/sqrt(n)], deterministic in seed.
LinearMap init_map(int n, int m, std::uint64_t seed);

inline constexpr std::uint16_t kSmapVersion = 1;
inline constexpr std::size_t kSmapHeaderBytes = 14;

void write_map(const LinearMap& f, const std::filesystem::path& path);
LinearMap read_map(const std::filesystem::path& path);

}  // namespace structmap
