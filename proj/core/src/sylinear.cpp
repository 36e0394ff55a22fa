#include "structmap/sylinear.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "structmap/error.hpp"
#include "structmap/parallel.hpp"

namespace structmap {

// ---------------------------------------------------------------------------
// Cosine distance

double dot(std::span<const double> u, std::span<const double> v) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
  return s;
}

double squared_norm(std::span<const double> u) noexcept { return dot(u, u); }

CosineResult cosine_from_parts(double dot_uv, double sq_norm_u, double sq_norm_v) noexcept {
  constexpr double kMinSq = kDegenerateNorm * kDegenerateNorm;
  if (!(sq_norm_u >= kMinSq) || !(sq_norm_v >= kMinSq)) return {1.0, true};
  // sqrt(a*a) == a exactly, so identical vectors give exactly 0.
  const double d = 1.0 - dot_uv / std::sqrt(sq_norm_u * sq_norm_v);
  return {std::clamp(d, 0.0, 2.0), false};
}

CosineResult cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error(ErrorCode::DimMismatch, "cosine_distance: sizes " + std::to_string(u.size()) +
                                            " and " + std::to_string(v.size()));
  return cosine_from_parts(dot(u, v), squared_norm(u), squared_norm(v));
}

// ---------------------------------------------------------------------------
// Map

namespace {

std::span<const double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  return {m.data() + c * m.rows(), static_cast<std::size_t>(m.rows())};
}

void check_input(const LinearMap& f, Eigen::Index size, const char* what) {
  if (size != f.in_dim())
    throw Error(ErrorCode::DimMismatch, std::string(what) + ": input has " +
                                            std::to_string(size) + " entries, map expects " +
                                            std::to_string(f.in_dim()));
}

}  // namespace

Eigen::VectorXd forward(const LinearMap& f, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_input(f, x.size(), "forward");
  return f.weights * x;
}

Eigen::VectorXd pair_vector(const LinearMap& f, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_input(f, x.size(), "pair_vector");
  check_input(f, y.size(), "pair_vector");
  return f.weights * x - f.weights * y;
}

double triplet_loss(double d_ap, double d_an) noexcept {
  const double top = std::max(d_ap, d_an);
  const double ea = std::exp(d_ap - top);
  const double eb = std::exp(d_an - top);
  return ea / (ea + eb);
}

Eigen::MatrixXd pair_inputs(const VectorStore& store, const std::vector<PairRows>& pairs) {
  Eigen::MatrixXd x(store.dim, static_cast<Eigen::Index>(pairs.size()));
  const auto count = store.count();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].row1 >= count || pairs[i].row2 >= count)
      throw Error(ErrorCode::RowOutOfRange, "pair references a row beyond the store");
    const auto a = store.row(pairs[i].row1);
    const auto b = store.row(pairs[i].row2);
    double* out = x.data() + static_cast<Eigen::Index>(i) * x.rows();
    for (std::size_t k = 0; k < a.size(); ++k)
      out[k] = static_cast<double>(a[k]) - static_cast<double>(b[k]);
  }
  return x;
}

namespace {

// Accumulates scale * d/du [d(u, v)] into out, where d is cosine distance.
// d/du = -(v - (u.v / |u|^2) u) / (|u| |v|)
void add_cosine_grad_u(std::span<const double> u, std::span<const double> v, double uv,
                       double uu, double vv, double scale, double* out) {
  const double inv = 1.0 / std::sqrt(uu * vv);
  const double proj = uv / uu;
  for (std::size_t k = 0; k < u.size(); ++k) out[k] -= scale * inv * (v[k] - proj * u[k]);
}

}  // namespace

LossGrad batch_loss_grad(const LinearMap& f, const Eigen::MatrixXd& anchor_inputs,
                         const Eigen::MatrixXd& positive_inputs,
                         const std::vector<std::size_t>& negative_index) {
  const Eigen::Index batch = anchor_inputs.cols();
  if (positive_inputs.cols() != batch)
    throw Error(ErrorCode::DimMismatch, "anchor and positive batches differ in length");
  check_input(f, anchor_inputs.rows(), "batch_loss_grad");
  check_input(f, positive_inputs.rows(), "batch_loss_grad");
  if (batch == 0 || negative_index.size() != static_cast<std::size_t>(batch))
    throw Error(ErrorCode::UnminedBatch, "batch has no negative assignment");
  for (const auto j : negative_index)
    if (j >= static_cast<std::size_t>(batch))
      throw Error(ErrorCode::UnminedBatch, "negative index out of range");

  const Eigen::MatrixXd va = f.weights * anchor_inputs;
  const Eigen::MatrixXd vp = f.weights * positive_inputs;
  const Eigen::Index m = f.out_dim();

  Eigen::MatrixXd ga = Eigen::MatrixXd::Zero(m, batch);
  Eigen::MatrixXd gp = Eigen::MatrixXd::Zero(m, batch);
  Eigen::MatrixXd gn = Eigen::MatrixXd::Zero(m, batch);
  std::vector<double> losses(static_cast<std::size_t>(batch), 0.0);
  std::vector<char> skip(static_cast<std::size_t>(batch), 0);

  std::vector<double> anchor_sq(static_cast<std::size_t>(batch));
  for (Eigen::Index i = 0; i < batch; ++i)
    anchor_sq[static_cast<std::size_t>(i)] = squared_norm(column(va, i));

  parallel_for(0, static_cast<std::size_t>(batch), [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(negative_index[i]);
    const auto u = column(va, ii);
    const auto v = column(vp, ii);
    const auto w = column(va, jj);
    const double uu = anchor_sq[i];
    const double vv = squared_norm(v);
    const double ww = anchor_sq[negative_index[i]];
    const double uv = dot(u, v);
    const double uw = dot(u, w);
    const auto ap = cosine_from_parts(uv, uu, vv);
    const auto an = cosine_from_parts(uw, uu, ww);
    if (ap.degenerate || an.degenerate) {
      skip[i] = 1;
      return;
    }
    const double loss = triplet_loss(ap.value, an.value);
    losses[i] = loss;
    // dL/d(dAP) = L(1 - L) = -dL/d(dAN)
    const double s = loss * (1.0 - loss);
    add_cosine_grad_u(u, v, uv, uu, vv, s, ga.data() + ii * m);
    add_cosine_grad_u(u, w, uw, uu, ww, -s, ga.data() + ii * m);
    add_cosine_grad_u(v, u, uv, vv, uu, s, gp.data() + ii * m);
    add_cosine_grad_u(w, u, uw, ww, uu, -s, gn.data() + ii * m);
  });

  LossGrad out;
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (skip[iu]) {
      ++out.skipped;
      continue;
    }
    total += losses[iu];
    ga.col(static_cast<Eigen::Index>(negative_index[iu])) += gn.col(i);
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  out.loss = total * inv_batch;
  out.grad = (ga * anchor_inputs.transpose() + gp * positive_inputs.transpose()) * inv_batch;
  return out;
}

LossGrad batch_loss_grad(const LinearMap& f, const Dataset& d, const TripletBatch& batch) {
  if (!batch.mined()) throw Error(ErrorCode::UnminedBatch, "batch has not been mined");
  if (d.store.dim != static_cast<std::uint32_t>(f.in_dim()))
    throw Error(ErrorCode::DimMismatch, "dataset dim " + std::to_string(d.store.dim) +
                                            " vs map input dim " + std::to_string(f.in_dim()));
  return batch_loss_grad(f, pair_inputs(d.store, batch.anchors),
                         pair_inputs(d.store, batch.positives), batch.negative_index);
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::zeros_like(const LinearMap& f, double lr, double beta1, double beta2,
                                double eps) {
  AdamState s;
  s.m1 = Eigen::MatrixXd::Zero(f.out_dim(), f.in_dim());
  s.m2 = Eigen::MatrixXd::Zero(f.out_dim(), f.in_dim());
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  s.check();
  return s;
}

void AdamState::check() const {
  if (!(lr > 0)) throw Error(ErrorCode::InvalidConfig, "adam.lr must be > 0");
  if (!(beta1 >= 0 && beta1 < 1)) throw Error(ErrorCode::InvalidConfig, "adam.beta1 must be in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) throw Error(ErrorCode::InvalidConfig, "adam.beta2 must be in [0, 1)");
  if (!(eps > 0)) throw Error(ErrorCode::InvalidConfig, "adam.eps must be > 0");
  if (step < 0) throw Error(ErrorCode::InvalidConfig, "adam.step must be >= 0");
}

std::pair<LinearMap, AdamState> adam_step(const LinearMap& f, const AdamState& s,
                                          const Eigen::MatrixXd& grad) {
  if (grad.rows() != f.weights.rows() || grad.cols() != f.weights.cols() ||
      s.m1.rows() != grad.rows() || s.m1.cols() != grad.cols() ||
      s.m2.rows() != grad.rows() || s.m2.cols() != grad.cols())
    throw Error(ErrorCode::DimMismatch, "adam_step: gradient, moments and weights differ in shape");

  AdamState next = s;
  next.step = s.step + 1;
  next.m1 = s.beta1 * s.m1 + (1.0 - s.beta1) * grad;
  next.m2 = s.beta2 * s.m2 + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const double t = static_cast<double>(next.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);

  LinearMap out = f;
  out.weights.array() -= s.lr * (next.m1.array() / c1) /
                         ((next.m2.array() / c2).sqrt() + s.eps);
  return {std::move(out), std::move(next)};
}

LinearMap init_map(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1)
    throw Error(ErrorCode::InvalidDims,
                "init_map: dims must be >= 1, got n=" + std::to_string(n) + " m=" + std::to_string(m));
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(n));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  LinearMap f;
  f.weights.resize(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) f.weights(r, c) = uniform(rng);
  return f;
}

// ---------------------------------------------------------------------------
// SMAP model file

namespace {
constexpr char kSmapMagic[4] = {'S', 'M', 'A', 'P'};
}

void write_map(const LinearMap& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(kSmapMagic, 4);
  detail::put_le(out, kSmapVersion);
  detail::put_le(out, static_cast<std::uint32_t>(f.in_dim()));
  detail::put_le(out, static_cast<std::uint32_t>(f.out_dim()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = f.weights;
  detail::put_le_array(out, std::span<const double>(row_major.data(),
                                                    static_cast<std::size_t>(row_major.size())));
  if (!out.flush()) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

LinearMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kSmapMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, path.string() + " is not an SMAP file");
  std::uint16_t version = 0;
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  if (!detail::get_le(in, version) || !detail::get_le(in, n) || !detail::get_le(in, m))
    throw Error(ErrorCode::CountMismatch, path.string() + ": truncated header");
  if (version != kSmapVersion)
    throw Error(ErrorCode::ParseError, path.string() + ": unsupported SMAP version " +
                                           std::to_string(version));
  if (n == 0 || m == 0) throw Error(ErrorCode::InvalidDims, path.string() + ": zero dimension");
  const auto expected = static_cast<std::uint64_t>(n) * m * sizeof(double);
  if (std::filesystem::file_size(path) != kSmapHeaderBytes + expected)
    throw Error(ErrorCode::CountMismatch, path.string() + ": payload size does not match header");

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major(m, n);
  if (!detail::get_le_array(in, std::span<double>(row_major.data(),
                                                  static_cast<std::size_t>(row_major.size()))))
    throw Error(ErrorCode::CountMismatch, path.string() + ": truncated payload");
  if (!row_major.allFinite()) throw Error(ErrorCode::NonFinite, path.string() + ": non-finite weight");
  LinearMap f;
  f.weights = row_major;
  return f;
}

}  // namespace structmap
