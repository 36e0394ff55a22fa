#include "structmap/structeval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "structmap/cosine.hpp"
#include "structmap/error.hpp"
#include "structmap/parallel.hpp"
#include "structmap/seed.hpp"

namespace structmap {

std::string to_string(Exclusion e) {
  switch (e) {
    case Exclusion::Self: return "self";
    case Exclusion::Sentence: return "sentence";
    case Exclusion::Group: return "group";
  }
  return "sentence";
}

Exclusion parse_exclusion(const std::string& s) {
  if (s == "self") return Exclusion::Self;
  if (s == "sentence") return Exclusion::Sentence;
  if (s == "group") return Exclusion::Group;
  throw Error(ErrorCode::InvalidConfig, "exclusion must be self, sentence or group, got '" + s + "'");
}

void EvalConfig::check() const {
  if (n_queries < 1) throw Error(ErrorCode::InvalidConfig, "eval.n_queries must be >= 1");
  if (hard_top_pos < 0) throw Error(ErrorCode::InvalidConfig, "eval.hard_top_pos must be >= 0");
  if (kmeans_iters < 1) throw Error(ErrorCode::InvalidConfig, "eval.kmeans_iters must be >= 1");
  if (!(kmeans_tol >= 0)) throw Error(ErrorCode::InvalidConfig, "eval.kmeans_tol must be >= 0");
  for (int k : kmeans_ks)
    if (k < 1) throw Error(ErrorCode::InvalidConfig, "eval.kmeans_ks entries must be >= 1");
  for (int n : probe_sizes)
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "eval.probe_sizes entries must be >= 1");
}

namespace {

std::vector<std::size_t> content_tokens(const Dataset& d) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.tokens.size(); ++i)
    if (!d.tokens[i].is_function) out.push_back(i);
  return out;
}

void require_dependency(const Dataset& d, const char* op) {
  if (!d.has_dependency)
    throw Error(ErrorCode::MissingAnnotations, std::string(op) + " needs dependency annotations");
}

std::span<const double> row_span(const RowMatrix& m, std::size_t r) {
  return {m.data() + r * static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.cols())};
}

bool excluded(const TokenRecord& q, const TokenRecord& c, std::size_t qi, std::size_t ci,
              Exclusion rule) {
  switch (rule) {
    case Exclusion::Self: return qi == ci;
    case Exclusion::Sentence: return q.sent_id == c.sent_id;
    case Exclusion::Group: return q.group_id == c.group_id;
  }
  return true;
}

std::vector<std::string> prefix(const std::vector<std::string>& path, std::size_t n) {
  return {path.begin(), path.begin() + static_cast<std::ptrdiff_t>(std::min(n, path.size()))};
}

}  // namespace

Representation represent(const Dataset& d, const std::optional<LinearMap>& transform) {
  Representation rep;
  rep.token_index = content_tokens(d);
  const auto n = rep.token_index.size();
  const std::uint32_t dim = d.store.dim;
  if (transform && transform->in_dim() != static_cast<Eigen::Index>(dim))
    throw Error(ErrorCode::DimMismatch, "map input dim " + std::to_string(transform->in_dim()) +
                                            " vs dataset dim " + std::to_string(dim));
  const Eigen::Index out_dim = transform ? transform->out_dim() : static_cast<Eigen::Index>(dim);
  rep.vectors.resize(static_cast<Eigen::Index>(n), out_dim);

  parallel_for(0, n, [&](std::size_t k) {
    const auto src = d.store.row(d.tokens[rep.token_index[k]].row);
    Eigen::VectorXd x(dim);
    for (std::uint32_t c = 0; c < dim; ++c) x[c] = static_cast<double>(src[c]);
    if (transform) {
      rep.vectors.row(static_cast<Eigen::Index>(k)) = (transform->weights * x).transpose();
    } else {
      rep.vectors.row(static_cast<Eigen::Index>(k)) = x.transpose();
    }
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Closest-word search

std::vector<NNQuery> nn_search(const Dataset& d, const Representation& rep, const EvalConfig& cfg,
                               const std::vector<std::string>& hard_pos) {
  cfg.check();
  const auto n = rep.token_index.size();
  std::vector<double> sq(n);
  for (std::size_t k = 0; k < n; ++k) sq[k] = squared_norm(row_span(rep.vectors, k));

  // Query pool: positions into rep, optionally restricted to the hard tags.
  const std::set<std::string> allowed(hard_pos.begin(), hard_pos.end());
  std::vector<std::size_t> pool;
  for (std::size_t k = 0; k < n; ++k) {
    if (allowed.empty() || allowed.count(d.tokens[rep.token_index[k]].pos)) pool.push_back(k);
  }
  std::vector<std::size_t> picked;
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x90e5));
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked),
              std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cfg.n_queries)), rng);

  std::vector<NNQuery> out(picked.size());
  parallel_for(0, picked.size(), [&](std::size_t qi) {
    const std::size_t qk = picked[qi];
    const std::size_t qt = rep.token_index[qk];
    const auto& q = d.tokens[qt];
    const auto qv = row_span(rep.vectors, qk);
    double best = std::numeric_limits<double>::infinity();
    std::uint64_t best_row = std::numeric_limits<std::uint64_t>::max();
    std::optional<std::size_t> best_tok;
    for (std::size_t ck = 0; ck < n; ++ck) {
      const std::size_t ct = rep.token_index[ck];
      const auto& c = d.tokens[ct];
      if (excluded(q, c, qt, ct, cfg.exclusion)) continue;
      const double dist = cosine_from_parts(dot(qv, row_span(rep.vectors, ck)), sq[qk], sq[ck]).value;
      if (dist < best || (dist == best && c.row < best_row)) {
        best = dist;
        best_row = c.row;
        best_tok = ct;
      }
    }
    out[qi] = {qt, best_tok, best_tok ? best : 0.0};
  });
  return out;
}

PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw Error(ErrorCode::LengthMismatch, "pearson: " + std::to_string(xs.size()) + " vs " +
                                               std::to_string(ys.size()) + " values");
  const std::size_t n = xs.size();
  if (n < 2) return {0.0, true};
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

std::map<std::string, double> pos_dep_entropy(const Dataset& d) {
  require_dependency(d, "hard_subset");
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& t : d.tokens)
    if (!t.is_function) ++counts[t.pos][t.dep];
  std::map<std::string, double> out;
  for (const auto& [pos, labels] : counts) {
    double total = 0.0;
    for (const auto& [_, c] : labels) total += static_cast<double>(c);
    double h = 0.0;
    for (const auto& [_, c] : labels) {
      const double p = static_cast<double>(c) / total;
      h -= p * std::log(p);
    }
    out[pos] = h;
  }
  return out;
}

std::vector<std::string> hard_subset(const Dataset& d, int top) {
  if (top < 1) throw Error(ErrorCode::InvalidConfig, "hard_subset: top must be >= 1");
  const auto entropy = pos_dep_entropy(d);
  std::vector<std::pair<std::string, double>> ranked(entropy.begin(), entropy.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(top); ++i)
    out.push_back(ranked[i].first);
  return out;
}

EvalReport nn_agreement(const Dataset& d, const EvalConfig& cfg, std::vector<NNQuery>* queries_out) {
  cfg.check();
  require_dependency(d, "nn_agreement");
  EvalReport report;
  report.transformed = cfg.transform.has_value();
  report.exclusion = cfg.exclusion;
  report.seed = cfg.seed;
  if (cfg.hard_top_pos > 0) report.hard_pos = hard_subset(d, cfg.hard_top_pos);

  const auto rep = represent(d, cfg.transform);
  auto queries = nn_search(d, rep, cfg, report.hard_pos);
  report.n_queries = queries.size();

  std::size_t dep = 0, head = 0, full = 0, l3 = 0, l2 = 0, lex = 0;
  std::vector<double> qdepth;
  std::vector<double> vdepth;
  for (const auto& q : queries) {
    if (!q.value) {
      ++report.n_skipped;
      continue;
    }
    const auto& a = d.tokens[q.query];
    const auto& b = d.tokens[*q.value];
    ++report.n_queries_used;
    dep += a.dep == b.dep;
    head += a.head_dep == b.head_dep;
    lex += a.lex_id == b.lex_id;
    full += a.cpath == b.cpath;
    l3 += prefix(a.cpath, 3) == prefix(b.cpath, 3);
    l2 += prefix(a.cpath, 2) == prefix(b.cpath, 2);
    qdepth.push_back(a.depth);
    vdepth.push_back(b.depth);
  }
  if (report.n_queries_used > 0) {
    const double used = static_cast<double>(report.n_queries_used);
    report.dep_edge = static_cast<double>(dep) / used;
    report.head_dep_edge = static_cast<double>(head) / used;
    report.lexical_match = static_cast<double>(lex) / used;
    if (d.has_constituency) {
      report.cpath_complete = static_cast<double>(full) / used;
      report.cpath_L3 = static_cast<double>(l3) / used;
      report.cpath_L2 = static_cast<double>(l2) / used;
    }
    const auto r = pearson(qdepth, vdepth);
    report.depth_pearson = r.r;
    report.depth_degenerate = r.degenerate;
  }
  if (queries_out) *queries_out = std::move(queries);
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["transformed"] = transformed;
  j["exclusion"] = to_string(exclusion);
  j["seed"] = seed;
  j["n_queries"] = n_queries;
  j["n_queries_used"] = n_queries_used;
  j["n_skipped"] = n_skipped;
  j["hard_pos"] = hard_pos;
  j["dep_edge"] = opt(dep_edge);
  j["head_dep_edge"] = opt(head_dep_edge);
  j["cpath_complete"] = opt(cpath_complete);
  j["cpath_L3"] = opt(cpath_L3);
  j["cpath_L2"] = opt(cpath_L2);
  j["depth_pearson"] = opt(depth_pearson);
  j["depth_degenerate"] = depth_degenerate;
  j["lexical_match"] = opt(lexical_match);
  nlohmann::ordered_json purity_j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : purity) purity_j[std::to_string(k)] = v;
  j["purity"] = purity_j;
  nlohmann::ordered_json probe_j = nlohmann::ordered_json::object();
  for (const auto& [n, v] : probe) probe_j[std::to_string(n)] = v;
  j["probe"] = probe_j;
  j["probe_majority"] = opt(probe_majority);
  return j.dump(2);
}

void write_nn_dump(const std::filesystem::path& path, const Dataset& d,
                   const std::vector<NNQuery>& queries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& q : queries) {
    const auto& a = d.tokens[q.query];
    nlohmann::ordered_json j;
    j["row"] = a.row;
    j["sent_id"] = a.sent_id;
    j["tok_idx"] = a.tok_idx;
    j["form"] = a.form;
    j["pos"] = a.pos;
    j["dep"] = a.dep;
    j["depth"] = a.depth;
    if (q.value) {
      const auto& b = d.tokens[*q.value];
      j["value_row"] = b.row;
      j["value_form"] = b.form;
      j["value_dep"] = b.dep;
      j["value_depth"] = b.depth;
      j["distance"] = q.distance;
    } else {
      j["value_row"] = nullptr;
    }
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// K-means purity

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const RowMatrix& points, int k, int max_iters, double tol, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "kmeans: K must be >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw Error(ErrorCode::InsufficientData, "kmeans: K=" + std::to_string(k) + " exceeds N=" +
                                                 std::to_string(n));
  const auto kk = static_cast<std::size_t>(k);
  const auto dim = points.cols();
  std::mt19937_64 rng(seed);

  KMeansResult res;
  res.centers.resize(k, dim);
  auto center = [&](std::size_t c) { return row_span(res.centers, c); };

  // k-means++ seeding
  std::vector<double> closest(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  res.centers.row(0) = points.row(static_cast<Eigen::Index>(first));
  for (std::size_t c = 1; c < kk; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], sq_dist(row_span(points, i), center(c - 1)));
      total += closest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= closest[pick];
        if (target < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    res.centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
  }

  res.assignment.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  for (int iter = 1; iter <= max_iters; ++iter) {
    res.iterations = iter;
    parallel_for(0, n, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < kk; ++c) {
        const double dd = sq_dist(row_span(points, i), center(c));
        if (dd < best) {
          best = dd;
          arg = static_cast<int>(c);
        }
      }
      res.assignment[i] = arg;
      dist[i] = best;
    });

    RowMatrix sums = RowMatrix::Zero(k, dim);
    std::vector<std::size_t> sizes(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(res.assignment[i]) += points.row(static_cast<Eigen::Index>(i));
      ++sizes[static_cast<std::size_t>(res.assignment[i])];
    }
    std::vector<char> taken(n, 0);
    double movement = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      Eigen::RowVectorXd next;
      if (sizes[c] > 0) {
        next = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
      } else {
        // Reseed to the point farthest from its own center.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!taken[i] && dist[i] > far_d) {
            far_d = dist[i];
            far = i;
          }
        }
        taken[far] = 1;
        next = points.row(static_cast<Eigen::Index>(far));
      }
      movement = std::max(movement, (next - res.centers.row(static_cast<Eigen::Index>(c))).norm());
      res.centers.row(static_cast<Eigen::Index>(c)) = next;
    }
    if (movement < tol) break;
  }

  // Final assignment against the last centers.
  parallel_for(0, n, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < kk; ++c) {
      const double dd = sq_dist(row_span(points, i), center(c));
      if (dd < best) {
        best = dd;
        arg = static_cast<int>(c);
      }
    }
    res.assignment[i] = arg;
  });
  return res;
}

double cluster_purity(const std::vector<int>& assignment, const std::vector<int>& labels) {
  if (assignment.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, "cluster_purity: assignment and labels differ in length");
  if (assignment.empty()) return 0.0;
  std::map<int, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[assignment[i]][labels[i]];
  std::size_t total = 0;
  for (const auto& [_, hist] : counts) {
    std::size_t best = 0;
    for (const auto& [__, c] : hist) best = std::max(best, c);
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(labels.size());
}

std::map<int, double> kmeans_purity(const Dataset& d, const EvalConfig& cfg,
                                    const VectorStore* projection) {
  cfg.check();
  require_dependency(d, "kmeans_purity");
  if (cfg.kmeans_ks.empty()) throw Error(ErrorCode::InvalidConfig, "eval.kmeans_ks is empty");

  std::vector<std::size_t> tokens = content_tokens(d);
  if (cfg.kmeans_max_points > 0 && tokens.size() > cfg.kmeans_max_points) {
    std::vector<std::size_t> kept;
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x9c1));
    std::sample(tokens.begin(), tokens.end(), std::back_inserter(kept), cfg.kmeans_max_points, rng);
    tokens = std::move(kept);
  }

  RowMatrix points;
  if (projection) {
    if (projection->count() != d.store.count())
      throw Error(ErrorCode::CountMismatch, "projection has " + std::to_string(projection->count()) +
                                                " rows, dataset has " +
                                                std::to_string(d.store.count()));
    points.resize(static_cast<Eigen::Index>(tokens.size()), projection->dim);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto src = projection->row(d.tokens[tokens[i]].row);
      for (std::uint32_t c = 0; c < projection->dim; ++c)
        points(static_cast<Eigen::Index>(i), c) = static_cast<double>(src[c]);
    }
  } else {
    const auto rep = represent(d, cfg.transform);
    std::unordered_map<std::size_t, std::size_t> pos;
    for (std::size_t k = 0; k < rep.token_index.size(); ++k) pos[rep.token_index[k]] = k;
    points.resize(static_cast<Eigen::Index>(tokens.size()), rep.vectors.cols());
    for (std::size_t i = 0; i < tokens.size(); ++i)
      points.row(static_cast<Eigen::Index>(i)) = rep.vectors.row(static_cast<Eigen::Index>(pos.at(tokens[i])));
  }
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double norm = points.row(i).norm();
    if (norm > kDegenerateNorm) points.row(i) /= norm;
  }

  std::map<std::string, int> label_ids;
  std::vector<int> labels;
  labels.reserve(tokens.size());
  for (const auto t : tokens) {
    const auto [it, _] = label_ids.emplace(d.tokens[t].dep, static_cast<int>(label_ids.size()));
    labels.push_back(it->second);
  }

  std::map<int, double> out;
  for (const int k : cfg.kmeans_ks) {
    const auto res = kmeans(points, k, cfg.kmeans_iters, cfg.kmeans_tol,
                            derive_seed(cfg.seed, 0x6e4, static_cast<std::uint64_t>(k)));
    out[k] = cluster_purity(res.assignment, labels);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Few-shot probe

namespace {

constexpr int kProbeIterations = 200;
constexpr double kProbeL2 = 1e-4;
constexpr double kProbeLr = 0.05;

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd inv_std;

  static Standardizer fit(const RowMatrix& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    const RowMatrix centered = x.rowwise() - s.mean;
    Eigen::RowVectorXd var = centered.array().square().colwise().mean();
    s.inv_std = var.unaryExpr([](double v) { return v > 1e-24 ? 1.0 / std::sqrt(v) : 1.0; });
    return s;
  }

  // Standardized features with a trailing constant column for the bias.
  RowMatrix apply(const RowMatrix& x) const {
    RowMatrix out(x.rows(), x.cols() + 1);
    out.leftCols(x.cols()) = ((x.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
    out.col(x.cols()).setOnes();
    return out;
  }
};

// Softmax regression weights (classes x features) trained by full-batch Adam.
LinearMap fit_probe(const RowMatrix& features, const std::vector<int>& labels, int classes,
                    std::uint64_t seed) {
  const auto n = features.rows();
  const auto dim = features.cols();
  LinearMap w;
  w.weights = Eigen::MatrixXd::Zero(classes, dim);
  // Small symmetric-breaking start keeps the optimisation deterministic.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1e-3);
  for (Eigen::Index r = 0; r < w.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < w.weights.cols(); ++c) w.weights(r, c) = normal(rng);

  AdamState adam = AdamState::zeros_like(w, kProbeLr);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;

  for (int it = 0; it < kProbeIterations; ++it) {
    Eigen::MatrixXd logits = features * w.weights.transpose();  // n x classes
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = logits.row(i).maxCoeff();
      logits.row(i) = (logits.row(i).array() - top).exp().matrix();
      logits.row(i) /= logits.row(i).sum();
    }
    Eigen::MatrixXd grad = (logits - onehot).transpose() * features / static_cast<double>(n);
    Eigen::MatrixXd penalty = 2.0 * kProbeL2 * w.weights;
    penalty.col(dim - 1).setZero();  // bias is not penalised
    grad += penalty;
    std::tie(w, adam) = adam_step(w, adam, grad);
  }
  return w;
}

}  // namespace

ProbeResult probe_fewshot(const Dataset& d, const std::optional<LinearMap>& transform,
                          const std::vector<int>& train_sizes, std::uint64_t seed) {
  require_dependency(d, "probe_fewshot");
  for (int n : train_sizes)
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "probe train sizes must be >= 1");
  const auto rep = represent(d, transform);
  const std::size_t total = rep.token_index.size();
  const std::size_t largest =
      train_sizes.empty() ? 0 : static_cast<std::size_t>(*std::max_element(train_sizes.begin(), train_sizes.end()));
  if (total < kProbeEvalSize + largest)
    throw Error(ErrorCode::InsufficientData,
                "probe needs " + std::to_string(kProbeEvalSize + largest) + " content tokens, have " +
                    std::to_string(total));

  std::map<std::string, int> label_ids;
  std::vector<int> labels(total);
  for (std::size_t k = 0; k < total; ++k) {
    const auto [it, _] =
        label_ids.emplace(d.tokens[rep.token_index[k]].dep, static_cast<int>(label_ids.size()));
    labels[k] = it->second;
  }
  const int classes = static_cast<int>(label_ids.size());

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0x960b));
  std::shuffle(order.begin(), order.end(), rng);
  const std::vector<std::size_t> eval_split(order.begin(), order.begin() + kProbeEvalSize);
  const std::vector<std::size_t> train_pool(order.begin() + kProbeEvalSize, order.end());

  auto gather = [&](const std::vector<std::size_t>& idx) {
    RowMatrix x(static_cast<Eigen::Index>(idx.size()), rep.vectors.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
      x.row(static_cast<Eigen::Index>(i)) = rep.vectors.row(static_cast<Eigen::Index>(idx[i]));
    return x;
  };
  const RowMatrix eval_x = gather(eval_split);

  ProbeResult result;
  {
    std::vector<std::size_t> freq(static_cast<std::size_t>(classes), 0);
    for (const auto k : train_pool) ++freq[static_cast<std::size_t>(labels[k])];
    const auto majority = static_cast<int>(std::max_element(freq.begin(), freq.end()) - freq.begin());
    std::size_t hits = 0;
    for (const auto k : eval_split) hits += labels[k] == majority;
    result.majority = static_cast<double>(hits) / static_cast<double>(eval_split.size());
  }

  for (const int size : train_sizes) {
    std::vector<std::size_t> train;
    std::mt19937_64 pick(derive_seed(seed, 0x7a1, static_cast<std::uint64_t>(size)));
    std::sample(train_pool.begin(), train_pool.end(), std::back_inserter(train),
                static_cast<std::size_t>(size), pick);
    const RowMatrix train_raw = gather(train);
    const auto scaler = Standardizer::fit(train_raw);
    std::vector<int> train_labels;
    for (const auto k : train) train_labels.push_back(labels[k]);
    const auto w = fit_probe(scaler.apply(train_raw), train_labels, classes,
                             derive_seed(seed, 0x1a17, static_cast<std::uint64_t>(size)));

    const Eigen::MatrixXd scores = scaler.apply(eval_x) * w.weights.transpose();
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      Eigen::Index arg = 0;
      scores.row(i).maxCoeff(&arg);
      hits += labels[eval_split[static_cast<std::size_t>(i)]] == static_cast<int>(arg);
    }
    result.accuracy[size] = static_cast<double>(hits) / static_cast<double>(eval_split.size());
  }
  return result;
}

}  // namespace structmap
