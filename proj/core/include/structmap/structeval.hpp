#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "structmap/sylinear.hpp"
#include "structmap/vecstore.hpp"

namespace structmap {

/// Which candidates a query may not retrieve.
enum class Exclusion {
  Self,      // the query token itself
  Sentence,  // any token of the query's sentence
  Group,     // any token of the query's equivalence group
};

std::string to_string(Exclusion e);
Exclusion parse_exclusion(const std::string& s);  // throws InvalidConfig

inline constexpr int kDefaultHardTopPos = 5;
inline constexpr std::size_t kProbeEvalSize = 2000;

struct EvalConfig {
  std::optional<LinearMap> transform;  // absent: raw vectors
  int n_queries = 1000;
  Exclusion exclusion = Exclusion::Sentence;
  int hard_top_pos = 0;  // 0: all POS tags
  std::vector<int> kmeans_ks = {10, 20, 40, 80};
  int kmeans_iters = 100;
  double kmeans_tol = 1e-6;
  std::size_t kmeans_max_points = 15000;  // 0: cluster every content token
  std::vector<int> probe_sizes = {50, 100, 200, 500};
  std::uint64_t seed = 0;

  void check() const;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Content-token representations: row k holds the (optionally transformed)
/// vector of tokens[token_index[k]].
struct Representation {
  std::vector<std::size_t> token_index;
  RowMatrix vectors;
};

Representation represent(const Dataset& d, const std::optional<LinearMap>& transform);

/// One closest-word query.
struct NNQuery {
  std::size_t query = 0;                   // index into Dataset::tokens
  std::optional<std::size_t> value;        // retrieved token, if any candidate remained
  double distance = 0.0;
};

/// Runs the closest-word search: queries are sampled among content tokens
/// (restricted to `hard_pos` when non-empty), values range over every content
/// token passing the exclusion rule; ties go to the smallest store row.
std::vector<NNQuery> nn_search(const Dataset& d, const Representation& rep, const EvalConfig& cfg,
                               const std::vector<std::string>& hard_pos = {});

struct PearsonResult {
  double r = 0.0;
  bool degenerate = false;  // fewer than two points or zero variance
};

/// Sample Pearson correlation; throws LengthMismatch on unequal lengths.
PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys);

/// The `top` POS tags whose dependency-label distribution (over content
/// tokens) has the highest Shannon entropy, ties by tag order.
std::vector<std::string> hard_subset(const Dataset& d, int top);

/// Natural-log entropy of dep labels per POS tag, over content tokens.
std::map<std::string, double> pos_dep_entropy(const Dataset& d);

struct EvalReport {
  std::optional<double> dep_edge;
  std::optional<double> head_dep_edge;
  std::optional<double> cpath_complete;
  std::optional<double> cpath_L3;
  std::optional<double> cpath_L2;
  std::optional<double> depth_pearson;
  bool depth_degenerate = false;
  std::optional<double> lexical_match;
  std::size_t n_queries = 0;
  std::size_t n_queries_used = 0;
  std::size_t n_skipped = 0;
  std::vector<std::string> hard_pos;
  std::map<int, double> purity;
  std::map<int, double> probe;
  std::optional<double> probe_majority;
  bool transformed = false;
  Exclusion exclusion = Exclusion::Sentence;
  std::uint64_t seed = 0;

  std::string to_json() const;
};

/// Closest-word agreement rates. Throws MissingAnnotations without dependency
/// annotations; path metrics are filled only when the dataset has them.
EvalReport nn_agreement(const Dataset& d, const EvalConfig& cfg,
                        std::vector<NNQuery>* queries_out = nullptr);

/// Writes one JSON line per query (rows, labels, retrieved row, distance).
void write_nn_dump(const std::filesystem::path& path, const Dataset& d,
                   const std::vector<NNQuery>& queries);

struct KMeansResult {
  std::vector<int> assignment;
  RowMatrix centers;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding under the Euclidean objective.
/// Empty clusters are reseeded to the point farthest from its center.
KMeansResult kmeans(const RowMatrix& points, int k, int max_iters, double tol, std::uint64_t seed);

/// (1/N) * sum over clusters of the most frequent label count.
double cluster_purity(const std::vector<int>& assignment, const std::vector<int>& labels);

/// Purity of K-means clusters of unit-normalized content-token vectors
/// against dependency labels, for each K in cfg.kmeans_ks. When `projection`
/// is given its rows (aligned with the dataset store) are clustered instead.
std::map<int, double> kmeans_purity(const Dataset& d, const EvalConfig& cfg,
                                    const VectorStore* projection = nullptr);

struct ProbeResult {
  std::map<int, double> accuracy;  // train size -> held-out accuracy
  double majority = 0.0;           // majority-class accuracy on the same split
};

/// Few-shot multinomial logistic probe from token representation to dep
/// label: full-batch Adam, 200 iterations, L2 1e-4, evaluated on a fixed
/// held-out split of kProbeEvalSize content tokens.
ProbeResult probe_fewshot(const Dataset& d, const std::optional<LinearMap>& transform,
                          const std::vector<int>& train_sizes, std::uint64_t seed);

}  // namespace structmap
