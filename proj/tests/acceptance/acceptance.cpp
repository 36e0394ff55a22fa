// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Frozen values were produced by the brute-force oracles in
// tests/oracles.hpp on this exact configuration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "oracles.hpp"
#include "structmap/cosine.hpp"
#include "structmap/parallel.hpp"
#include "structmap/sampler.hpp"
#include "structmap/structeval.hpp"
#include "structmap/sylinear.hpp"
#include "structmap/synthgen.hpp"
#include "structmap/trainer.hpp"
#include "structmap/vecstore.hpp"
#include "test_util.hpp"

using namespace structmap;

namespace {

// Frozen regression values: default synthetic dataset (seed 7), trainer
// defaults with batch_size 64 and seed 7, evaluation seed 7, 1000 queries,
// sentence exclusion.
constexpr double kBaseDep = 0.274;
constexpr double kBaseLex = 1.0;
constexpr double kTrainedDep = 1.0;
constexpr double kTrainedLex = 0.006;
constexpr double kProbeBase50 = 0.177;
constexpr double kProbeTrained50 = 0.737;
constexpr double kFrozenTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && out_.pass) {
      out_.pass = false;
      out_.detail = what;
    }
  }
  void note(const std::string& s) {
    if (out_.pass) out_.detail = s;
  }
  Outcome result() const { return out_; }

 private:
  Outcome out_;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::vector<oracle::Vec> columns(const Eigen::MatrixXd& m) {
  std::vector<oracle::Vec> out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.emplace_back(m.col(c).data(), m.col(c).data() + m.rows());
  return out;
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    LinearMap f{gaussian(rng, 3, 5)};
    const Eigen::MatrixXd xa = gaussian(rng, 5, 4), xp = gaussian(rng, 5, 4);
    const auto neg = mine_hard_negatives(f.weights * xa, {0, 1, 2, 3});
    const auto lg = batch_loss_grad(f, xa, xp, neg);
    const auto fd = oracle::fd_gradient(oracle::to_mat(f.weights), columns(xa), columns(xp), neg, 1e-6);
    double num = 0, den = 0;
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 5; ++k) {
        num += std::pow(lg.grad(r, k) - fd[r][k], 2);
        den += fd[r][k] * fd[r][k];
      }
    worst = std::max(worst, std::sqrt(num / den));
  }
  const double secs = seconds_since(t0);
  c.require(worst <= 1e-5, fmt("worst relative error %.3g > 1e-5", worst));
  c.require(secs < 5.0, fmt("took %.2f s", secs));
  c.note(fmt("100 instances, worst relative Frobenius error %.3g, %.2f s", worst, secs));
  return c.result();
}

Outcome loss_closed_forms() {
  Check c;
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  double worst_half = 0, worst_comp = 0;
  for (int t = 0; t < 1000; ++t) {
    const double a = u(rng), b = u(rng);
    worst_half = std::max(worst_half, std::abs(triplet_loss(a, a) - 0.5));
    worst_comp = std::max(worst_comp, std::abs(triplet_loss(a, b) + triplet_loss(b, a) - 1.0));
  }
  const double e2 = std::exp(2.0);
  const double lo = std::abs(triplet_loss(0, 2) - 1.0 / (1.0 + e2));
  const double hi = std::abs(triplet_loss(2, 0) - e2 / (e2 + 1.0));
  c.require(worst_half <= 1e-12, fmt("L(a,a) off by %.3g", worst_half));
  c.require(lo <= 1e-12 && hi <= 1e-12, fmt("L(0,2)/L(2,0) off by %.3g/%.3g", lo, hi));
  c.require(worst_comp <= 1e-12, fmt("complementarity off by %.3g", worst_comp));
  c.note(fmt("max deviations: L(a,a) %.2g, L(0,2) %.2g, L(a,b)+L(b,a) %.2g", worst_half, lo, worst_comp));
  return c.result();
}

Outcome miner_oracle() {
  Check c;
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<int> size(2, 64);
  std::uniform_int_distribution<int> coarse(-2, 2);
  std::normal_distribution<double> n(0.0, 1.0);
  int ties = 0, dups = 0;
  for (int t = 0; t < 1000; ++t) {
    const int B = size(rng);
    const int m = 1 + t % 6;
    const int kind = t % 3;  // 0: gaussian, 1: coarse integers (ties), 2: duplicated columns
    Eigen::MatrixXd a(m, B);
    for (int j = 0; j < B; ++j)
      for (int r = 0; r < m; ++r) a(r, j) = kind == 1 ? coarse(rng) : n(rng);
    if (kind == 2) {
      std::uniform_int_distribution<int> col(0, B - 1);
      for (int k = 0; k < B / 3 + 1; ++k) a.col(col(rng)) = a.col(col(rng)).eval();
    }
    std::uniform_int_distribution<int> grp(0, std::max(1, B / 2));
    std::vector<std::int64_t> groups(B);
    for (auto& g : groups) g = grp(rng);
    groups[0] = 100;
    const auto got = mine_hard_negatives(a, groups);
    const auto want = oracle::mine(columns(a), groups);
    if (got != want) {
      c.require(false, "mismatch on batch " + std::to_string(t) + " (size " + std::to_string(B) + ")");
      break;
    }
    for (int i = 0; i < B; ++i)
      c.require(groups[got[i]] != groups[i], "negative from the same group");
    if (kind == 1) ++ties;
    if (kind == 2) ++dups;
  }
  c.note("1000 batches (" + std::to_string(ties) + " with ties, " + std::to_string(dups) +
         " with duplicates) match brute force exactly");
  return c.result();
}

Outcome cosine_contract() {
  Check c;
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  double worst_scale = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto u = columns(gaussian(rng, 1 + t % 9, 1))[0];
    const auto v = columns(gaussian(rng, 1 + t % 9, 1))[0];
    const auto r = cosine_distance(u, v);
    c.require(r.value >= 0.0 && r.value <= 2.0, "distance outside [0,2]");
    auto su = u, sv = v;
    const double a = scale(rng), b = scale(rng);
    for (auto& x : su) x *= a;
    for (auto& x : sv) x *= b;
    worst_scale = std::max(worst_scale, std::abs(cosine_distance(su, sv).value - r.value));
    auto anti = u;
    const double k = scale(rng);
    for (auto& x : anti) x *= -k;
    c.require(std::abs(cosine_distance(u, anti).value - 2.0) <= 1e-12, "antiparallel distance != 2");
  }
  c.require(worst_scale <= 1e-12, fmt("scale invariance off by %.3g", worst_scale));
  c.require(cosine_distance(std::vector<double>{1, 2}, std::vector<double>{-2, -4}).value == 2.0,
            "[1,2] vs [-2,-4] != 2");
  for (const auto& zero : {std::vector<double>{0, 0, 0}, std::vector<double>{1e-13, 0, 0}}) {
    const auto r1 = cosine_distance(zero, std::vector<double>{1, 2, 3});
    const auto r2 = cosine_distance(std::vector<double>{1, 2, 3}, zero);
    c.require(r1.value == 1.0 && r1.degenerate && r2.value == 1.0 && r2.degenerate,
              "degenerate input not flagged as exactly 1.0");
  }
  c.note(fmt("10000 random pairs in [0,2], scale deviation %.2g, antiparallel 2, degenerate 1.0 flagged",
             worst_scale));
  return c.result();
}

// Shared by the disentanglement and probe criteria.
struct SynthRun {
  Dataset data;
  LinearMap map;
  double train_seconds = 0;
  double start_seconds = 0;
  std::chrono::steady_clock::time_point t0;
};

SynthRun& synth_run() {
  static SynthRun run = [] {
    SynthRun r;
    r.t0 = std::chrono::steady_clock::now();
    r.data = generate_synthetic(SynthConfig{});
    TrainConfig tc;
    tc.batch_size = 64;
    tc.seed = 7;
    r.map = train(r.data, tc).first;
    r.train_seconds = seconds_since(r.t0);
    return r;
  }();
  return run;
}

Outcome synthetic_disentanglement() {
  Check c;
  auto& run = synth_run();
  const auto& d = run.data;
  EvalConfig cfg;
  cfg.seed = 7;
  std::vector<NNQuery> qb, qt;
  const auto base = nn_agreement(d, cfg, &qb);
  cfg.transform = run.map;
  const auto trained = nn_agreement(d, cfg, &qt);
  const double secs = seconds_since(run.t0);

  // Spot-check retrieved rows against brute force on both arms.
  const auto raw = oracle::represent_all(d, std::nullopt);
  const auto mapped = oracle::represent_all(d, oracle::to_mat(run.map.weights));
  for (std::size_t i = 0; i < 100; ++i) {
    c.require(oracle::closest(d, raw, qb[i].query, Exclusion::Sentence) == qb[i].value,
              "baseline retrieval differs from brute force");
    c.require(oracle::closest(d, mapped, qt[i].query, Exclusion::Sentence) == qt[i].value,
              "transformed retrieval differs from brute force");
  }

  const double dep_gain = *trained.dep_edge - *base.dep_edge;
  const double lex_drop = *base.lexical_match - *trained.lexical_match;
  c.require(dep_gain >= 0.20, fmt("dep gain %.3f < 0.20", dep_gain));
  c.require(lex_drop >= 0.20, fmt("lexical drop %.3f < 0.20", lex_drop));
  c.require(std::abs(*base.dep_edge - kBaseDep) <= kFrozenTol &&
                std::abs(*base.lexical_match - kBaseLex) <= kFrozenTol,
            fmt("baseline dep/lex %.4f/%.4f differ from frozen", *base.dep_edge, *base.lexical_match));
  c.require(std::abs(*trained.dep_edge - kTrainedDep) <= kFrozenTol &&
                std::abs(*trained.lexical_match - kTrainedLex) <= kFrozenTol,
            fmt("trained dep/lex %.4f/%.4f differ from frozen", *trained.dep_edge,
                *trained.lexical_match));
  c.require(secs < 120.0, fmt("took %.1f s", secs));
  c.note(fmt("dep %.3f -> %.3f, lexical %.3f -> ", *base.dep_edge, *trained.dep_edge,
             *base.lexical_match) +
         fmt("%.3f, %.1f s", *trained.lexical_match, secs));
  return c.result();
}

Outcome nn_oracle() {
  Check c;
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    std::mt19937_64 rng(seed);
    auto d = testing_util::random_dataset(rng, 30 + 10 * static_cast<int>(seed), 3, 8, 4, true, true);
    std::uniform_int_distribution<std::size_t> pick(0, d.store.count() - 1);
    for (int k = 0; k < 50; ++k) {  // exact duplicates
      const auto a = pick(rng), b = pick(rng);
      for (std::uint32_t j = 0; j < d.store.dim; ++j) d.store.row(b)[j] = d.store.row(a)[j];
    }
    for (std::size_t r = 0; r < d.store.count(); r += 4)  // coarse rows: exact ties
      for (auto& x : d.store.row(r)) x = std::round(x);
    c.require(d.tokens.size() <= 2000, "dataset too large");
    for (const bool mapped : {false, true}) {
      std::optional<LinearMap> f;
      if (mapped) f = LinearMap{gaussian(rng, 3, 4)};
      const auto reps = oracle::represent_all(d, f ? std::optional(oracle::to_mat(f->weights)) : std::nullopt);
      const auto rep = represent(d, f);
      for (auto rule : {Exclusion::Self, Exclusion::Sentence, Exclusion::Group}) {
        EvalConfig cfg;
        cfg.exclusion = rule;
        cfg.n_queries = static_cast<int>(d.tokens.size());
        for (const auto& q : nn_search(d, rep, cfg)) {
          const auto want = oracle::closest(d, reps, q.query, rule);
          const bool same = want.has_value() == q.value.has_value() &&
                            (!want || d.tokens[*want].row == d.tokens[*q.value].row);
          c.require(same, "retrieval differs under exclusion " + to_string(rule));
          ++compared;
        }
      }
    }
  }
  c.note(std::to_string(compared) + " queries over 4 datasets x {raw, mapped} x {self, sentence, group}");
  return c.result();
}

Outcome purity() {
  Check c;
  c.require(cluster_purity({0, 0, 0, 1, 1}, {0, 0, 1, 1, 1}) == 0.8, "hand-counted example != 0.8");
  std::mt19937_64 rng(105);
  std::normal_distribution<double> n(0.0, 1.0);
  {
    const int N = 25;
    RowMatrix pts(N, 3);
    std::vector<int> labels;
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k < 3; ++k) pts(i, k) = n(rng);
      labels.push_back(i % 4);
    }
    c.require(cluster_purity(kmeans(pts, N, 100, 1e-6, 1).assignment, labels) == 1.0, "K=N purity != 1");
  }
  for (int t = 0; t < 100; ++t) {
    const int N = 20 + t;
    const int K = 1 + t % 9;
    RowMatrix pts(N, 4);
    std::vector<int> labels;
    std::map<int, int> freq;
    std::uniform_int_distribution<int> lab(0, 2 + t % 5);
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k < 4; ++k) pts(i, k) = n(rng);
      labels.push_back(lab(rng));
      ++freq[labels.back()];
    }
    int top = 0;
    for (const auto& [l, cnt] : freq) top = std::max(top, cnt);
    const double p = cluster_purity(kmeans(pts, K, 100, 1e-6, static_cast<std::uint64_t>(t)).assignment, labels);
    c.require(p + 1e-15 >= static_cast<double>(top) / N && p <= 1.0,
              "purity below majority frequency on dataset " + std::to_string(t));
  }
  c.note("5-point example 0.8, K=N 1.0, 100 random datasets >= majority frequency");
  return c.result();
}

Outcome pearson_cases() {
  Check c;
  const double a = pearson({1, 2, 3}, {2, 4, 6}).r;
  const double b = pearson({1, 2, 3}, {3, 2, 1}).r;
  const double d = pearson({1, 2, 3, 4}, {1, 3, 2, 4}).r;
  c.require(std::abs(a - 1.0) <= 1e-12, fmt("r=%.17g, want 1", a));
  c.require(std::abs(b + 1.0) <= 1e-12, fmt("r=%.17g, want -1", b));
  c.require(std::abs(d - 0.8) <= 1e-12, fmt("r=%.17g, want 0.8", d));
  c.note(fmt("r = %.15g / %.15g / %.15g", a, b, d));
  return c.result();
}

Outcome determinism() {
  Check c;
  testing_util::TempDir dir("accept_det");
  std::ofstream(dir / "c.json") << R"({"seed": 11, "synth": {"n_groups": 400},
    "train": {"epochs": 3, "batch_size": 64}, "eval": {"kmeans_ks": [10, 20]}})";
  const auto cfg = (dir / "c.json").string();
  std::ostringstream sink;
  const auto cli = [&](std::vector<std::string> args) { return cli::run(args, sink, sink); };
  c.require(cli({"synth", "--config", cfg, "--out", (dir / "data").string()}) == 0, "synth failed");
  std::vector<std::string> maps, reports;
  for (const char* threads : {"1", "4", "1", "3"}) {
    const auto tag = std::string("run") + std::to_string(maps.size());
    const auto out = (dir / tag).string();
    c.require(cli({"train", "--config", cfg, "--dataset", (dir / "data").string(), "--threads", threads,
                   "--out", out}) == 0,
              "train failed");
    c.require(cli({"eval", "--config", cfg, "--dataset", (dir / "data").string(), "--model",
                   out + "/map.smap", "--purity", "10,20", "--probe", "--probe-sizes", "50",
                   "--threads", threads, "--out", out + "/eval"}) == 0,
              "eval failed");
    maps.push_back(testing_util::slurp(out + "/map.smap"));
    reports.push_back(testing_util::slurp(out + "/eval/eval_report.json"));
  }
  for (std::size_t i = 1; i < maps.size(); ++i) {
    c.require(!maps[i].empty() && maps[i] == maps[0], "final W differs between runs");
    c.require(!reports[i].empty() && reports[i] == reports[0], "EvalReport differs between runs");
  }
  set_num_threads(0);
  c.note("4 CLI train+eval runs at --threads 1/4/1/3: identical map.smap and eval_report.json bytes");
  return c.result();
}

Outcome format_round_trips() {
  Check c;
  testing_util::TempDir dir("accept_fmt");
  std::mt19937_64 rng(106);
  for (int t = 0; t < 50; ++t) {
    const auto d = testing_util::random_dataset(rng, 1 + t % 5, 2 + t % 3, 1 + t % 7, 1 + t % 9, true, t % 2);
    const auto vpath = dir / ("v" + std::to_string(t) + ".svec");
    write_vectors(d.store, vpath);
    const auto back = read_vectors(vpath);
    c.require(back.bit_equal(d.store), "SVEC round trip not bit-exact");
    c.require(std::filesystem::file_size(vpath) == 18 + 4 * d.store.data.size(), "SVEC size arithmetic");
    LinearMap f{gaussian(rng, 1 + t % 4, 1 + t % 11)};
    const auto mpath = dir / ("m" + std::to_string(t) + ".smap");
    write_map(f, mpath);
    const auto g = read_map(mpath);
    c.require(g.weights.rows() == f.weights.rows() && g.weights.cols() == f.weights.cols() &&
                  std::memcmp(g.weights.data(), f.weights.data(), sizeof(double) * f.weights.size()) == 0,
              "SMAP round trip not bit-exact");
  }
  VectorStore s;
  s.dim = 4;
  s.data = {1, 2, 3, 4, 5, 6, 7, 8};
  write_vectors(s, dir / "small.svec");
  const auto size = std::filesystem::file_size(dir / "small.svec");
  c.require(size == 50, "dim=4, count=2 gives " + std::to_string(size) + " bytes, want 50");
  c.note("50 SVEC + 50 SMAP round trips bit-exact; dim=4,count=2 file is 50 bytes");
  return c.result();
}

Outcome probe() {
  Check c;
  auto& run = synth_run();
  const auto base = probe_fewshot(run.data, std::nullopt, {50}, 7);
  const auto mapped = probe_fewshot(run.data, run.map, {50}, 7);
  const double b = base.accuracy.at(50), m = mapped.accuracy.at(50);
  c.require(m > b, fmt("transformed %.3f <= untransformed %.3f", m, b));
  c.require(std::abs(b - kProbeBase50) <= kFrozenTol && std::abs(m - kProbeTrained50) <= kFrozenTol,
            fmt("accuracies %.4f/%.4f differ from frozen", b, m));
  c.note(fmt("n=50 accuracy %.3f -> %.3f (margin %.3f, majority %.3f)", b, m, m - b, base.majority));
  return c.result();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"loss closed forms", loss_closed_forms},
      {"miner oracle", miner_oracle},
      {"cosine contract", cosine_contract},
      {"synthetic disentanglement", synthetic_disentanglement},
      {"nn-search oracle", nn_oracle},
      {"purity", purity},
      {"pearson unit cases", pearson_cases},
      {"determinism", determinism},
      {"format round-trips", format_round_trips},
      {"probe", probe},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %-26s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
