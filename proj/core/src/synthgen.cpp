#include "structmap/synthgen.hpp"

#include <Eigen/Dense>
#include <array>
#include <random>
#include <string>
#include <vector>

#include "structmap/error.hpp"
#include "structmap/parallel.hpp"
#include "structmap/seed.hpp"

namespace structmap {
namespace {

constexpr std::array<const char*, 12> kDepNames = {
    "nsubj", "dobj", "amod", "pobj", "advmod", "compound",
    "nummod", "conj", "appos", "nmod", "xcomp", "attr"};

constexpr std::array<const char*, 6> kPosTags = {"NOUN", "VERB", "ADJ", "ADV", "PROPN", "NUM"};

std::string dep_name(int label) {
  if (label < static_cast<int>(kDepNames.size())) return kDepNames[static_cast<std::size_t>(label)];
  return "dep" + std::to_string(label);
}

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

void require(bool ok, const char* field, const char* rule) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, std::string("synth.") + field + " " + rule);
}

}  // namespace

void SynthConfig::check() const {
  require(n_groups >= 0, "n_groups", "must be >= 0");
  require(variants_per_group >= 1, "variants_per_group", "must be >= 1");
  require(sent_len >= 1, "sent_len", "must be >= 1");
  require(dim_struct >= 1, "dim_struct", "must be >= 1");
  require(dim_lex >= 1, "dim_lex", "must be >= 1");
  require(dim_out >= 1, "dim_out", "must be >= 1");
  require(struct_scale >= 0, "struct_scale", "must be >= 0");
  require(lex_scale >= 0, "lex_scale", "must be >= 0");
  require(noise_scale >= 0, "noise_scale", "must be >= 0");
  require(n_dep_labels >= 2, "n_dep_labels", "must be >= 2");
  require(n_struct_classes >= n_dep_labels, "n_struct_classes", "must be >= n_dep_labels");
  require(struct_jitter >= 0, "struct_jitter", "must be >= 0");
  require(vocab_size >= 1, "vocab_size", "must be >= 1");
  require(lex_jitter >= 0, "lex_jitter", "must be >= 0");
  require(depth_modulus >= 1, "depth_modulus", "must be >= 1");
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.check();

  std::mt19937_64 global(derive_seed(cfg.seed, 0x5e7));
  const Eigen::MatrixXd mix_struct = gaussian_matrix(global, cfg.dim_out, cfg.dim_struct);
  const Eigen::MatrixXd mix_lex = gaussian_matrix(global, cfg.dim_out, cfg.dim_lex);
  const Eigen::MatrixXd struct_protos = gaussian_matrix(global, cfg.dim_struct, cfg.n_struct_classes);
  const Eigen::MatrixXd lex_protos = gaussian_matrix(global, cfg.dim_lex, cfg.vocab_size);

  // Each structural class can surface as one of two POS tags.
  std::vector<std::array<int, 2>> class_pos(static_cast<std::size_t>(cfg.n_struct_classes));
  {
    std::uniform_int_distribution<int> tag(0, static_cast<int>(kPosTags.size()) - 1);
    for (auto& p : class_pos) p = {tag(global), tag(global)};
  }

  const auto L = static_cast<std::size_t>(cfg.sent_len);
  const auto V = static_cast<std::size_t>(cfg.variants_per_group);
  const std::size_t tokens_per_group = L * V;
  const std::size_t total = static_cast<std::size_t>(cfg.n_groups) * tokens_per_group;

  Dataset d;
  d.has_dependency = true;
  d.has_constituency = false;
  d.store.dim = static_cast<std::uint32_t>(cfg.dim_out);
  d.store.data.resize(total * static_cast<std::size_t>(cfg.dim_out));
  d.tokens.resize(total);

  parallel_for(0, static_cast<std::size_t>(cfg.n_groups), [&](std::size_t g) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x9a0, g));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick_class(0, cfg.n_struct_classes - 1);
    std::uniform_int_distribution<int> pick_word(0, cfg.vocab_size - 1);
    std::bernoulli_distribution coin(0.5);

    std::vector<int> cls(L);
    std::vector<int> pos(L);
    std::vector<std::size_t> head(L);
    Eigen::MatrixXd struct_part(cfg.dim_out, static_cast<Eigen::Index>(L));
    for (std::size_t p = 0; p < L; ++p) {
      cls[p] = pick_class(rng);
      const auto& tags = class_pos[static_cast<std::size_t>(cls[p])];
      pos[p] = coin(rng) ? tags[0] : tags[1];
      head[p] = p == 0 ? 0 : std::uniform_int_distribution<std::size_t>(0, p - 1)(rng);
      Eigen::VectorXd s = struct_protos.col(cls[p]);
      for (Eigen::Index k = 0; k < s.size(); ++k) s[k] += cfg.struct_jitter * normal(rng);
      struct_part.col(static_cast<Eigen::Index>(p)) = cfg.struct_scale * (mix_struct * s);
    }

    Eigen::VectorXd m(cfg.dim_lex);
    for (std::size_t v = 0; v < V; ++v) {
      const auto sent_id = static_cast<std::int64_t>(g * V + v);
      for (std::size_t p = 0; p < L; ++p) {
        const std::size_t t = g * tokens_per_group + v * L + p;
        const int word = pick_word(rng);
        for (Eigen::Index k = 0; k < m.size(); ++k)
          m[k] = lex_protos(k, word) + cfg.lex_jitter * normal(rng);
        const Eigen::VectorXd lex_part = cfg.lex_scale * (mix_lex * m);

        auto row = d.store.row(t);
        for (int k = 0; k < cfg.dim_out; ++k) {
          const double x = struct_part(k, static_cast<Eigen::Index>(p)) + lex_part[k] +
                           cfg.noise_scale * normal(rng);
          row[static_cast<std::size_t>(k)] = static_cast<float>(x);
        }

        const int dep = cls[p] % cfg.n_dep_labels;
        TokenRecord& tok = d.tokens[t];
        tok.group_id = static_cast<std::int64_t>(g);
        tok.sent_id = sent_id;
        tok.variant = static_cast<std::int32_t>(v);
        tok.tok_idx = static_cast<std::int32_t>(p);
        tok.form = "w" + std::to_string(word);
        tok.lex_id = word;
        tok.pos = kPosTags[static_cast<std::size_t>(pos[p])];
        tok.is_function = false;
        tok.dep = dep_name(dep);
        tok.head_dep = p == 0 ? "root" : dep_name(cls[head[p]] % cfg.n_dep_labels);
        tok.depth = cls[p] % cfg.depth_modulus;
        tok.row = t;
      }
    }
  });

  d.reindex();
  return d;
}

}  // namespace structmap
