#include <gtest/gtest.h>

#include <map>
#include <cstring>

#include "oracles.hpp"
#include "structmap/error.hpp"
#include "structmap/structeval.hpp"
#include "structmap/synthgen.hpp"

using namespace structmap;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.n_groups = 120;
  c.seed = 3;
  return c;
}

struct Agreement {
  double dep = 0;
  double lex = 0;
};

/// Brute-force 1-NN agreement over the first `n` content tokens as queries.
Agreement brute_agreement(const Dataset& d, std::size_t n) {
  const auto reps = oracle::represent_all(d, std::nullopt);
  Agreement a;
  std::size_t used = 0;
  for (std::size_t q = 0; q < d.tokens.size() && used < n; q += 3) {
    const auto v = oracle::closest(d, reps, q, Exclusion::Sentence);
    a.dep += d.tokens[q].dep == d.tokens[*v].dep;
    a.lex += d.tokens[q].lex_id == d.tokens[*v].lex_id;
    ++used;
  }
  a.dep /= static_cast<double>(used);
  a.lex /= static_cast<double>(used);
  return a;
}

}  // namespace

TEST(Synthgen, ShapeAndValidity) {
  const auto c = small_config();
  const auto d = generate_synthetic(c);
  EXPECT_EQ(d.tokens.size(), 120u * 4 * 8);
  EXPECT_EQ(d.store.dim, 128u);
  EXPECT_EQ(d.store.count(), d.tokens.size());
  EXPECT_EQ(d.groups.size(), 120u);
  EXPECT_TRUE(d.has_dependency);
  EXPECT_FALSE(d.has_constituency);
  EXPECT_TRUE(validate(d).empty());
  for (const auto& t : d.tokens) EXPECT_FALSE(t.is_function);
}

TEST(Synthgen, DeterministicUnderSeed) {
  const auto a = generate_synthetic(small_config());
  const auto b = generate_synthetic(small_config());
  EXPECT_TRUE(a.store.bit_equal(b.store));
  EXPECT_EQ(a.tokens, b.tokens);
  auto other = small_config();
  other.seed = 4;
  EXPECT_FALSE(generate_synthetic(other).store.bit_equal(a.store));
}

TEST(Synthgen, StructureSharedAcrossVariants) {
  const auto d = generate_synthetic(small_config());
  for (const auto& g : d.groups) {
    const auto& first = *d.sentence(g.sentence_ids[0]);
    for (const auto sid : g.sentence_ids) {
      const auto& s = *d.sentence(sid);
      ASSERT_EQ(s.size(), first.size());
      for (std::size_t k = 0; k < s.size(); ++k) {
        const auto& a = d.tokens[first[k]];
        const auto& b = d.tokens[s[k]];
        EXPECT_EQ(a.dep, b.dep);
        EXPECT_EQ(a.head_dep, b.head_dep);
        EXPECT_EQ(a.depth, b.depth);
        EXPECT_EQ(a.pos, b.pos);
      }
    }
  }
}

TEST(Synthgen, NoLexOrNoiseGivesIdenticalVariants) {
  auto c = small_config();
  c.noise_scale = 0;
  c.lex_scale = 0;
  const auto d = generate_synthetic(c);
  for (const auto& g : d.groups) {
    const auto& first = *d.sentence(g.sentence_ids[0]);
    for (const auto sid : g.sentence_ids) {
      const auto& s = *d.sentence(sid);
      for (std::size_t k = 0; k < s.size(); ++k) {
        const auto a = d.store.row(d.tokens[first[k]].row);
        const auto b = d.store.row(d.tokens[s[k]].row);
        EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size_bytes()), 0);
      }
    }
  }
}

TEST(Synthgen, NoStructureGivesChanceDepAgreement) {
  auto c = small_config();
  c.n_groups = 200;
  c.struct_scale = 0;
  const auto d = generate_synthetic(c);
  // Chance level is the sum of squared label frequencies.
  std::map<std::string, double> freq;
  for (const auto& t : d.tokens) freq[t.dep] += 1.0 / static_cast<double>(d.tokens.size());
  double chance = 0;
  for (const auto& [label, p] : freq) chance += p * p;
  EXPECT_NEAR(chance, 1.0 / c.n_dep_labels, 0.02);
  const auto a = brute_agreement(d, 1500);
  EXPECT_NEAR(a.dep, chance, 0.04);
}

TEST(Synthgen, DominantFactorDecidesNeighbours) {
  auto lexical = small_config();
  lexical.lex_scale = 10;
  const auto a = brute_agreement(generate_synthetic(lexical), 600);
  EXPECT_GT(a.lex, 0.9);

  auto structural = small_config();
  structural.lex_scale = 0.1;
  structural.struct_jitter = 0.1;
  const auto b = brute_agreement(generate_synthetic(structural), 600);
  EXPECT_GT(b.dep, 0.9);
}

TEST(Synthgen, DefaultConfigBaselineRegression) {
  const auto d = generate_synthetic(SynthConfig{});
  EvalConfig cfg;
  cfg.seed = 7;
  std::vector<NNQuery> queries;
  const auto r = nn_agreement(d, cfg, &queries);
  EXPECT_LT(*r.dep_edge, 0.4);
  EXPECT_GT(*r.lexical_match, 0.5);
  // Frozen from the brute-force oracle on the same 1000 queries.
  EXPECT_NEAR(*r.dep_edge, 0.274, 1e-12);
  EXPECT_NEAR(*r.lexical_match, 1.0, 1e-12);
  EXPECT_NEAR(*r.head_dep_edge, 0.105, 1e-12);
}

TEST(Synthgen, InvalidConfig) {
  const auto bad = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    try {
      generate_synthetic(c);
      return ErrorCode::IoError;
    } catch (const Error& e) {
      return e.code();
    }
  };
  EXPECT_EQ(bad([](SynthConfig& c) { c.n_dep_labels = 1; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](SynthConfig& c) { c.lex_scale = -1; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](SynthConfig& c) { c.variants_per_group = 0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](SynthConfig& c) { c.dim_out = 0; }), ErrorCode::InvalidConfig);
}
