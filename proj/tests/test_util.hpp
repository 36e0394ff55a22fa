#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "structmap/vecstore.hpp"

namespace structmap::testing_util {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("structmap_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Small random but valid dataset: `groups` groups of `variants` sentences of
/// `len` tokens, optional function words at fixed positions per group.
inline Dataset random_dataset(std::mt19937_64& rng, int groups, int variants, int len, int dim,
                              bool with_function_words = true, bool constituency = false) {
  static const char* deps[] = {"nsubj", "dobj", "amod", "pobj", "det"};
  static const char* poses[] = {"NOUN", "VERB", "ADJ", "DET"};
  static const char* phrases[] = {"NP", "VP", "PP", "S"};
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::uniform_int_distribution<int> small(0, 3);
  std::bernoulli_distribution coin(0.2);

  Dataset d;
  d.has_dependency = true;
  d.has_constituency = constituency;
  d.store.dim = static_cast<std::uint32_t>(dim);
  std::uint64_t row = 0;
  std::int64_t sent = 0;
  for (int g = 0; g < groups; ++g) {
    std::vector<bool> function(static_cast<std::size_t>(len));
    for (auto&& f : function) f = with_function_words && coin(rng);
    for (int v = 0; v < variants; ++v, ++sent) {
      for (int p = 0; p < len; ++p) {
        TokenRecord t;
        t.group_id = g * 3 + 1;
        t.sent_id = sent * 2 + 5;
        t.variant = v;
        t.tok_idx = p;
        t.lex_id = small(rng) + 4 * small(rng);
        t.form = "w" + std::to_string(t.lex_id) + (p % 2 ? "\"q\\" : "é");
        t.pos = poses[small(rng)];
        t.is_function = function[static_cast<std::size_t>(p)];
        t.dep = deps[small(rng)];
        t.head_dep = deps[small(rng)];
        t.depth = small(rng);
        if (constituency) {
          const int n = 1 + small(rng);
          for (int k = 0; k < n; ++k) t.cpath.push_back(phrases[small(rng)]);
        }
        t.row = row++;
        d.tokens.push_back(t);
        for (int k = 0; k < dim; ++k) d.store.data.push_back(normal(rng));
      }
    }
  }
  d.reindex();
  return d;
}

}  // namespace structmap::testing_util
