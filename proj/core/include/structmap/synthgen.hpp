#pragma once

#include <cstdint>

#include "structmap/vecstore.hpp"

namespace structmap {

/// Factor model for synthetic equivalence-set datasets.
///
/// Every token vector is struct_scale*A*s + lex_scale*B*m + noise_scale*eps,
/// where s is a structural code shared by all variants of a group at one
/// position and m is a lexical code drawn per variant and position. A and B
/// are dense Gaussian mixing matrices fixed per dataset.
struct SynthConfig {
  int n_groups = 2000;
  int variants_per_group = 4;
  int sent_len = 8;
  int dim_struct = 10;
  int dim_lex = 40;
  int dim_out = 128;
  double struct_scale = 1.0;
  double lex_scale = 3.0;
  double noise_scale = 0.1;
  int n_dep_labels = 8;
  std::uint64_t seed = 7;

  // Discrete structure behind the codes. Each structural class owns one dep
  // label (class mod n_dep_labels) and a prototype code; positions jitter
  // around their class prototype. Lexical ids index prototype lexical codes.
  int n_struct_classes = 16;
  double struct_jitter = 0.5;
  int vocab_size = 400;
  double lex_jitter = 0.5;
  int depth_modulus = 4;

  /// Throws InvalidConfig naming the first offending field.
  void check() const;
};

Dataset generate_synthetic(const SynthConfig& cfg);

}  // namespace structmap
