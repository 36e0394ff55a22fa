#pragma once

#include <cstddef>
#include <span>

namespace structmap {

/// Norms below this make the cosine distance undefined.
inline constexpr double kDegenerateNorm = 1e-12;

struct CosineResult {
  double value = 1.0;        // in [0, 2]
  bool degenerate = false;   // either input had norm < kDegenerateNorm
};

/// d(u, v) = 1 - u.v / (|u| |v|), clamped to [0, 2]. Degenerate inputs give
/// exactly 1.0 with the flag set. Sums are accumulated left to right.
CosineResult cosine_distance(std::span<const double> u, std::span<const double> v);

/// Same value given precomputed squared norms and dot product.
CosineResult cosine_from_parts(double dot, double sq_norm_u, double sq_norm_v) noexcept;

double dot(std::span<const double> u, std::span<const double> v) noexcept;
double squared_norm(std::span<const double> u) noexcept;

}  // namespace structmap
