#pragma once

#include <random>

#include "spvc/data_model.hpp"

namespace spvc::test {

inline Coords random_points(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Coords out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({u(eng), u(eng)});
  return out;
}

inline Coords lattice(std::size_t cols, std::size_t rows, double step = 1.0) {
  Coords out;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.push_back({c * step, r * step});
  return out;
}

}  // namespace spvc::test
