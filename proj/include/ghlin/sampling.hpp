#pragma once

#include <cstdint>
#include <random>

#include "ghlin/perturbation.hpp"
#include "ghlin/state_vector.hpp"

namespace ghlin {

/// Where random points live: dense vectors of a fixed dimension, or sparse
/// vectors supported in an index window.
struct SampleDomain {
  bool dense = true;
  std::size_t dimension = 0;
  IndexWindow window{};

  static SampleDomain dense_space(std::size_t n) { return {true, n, {}}; }
  static SampleDomain sparse_window(IndexWindow w) { return {false, 0, w}; }
};

/// Uniform direction in the coordinate cube, rescaled to a norm drawn
/// uniformly from [0, radius].
StateVector random_in_ball(const SampleDomain& domain, double radius, NormKind norm, std::mt19937_64& rng);

/// x + u with ||u|| = distance exactly (up to rounding), u random.
StateVector random_at_distance(const StateVector& x, const SampleDomain& domain, double distance,
                               NormKind norm, std::mt19937_64& rng);

}  // namespace ghlin
