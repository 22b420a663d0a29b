#pragma once

#include <cstdint>
#include <random>

#include "goar/common.hpp"

namespace goar {

using Rng = std::mt19937_64;

// Derives an independent stream seed from (base, stream) with a splitmix64
// finalizer, so per-sample / per-level randomness never depends on the order
// in which work is scheduled.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

Vector standard_normal(Rng& rng, Index dim);

// Uniform direction on the unit sphere in R^dim.
Vector unit_sphere(Rng& rng, Index dim);

}  // namespace goar
