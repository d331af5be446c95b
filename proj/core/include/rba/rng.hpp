#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rba {

// Derives an independent 64-bit seed for a named consumer of a root seed, so
// adding a new consumer never perturbs the draws of existing ones.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stream_name);

// mt19937_64 seeded from a named sub-stream of the root seed.
std::mt19937_64 make_rng(std::uint64_t root_seed, std::string_view stream_name);

// splitmix64 step, handy for stateless per-index pseudo-random values.
std::uint64_t splitmix64(std::uint64_t x);

// Uniform draw in [0, n). Unlike uniform_int_distribution, the algorithm is
// pinned here so seeded outputs are reproducible across standard libraries.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n);

// Uniform real in [0, 1) with 53 mantissa bits.
double unit_real(std::mt19937_64& rng);

} // namespace rba
