#include "rba/rng.hpp"

namespace rba {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : s) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stream_name) {
    return splitmix64(root_seed ^ fnv1a(stream_name));
}

std::mt19937_64 make_rng(std::uint64_t root_seed, std::string_view stream_name) {
    return std::mt19937_64(derive_seed(root_seed, stream_name));
}

std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    // Reject the low sliver so the modulo is exactly uniform.
    const std::uint64_t min = (-n) % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x < min);
    return x % n;
}

double unit_real(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace rba
