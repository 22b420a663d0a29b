#include "goar/rng.hpp"

#include <stdexcept>

namespace goar {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ (stream * 0xd1b54a32d192ed03ULL + 1));
}

Vector standard_normal(Rng& rng, Index dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(dim);
    for (Index i = 0; i < dim; ++i) z[i] = normal(rng);
    return z;
}

Vector unit_sphere(Rng& rng, Index dim) {
    if (dim < 1) throw std::invalid_argument("unit_sphere: dimension must be >= 1");
    for (;;) {
        Vector z = standard_normal(rng, dim);
        const double norm = z.norm();
        if (norm > 1e-300) return z / norm;
    }
}

}  // namespace goar
