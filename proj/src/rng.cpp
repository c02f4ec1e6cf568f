#include "gfarfe/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gfarfe {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng::Rng(std::uint64_t seed, std::uint64_t run, std::string_view tag) {
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ mix64(run + 0x51ed270b8a0fd90bULL));
    k = mix64(k ^ fnv1a(tag));
    key_ = k;
}

std::uint64_t Rng::next_u64() {
    return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = next_double();
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double Rng::next_gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be > 0");
    if (shape < 1.0) {
        // Boost to shape+1, then scale back.
        const double g = next_gamma(shape + 1.0);
        double u = 0.0;
        while (u == 0.0) u = next_double();
        return g * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = next_normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = next_double();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::uint32_t Rng::next_below(std::uint32_t n) {
    if (n == 0) throw std::invalid_argument("next_below(0)");
    // Rejection to remove modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v < limit) return static_cast<std::uint32_t>(v % n);
    }
}

std::vector<double> Rng::next_dirichlet(double concentration, int dim) {
    if (!(concentration > 0.0)) throw std::invalid_argument("dirichlet concentration must be > 0");
    if (dim < 1) throw std::invalid_argument("dirichlet dimension must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(dim));
    if (dim == 1) {
        out[0] = 1.0;
        return out;
    }
    double total = 0.0;
    for (auto& v : out) {
        v = next_gamma(concentration);
        total += v;
    }
    for (auto& v : out) v /= total;
    return out;
}

int Rng::next_categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical weights must have positive sum");
    const double u = next_double() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

} // namespace gfarfe
