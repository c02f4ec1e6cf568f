#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace gfarfe {

/// Counter-based pseudo-random stream. Every stream is keyed by
/// (seed, run index, purpose tag), so substreams are independent of
/// how much randomness any other stream consumed. Draws are pure
/// 64-bit integer mixing, identical across platforms and runs.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t run, std::string_view tag);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random mantissa bits.
    double next_double();
    /// Standard normal (Box-Muller, caches the spare draw).
    double next_normal();
    /// Gamma(shape, 1), shape > 0.
    double next_gamma(double shape);
    /// Uniform integer in {0, ..., n-1}, n >= 1, rejection-sampled.
    std::uint32_t next_below(std::uint32_t n);
    /// Symmetric Dirichlet(concentration) of the given dimension.
    std::vector<double> next_dirichlet(double concentration, int dim);
    /// Index into a nonnegative weight vector, proportional sampling.
    int next_categorical(const std::vector<double>& weights);

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer; also used for hashing tags and content digests.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over a byte string; used for determinism hashes of outputs.
std::uint64_t fnv1a(std::string_view bytes);

} // namespace gfarfe
