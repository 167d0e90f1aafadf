#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace fpps {

/// A reproducible random stream keyed by (seed, stream_id).
///
/// The engine is a 64-bit Mersenne Twister initialised through std::seed_seq
/// from the four 32-bit halves of the key, so the sequence is fully specified
/// by the C++ standard. Variates are produced with Boost.Random distributions,
/// whose algorithms are fixed across platforms (unlike <random>'s).
///
/// Streams are plain values: copying a stream copies its position. Parallel
/// work derives one child per work item with substream(k); the child depends
/// only on (seed, stream_id, k), never on scheduling.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Child stream number k. Deterministic in (seed, stream_id, k) and
    /// independent of how much of this stream has been consumed.
    RngStream substream(std::uint64_t k) const;

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    double uniform();
    double normal();
    /// Chi-square variate with real degrees of freedom dof > 0.
    double chi_squared(double dof);
    /// Beta(a, b) variate via a ratio of gammas.
    double beta(double a, double b);

    /// Fill with iid N(0,1), column-major order.
    void fill_normal(Eigen::Ref<Eigen::MatrixXd> out);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

/// SplitMix64 finaliser; used for deriving stream keys.
std::uint64_t mix64(std::uint64_t x);

}  // namespace fpps
