#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rpv {

// One Philox4x32-10 block.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

// Counter-based generator (Philox4x32-10). The key is the seed; the 128-bit
// counter is split into (stream_id, substream, block index), so distinct
// (seed, stream_id, substream) triples address disjoint parts of one
// keyed permutation and never overlap.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t substream = 0) noexcept
        : seed_(seed), stream_id_(stream_id), substream_(substream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint32_t substream() const noexcept { return substream_; }

    // Draws consumed so far.
    std::uint64_t position() const noexcept { return 2 * block_ - (buffered_ ? 1 : 0); }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint32_t substream_;
    std::uint32_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    bool buffered_ = false;
};

// Uniform on the open interval (0,1), 52-bit resolution.
double uniform_sample(RngStream& rng) noexcept;
// Exp(1).
double exponential_sample(RngStream& rng) noexcept;
// N(0,1) by inversion.
double normal_sample(RngStream& rng) noexcept;
// Positive stable law with Laplace transform exp(-s^alpha), 0 < alpha <= 1.
double positive_stable_sample(double alpha, RngStream& rng);

double std_normal_cdf(double x);
double std_normal_pdf(double x) noexcept;
double std_normal_quantile(double p);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double x, int df);
double student_t_quantile(double p, int df);
// Normal-mixture integral, composite Gauss-Legendre refined until converged.
double noncentral_t_cdf(double x, int df, double ncp);
// P(T > x), accurate in the upper tail.
double noncentral_t_sf(double x, int df, double ncp);
double noncentral_t_quantile(double p, int df, double ncp);

} // namespace rpv
