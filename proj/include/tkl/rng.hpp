#pragma once
// Counter-based random numbers: Philox4x32-10 (Salmon, Moraes, Dror, Shaw,
// "Parallel random numbers: as easy as 1, 2, 3", SC 2011).
//
// A keyed bijection of a 128-bit counter gives random access into the stream:
// a draw depends only on (seed, stream id, block index), never on which thread
// produced it or how many draws happened elsewhere. Normal variates come from
// Box-Muller, which consumes exactly one counter block per pair; nothing here
// rejects, so the draw -> counter map is static and replayable.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace tkl {

namespace philox {

constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;
constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> x,
                                     std::array<uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        uint64_t p0 = uint64_t(kMul0) * x[0];
        uint64_t p1 = uint64_t(kMul1) * x[2];
        x = {uint32_t(p1 >> 32) ^ x[1] ^ k[0], uint32_t(p1),
             uint32_t(p0 >> 32) ^ x[3] ^ k[1], uint32_t(p0)};
    }
    return x;
}

}  // namespace philox

// Substream naming rule: high 16 bits identify the consumer (suite or driver),
// low 48 bits index chains/replicas within it. Every parallel loop derives its
// per-chain stream through this split, which is what makes ensemble output
// independent of the thread count.
constexpr uint64_t stream_id(uint64_t domain, uint64_t index) {
    return (domain << 48) | (index & 0xFFFFFFFFFFFFull);
}

namespace domain {
constexpr uint64_t kTaming = 1;
constexpr uint64_t kContraction = 2;
constexpr uint64_t kW2Chains = 3;
constexpr uint64_t kW2Calibration = 4;
constexpr uint64_t kLsiPoints = 5;
constexpr uint64_t kMoments = 6;
constexpr uint64_t kOrderStarts = 7;
constexpr uint64_t kNoiseMC = 8;
constexpr uint64_t kSample = 9;
constexpr uint64_t kStarts = 10;
}  // namespace domain

class NoiseStream {
public:
    explicit NoiseStream(uint64_t seed, uint64_t stream = 0)
        : key_{uint32_t(seed), uint32_t(seed >> 32)}, stream_(stream), block_(0) {}

    uint64_t stream() const { return stream_; }
    uint64_t block_index() const { return block_; }
    void seek(uint64_t block) { block_ = block; }

    // Two independent N(0,1) draws from one counter block.
    std::pair<double, double> normal_pair() {
        auto w = philox::block({uint32_t(block_), uint32_t(block_ >> 32),
                                uint32_t(stream_), uint32_t(stream_ >> 32)},
                               key_);
        ++block_;
        double u1 = to_unit(w[0], w[1]);
        double u2 = to_unit(w[2], w[3]);
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        return {rad * std::cos(ang), rad * std::sin(ang)};
    }

    double normal() { return normal_pair().first; }

    // Uniform on (0,1), one block per draw.
    double uniform01() {
        auto w = philox::block({uint32_t(block_), uint32_t(block_ >> 32),
                                uint32_t(stream_), uint32_t(stream_ >> 32)},
                               key_);
        ++block_;
        return to_unit(w[0], w[1]);
    }

private:
    static double to_unit(uint32_t hi, uint32_t lo) {
        uint64_t u = (uint64_t(hi) << 32) | lo;
        // (0,1) strictly: offset by half an ulp so log() never sees 0
        return (double(u >> 11) + 0.5) * 0x1.0p-53;
    }

    std::array<uint32_t, 2> key_;
    uint64_t stream_;
    uint64_t block_;
};

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.39894228040143267793994605993438;
}

// Standard normal quantile: bisect to a short bracket, then Newton on the CDF.
// No rational-approximation magic constants; accuracy ~1e-15 over the range of
// interest (p in [1e-12, 1-1e-12]).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 20; ++i) {
        double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) {
        double step = (normal_cdf(x) - p) / normal_pdf(x);
        x -= step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    return x;
}

}  // namespace tkl
