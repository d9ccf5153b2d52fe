#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace gigpo {

// splitmix64 step; used to derive independent stream seeds from
// (run seed, purpose tag, indices) so every sampling site owns a stream
// that is a pure function of its coordinates. That makes parallel and
// sequential execution of the same config bit-identical.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a) { return splitmix64(a); }

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t a, Rest... rest) {
    return splitmix64(a ^ mix_seed(static_cast<std::uint64_t>(rest)...));
}

// Stream tags keep seeds for different purposes disjoint.
namespace stream {
inline constexpr std::uint64_t kRollout = 0x726f6c6cULL;   // action sampling during rollout
inline constexpr std::uint64_t kShuffle = 0x73687566ULL;   // minibatch shuffling
inline constexpr std::uint64_t kPolicyInit = 0x696e6974ULL;
inline constexpr std::uint64_t kLayout = 0x6c61796fULL;    // environment layout generation
inline constexpr std::uint64_t kFeature = 0x66656174ULL;   // state featurizer
inline constexpr std::uint64_t kNonce = 0x6e6f6e63ULL;
}  // namespace stream

// mt19937_64 is fully pinned by the standard; the distributions are not,
// so uniform/categorical draws below are hand-rolled from raw 64-bit output.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1) with 53 random bits
    double uniform_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n) via rejection sampling (no modulo bias)
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // inverse-CDF draw from a probability vector; returns the last index on
    // accumulated-rounding fallthrough
    int categorical(const std::vector<double>& probs) {
        double u = uniform_unit();
        double acc = 0.0;
        for (std::size_t a = 0; a < probs.size(); ++a) {
            acc += probs[a];
            if (u < acc) return static_cast<int>(a);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // standard normal via Box-Muller (both values used in turn)
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform_unit();
        } while (u1 <= 0.0);
        double u2 = uniform_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gigpo
