/*
   Copyright 2026 The gwi Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Counter-based random streams. Every (seed, label, index, sub) tuple names an
// independent Philox4x32-10 stream, so replications, time steps and the two
// Wiener drivers of a limit path never share generator state.

#include <array>
#include <cstdint>
#include <limits>

namespace gwi {

/// Stream labels. Estimator-side and limit-side campaigns use disjoint salts.
enum class StreamLabel : std::uint64_t {
    Simulation = 0x5349'4d55'4c41'5445ULL,
    OneStep = 0x4f4e'4553'5445'5050ULL,
    LimitW = 0x4c49'4d49'5457'0001ULL,
    LimitWTilde = 0x4c49'4d49'5457'0002ULL,
    Test = 0x5445'5354'0000'0000ULL,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ splitmix64(v + 0x632BE59BD9B4E019ULL));
}

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). Satisfies
/// UniformRandomBitGenerator with 64-bit output; each 128-bit block yields two
/// outputs. The 64-bit stream id occupies the upper half of the counter and the
/// block index the lower half.
class Philox4x32 {
public:
    using result_type = std::uint64_t;

    Philox4x32(std::uint64_t key, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          stream_(stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 2) {
            refill();
            pos_ = 0;
        }
        return out_[pos_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    std::uint64_t block() const { return block_; }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

    void refill() {
        std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_),
                                         static_cast<std::uint32_t>(block_ >> 32),
                                         static_cast<std::uint32_t>(stream_),
                                         static_cast<std::uint32_t>(stream_ >> 32)};
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        out_[0] = (static_cast<std::uint64_t>(ctr[1]) << 32) | ctr[0];
        out_[1] = (static_cast<std::uint64_t>(ctr[3]) << 32) | ctr[2];
        ++block_;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> out_{};
    int pos_ = 2;
};

/// Independent stream for (seed, label, index, sub).
inline Philox4x32 make_stream(std::uint64_t seed, StreamLabel label, std::uint64_t index,
                              std::uint64_t sub = 0) {
    const std::uint64_t key = splitmix64(seed);
    const std::uint64_t stream =
        hash_combine(hash_combine(static_cast<std::uint64_t>(label), index), sub);
    return {key, stream};
}

}  // namespace gwi
