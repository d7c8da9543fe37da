#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace mffssr {

// Deterministic random source. The uniform/normal mappings are written out
// explicitly (instead of std:: distributions) so that streams are pinned to
// the mt19937_64 output sequence and checkpointed state restores exactly.
class Rng {
public:
    Rng() : engine_(0x9e3779b97f4a7c15ULL) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0.
    std::int64_t below(std::int64_t n) {
        return static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(n));
    }

    // Standard normal via Box-Muller. Consumes exactly two engine draws.
    double normal() {
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Textual state for checkpointing; restores bit-exact continuation.
    std::string save_state() const;
    void load_state(const std::string& state);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace mffssr
