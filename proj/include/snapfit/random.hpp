#pragma once
// Deterministic random source. Wraps the standard engine but maps raw bits to
// floats by hand, so sequences never depend on library-internal distribution
// state and every call consumes a fixed number of engine draws.

#include <cmath>
#include <cstdint>
#include <random>

namespace snapfit {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // strictly inside (0, 1); 53-bit grid shifted by half a cell
    double unit() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    double normal(double mean = 0.0, double stddev = 1.0) {
        const double u1 = unit(), u2 = unit();
        return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                          std::cos(6.28318530717958647692 * u2);
    }

    // uniform integer in [0, n)
    std::uint64_t index(std::uint64_t n) { return engine_() % n; }

private:
    std::mt19937_64 engine_;
};

} // namespace snapfit
