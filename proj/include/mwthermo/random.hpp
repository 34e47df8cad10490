#pragma once

// Seeded normal deviates that are bit-reproducible across standard libraries:
// std::mt19937_64 (fully specified by the standard), 53-bit uniforms, and the
// Marsaglia polar transform instead of std::normal_distribution.

#include <cstdint>
#include <random>

namespace mwthermo {

class NormalGenerator
{
public:
    explicit NormalGenerator(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal deviate.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace mwthermo
