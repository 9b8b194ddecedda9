#pragma once

#include <cstddef>

namespace dmft_sgd {

/// Uniform grid 0, delta, ..., N*delta = T. All kernels and paths carry one
/// value per grid point, i.e. N + 1 entries.
struct TimeGrid {
    double T = 0.0;
    double delta = 0.0;
    std::size_t N = 0;

    /// Throws InvalidInput unless T, delta > 0, N = round(T/delta) >= 1 and
    /// N*delta reproduces T to 1e-12 (relative to max(1, T)).
    static TimeGrid make(double T, double delta);

    std::size_t points() const noexcept { return N + 1; }
    double time(std::size_t i) const noexcept { return static_cast<double>(i) * delta; }

    bool operator==(const TimeGrid&) const = default;
};

}  // namespace dmft_sgd
