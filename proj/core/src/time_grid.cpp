#include "dmft_sgd/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmft_sgd/errors.hpp"

namespace dmft_sgd {

TimeGrid TimeGrid::make(double T, double delta) {
    if (!(T > 0.0) || !(delta > 0.0) || !std::isfinite(T) || !std::isfinite(delta))
        throw InvalidInput("time grid needs positive finite T and delta");
    const double steps = std::round(T / delta);
    if (steps < 1.0) throw InvalidInput("time grid needs at least one step (T >= delta)");
    if (std::abs(steps * delta - T) > 1e-12 * std::max(1.0, T))
        throw InvalidInput("T = " + std::to_string(T) + " is not an integer multiple of delta = " +
                           std::to_string(delta));
    return TimeGrid{T, delta, static_cast<std::size_t>(steps)};
}

}  // namespace dmft_sgd
