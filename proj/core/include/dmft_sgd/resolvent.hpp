#pragma once

#include "dmft_sgd/kernel.hpp"

namespace dmft_sgd {

/// Resolvent of a causal Volterra kernel density A on the grid:
///
///   K^{t,s} = A^{t,s} + delta * sum_{s<r<t} A^{t,r} K^{r,s},   s < t,
///
/// solved by forward substitution in t for each s (left-endpoint rule). In
/// matrix form (I + delta K) = (I - delta A)^{-1}, so the right identity
///   K^{t,s} = A^{t,s} + delta * sum_{s<r<t} K^{t,r} A^{r,s}
/// holds as well, up to rounding.
///
/// Throws StructuralError unless A is a causal (Response) kernel with square blocks.
TwoTimeKernel volterra_resolvent(const TwoTimeKernel& A);

/// max over (t, s) of the entrywise residual of the left / right identity,
/// divided by max(1, max |K|).
double resolvent_left_residual(const TwoTimeKernel& A, const TwoTimeKernel& K);
double resolvent_right_residual(const TwoTimeKernel& A, const TwoTimeKernel& K);

}  // namespace dmft_sgd
