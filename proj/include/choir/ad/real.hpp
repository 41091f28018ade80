#pragma once

// Scalar type of the differentiable stack. A second
// build with a wider type, in its own inline namespace, serves as a
// high-precision reference for gradient checks.
#ifndef CHOIR_REAL
#define CHOIR_REAL double
#endif
#ifndef CHOIR_PRECISION_NS
#define CHOIR_PRECISION_NS f64
#endif

namespace choir::inline CHOIR_PRECISION_NS {
using real = CHOIR_REAL;
}  // namespace choir::inline CHOIR_PRECISION_NS
