#pragma once

#include <functional>

#include "sslab/tape.hpp"
#include "sslab/tensor.hpp"

namespace sslab {

/// Builds a scalar-valued graph from one input leaf.  The same builder is
/// replayed on fresh tapes for each finite-difference evaluation, so it must
/// be deterministic given the input value.
using ScalarFn = std::function<Var(Tape&, Var)>;

/// Max over coordinates of |analytic - numeric| / max(1e-8, |numeric|),
/// with numeric from central differences of step h.  Errors if the builder
/// does not produce a scalar or any evaluation is non-finite.
double grad_check(const ScalarFn& fn, const Tensor& point, double h);

}  // namespace sslab
