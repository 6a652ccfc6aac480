#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "amdnet/tensor.hpp"

namespace amdnet {

struct FdOptions {
    double h = 1e-5;
    std::size_t max_coords_per_tensor = 64;  // larger tensors are sampled
    std::uint64_t seed = 0x5EEDULL;
};

/// Central-difference check of analytic gradients for a scalar-valued
/// closure. `params[i]` is perturbed in place while `op` is re-evaluated;
/// `analytic[i]` holds the gradient under test, shaped like the parameter.
/// Returns the max over checked coordinates of
/// |analytic - fd| / max(1, |analytic|).
double finite_difference_check(const std::function<double()>& op,
                               const std::vector<Tensor*>& params,
                               const std::vector<const Tensor*>& analytic,
                               const FdOptions& opts = {});

}  // namespace amdnet
