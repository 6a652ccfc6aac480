#include "amdnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "amdnet/errors.hpp"
#include "amdnet/rng.hpp"

namespace amdnet {

double finite_difference_check(const std::function<double()>& op,
                               const std::vector<Tensor*>& params,
                               const std::vector<const Tensor*>& analytic,
                               const FdOptions& opts) {
    if (params.size() != analytic.size()) {
        throw ValidationError("finite_difference_check: params/analytic count mismatch");
    }
    Rng rng(opts.seed);
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& t = *params[p];
        const Tensor& g = *analytic[p];
        if (!t.same_shape(g)) {
            throw ValidationError("finite_difference_check: gradient shape mismatch at param " +
                                  std::to_string(p));
        }
        std::vector<std::size_t> coords;
        if (t.size() <= opts.max_coords_per_tensor) {
            coords.resize(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) coords[i] = i;
        } else {
            coords.reserve(opts.max_coords_per_tensor);
            for (std::size_t i = 0; i < opts.max_coords_per_tensor; ++i) {
                coords.push_back(static_cast<std::size_t>(rng.uniform_int(t.size())));
            }
        }
        for (std::size_t idx : coords) {
            const double old = t[idx];
            t[idx] = old + opts.h;
            const double f_plus = op();
            t[idx] = old - opts.h;
            const double f_minus = op();
            t[idx] = old;
            const double fd = (f_plus - f_minus) / (2.0 * opts.h);
            const double err = std::abs(g[idx] - fd) / std::max(1.0, std::abs(g[idx]));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace amdnet
