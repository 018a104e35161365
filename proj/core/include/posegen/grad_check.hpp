#pragma once

#include <algorithm>
#include <cmath>

#include "posegen/autodiff.hpp"

namespace posegen::ad {

/// Central finite differences against the analytic gradient, per coordinate.
/// Relative error uses denominator max(|analytic|, |numeric|, 1e-8) and the
/// maximum over all coordinates is returned. The builder must be
/// deterministic: any noise is passed in as fixed inputs, never drawn inside.
/// Always runs in 64-bit. `analytic_override` substitutes an external
/// gradient (used by tests probing the checker itself).
inline double finite_difference_check(ParamStore<double>& params,
                                      const LossBuilder<double>& build,
                                      double step = 1e-5,
                                      const GradMap<double>* analytic_override = nullptr) {
    GradMap<double> analytic;
    if (analytic_override) {
        analytic = *analytic_override;
    } else {
        analytic = value_and_grad(params, build).second;
    }

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& e = params.entry(pi);
        const Tensor<double>& ga = analytic[pi].second;
        for (std::int64_t k = 0; k < e.value.size(); ++k) {
            const double saved = e.value[k];
            e.value[k] = saved + step;
            const double lp = evaluate(params, build);
            e.value[k] = saved - step;
            const double lm = evaluate(params, build);
            e.value[k] = saved;

            const double numeric = (lp - lm) / (2.0 * step);
            const double denom = std::max({std::abs(ga[k]), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::abs(ga[k] - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace posegen::ad
