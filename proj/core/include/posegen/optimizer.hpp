#pragma once

#include <cmath>

#include "posegen/autodiff.hpp"
#include "posegen/errors.hpp"

namespace posegen::ad {

struct OptimizerConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
        if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be non-negative");
        if (!(beta1 > 0 && beta1 < 1)) throw ConfigError("beta1 must be in (0,1)");
        if (!(beta2 > 0 && beta2 < 1)) throw ConfigError("beta2 must be in (0,1)");
        if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
    }
};

/// One AdamW step over every parameter: Adam with bias correction, then the
/// decoupled decay theta <- theta - lr*lambda*theta applied after the
/// adaptive step. Decay touches weight matrices only (entries flagged at
/// registration). Throws NonFiniteValue on NaN/Inf gradients.
template <typename T>
void adamw_step(ParamStore<T>& params, const GradMap<T>& grads, const OptimizerConfig& cfg) {
    if (grads.size() != params.size())
        throw ShapeMismatch("adamw_step: " + std::to_string(grads.size()) + " gradients for " +
                            std::to_string(params.size()) + " parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& e = params.entry(i);
        const auto& [gname, g] = grads[i];
        if (gname != e.name)
            throw ShapeMismatch("adamw_step: gradient order mismatch at " + e.name);
        if (!g.same_shape(e.value))
            throw ShapeMismatch("adamw_step: gradient shape " + g.shape_str() + " for " +
                                e.name + " " + e.value.shape_str());
        if (!g.all_finite()) throw NonFiniteValue("gradient of " + e.name);

        e.step += 1;
        const T b1 = static_cast<T>(cfg.beta1);
        const T b2 = static_cast<T>(cfg.beta2);
        const T lr = static_cast<T>(cfg.learning_rate);
        const T eps = static_cast<T>(cfg.epsilon);
        const T bc1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(e.step)));
        const T bc2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(e.step)));

        for (std::int64_t k = 0; k < e.value.size(); ++k) {
            e.m[k] = b1 * e.m[k] + (T(1) - b1) * g[k];
            e.v[k] = b2 * e.v[k] + (T(1) - b2) * g[k] * g[k];
            const T mhat = e.m[k] / bc1;
            const T vhat = e.v[k] / bc2;
            e.value[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        if (e.decay && cfg.weight_decay > 0) {
            const T f = T(1) - static_cast<T>(cfg.learning_rate * cfg.weight_decay);
            for (std::int64_t k = 0; k < e.value.size(); ++k) e.value[k] *= f;
        }
    }
}

}  // namespace posegen::ad
