#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "posegen/autodiff.hpp"
#include "posegen/rng.hpp"

namespace posegen::ad {

/// Stack of linear layers: widths[i] -> widths[i+1], ReLU after every layer
/// except the last. Parameter names are "<prefix>.fc<k>.w" / ".b"; weights
/// are stored [in x out] so batched inputs multiply as rows.
struct MlpSpec {
    std::string prefix;
    std::vector<std::int64_t> widths;

    std::int64_t layer_count() const {
        return static_cast<std::int64_t>(widths.size()) - 1;
    }
    std::string weight_name(std::int64_t k) const {
        return prefix + ".fc" + std::to_string(k) + ".w";
    }
    std::string bias_name(std::int64_t k) const {
        return prefix + ".fc" + std::to_string(k) + ".b";
    }
};

/// Uniform init in +-sqrt(6/(fan_in+fan_out)); biases zero. Draw order is
/// row-major per layer, so a fixed seed gives identical weights in either
/// precision (values are drawn in double, then cast).
template <typename T>
void init_mlp(ParamStore<T>& store, const MlpSpec& spec, Rng& rng) {
    for (std::int64_t k = 0; k < spec.layer_count(); ++k) {
        const std::int64_t fan_in = spec.widths[k];
        const std::int64_t fan_out = spec.widths[k + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor<T> w(fan_in, fan_out);
        for (std::int64_t i = 0; i < w.size(); ++i)
            w[i] = static_cast<T>(rng.uniform(-bound, bound));
        store.add(spec.weight_name(k), std::move(w), /*decay=*/true);
        store.add(spec.bias_name(k), Tensor<T>(1, fan_out), /*decay=*/false);
    }
}

/// Forward pass: alternating affine + ReLU, final layer affine only.
template <typename T>
Var mlp_forward(Graph<T>& g, const MlpSpec& spec, Var input) {
    Var x = input;
    for (std::int64_t k = 0; k < spec.layer_count(); ++k) {
        x = g.add_rowvec(g.matmul(x, g.param(spec.weight_name(k))),
                         g.param(spec.bias_name(k)));
        if (k + 1 < spec.layer_count()) x = g.relu(x);
    }
    return x;
}

}  // namespace posegen::ad
