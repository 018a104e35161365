#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "posegen/cvae.hpp"
#include "posegen/evaluate.hpp"
#include "posegen/scene.hpp"

namespace posegen::io {

/// Aggregated experiment settings: scene options, training hyperparameters,
/// recall spec, sampling size and independent seeds. Parsed from a flat
/// key = value config file with a schema check; every key can also be set
/// individually (CLI flags map onto the same keys).
struct RunConfig {
    std::string out_dir = "out";
    int precision_bits = 32;

    std::uint64_t seed_scene = 11;
    std::uint64_t seed_init = 21;
    std::uint64_t seed_train = 31;
    std::uint64_t seed_eval = 41;

    scene::SceneOptions scene_options;
    std::int64_t n_train = 120;
    std::int64_t n_test = 60;
    double spacing = 0;  // <= 0: trajectory length / n

    vae::TrainConfig train;
    std::vector<std::int64_t> extractor_widths = {16};
    std::int64_t fusion_width = 64;

    eval::RecallSpec recall;
    double mode_gamma = 0.05;
    eval::Threshold mode_threshold = {0.1, 10.0};

    std::int64_t sample_count = 1000;  // posterior samples per query
    int kde_axis = 0;
    std::int64_t kde_grid_points = 512;

    void validate() const;

    /// Stable (key, value) view of every setting, for embedding in artifacts.
    std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

/// Set one key; throws ConfigError for unknown keys or unparsable values.
void apply_config_kv(RunConfig& config, const std::string& key, const std::string& value);

/// Flat key = value file; '#' starts a comment. Unknown keys are errors.
RunConfig load_run_config(const std::string& path);

/// Output directory resolution: relative paths land under $POSEGEN_OUT_ROOT
/// when that variable is set.
std::string resolve_out_dir(const RunConfig& config);

}  // namespace posegen::io
