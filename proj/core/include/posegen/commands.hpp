#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posegen/run_config.hpp"

namespace posegen::io {

/// A sampling query: a test-dataset row index, or explicit feature values.
struct QuerySpec {
    std::int64_t index = -1;
    std::vector<double> features;
    std::string dataset_path;  // required with index
};

struct GenerateResult {
    std::string train_path;
    std::string test_path;
    std::string manifest_path;
    std::int64_t n_train = 0;
    std::int64_t n_test = 0;
};

/// Write train/test dataset files plus the scene manifest. Idempotent per seed.
GenerateResult cmd_generate(const RunConfig& config);

struct TrainResult {
    std::string checkpoint_path;
    std::string loss_log_path;
    std::int64_t iterations = 0;
    double final_total = 0;
};

/// Train on a dataset file; write a checkpoint and a loss log.
TrainResult cmd_train(const RunConfig& config, const std::string& dataset_path);

struct QueryEvaluation {
    std::int64_t query_id = 0;
    std::vector<std::int64_t> within;  // per threshold
    std::vector<bool> tp;              // per threshold
    std::int64_t sample_count = 0;
    std::int64_t mode_count = 0;
    std::int64_t modes_covered = 0;
    std::vector<double> mode_mass;
};

struct EvaluateResult {
    std::string report_path;
    std::string coverage_path;
    std::string summary_path;
    std::vector<double> aggregate_recall;  // per threshold, full precision
    double median_translation_error = 0;
    double median_rotation_error_deg = 0;
    std::vector<QueryEvaluation> queries;
};

/// Recall protocol, point-estimate medians and (with a scene manifest)
/// mode coverage over a test dataset.
EvaluateResult cmd_evaluate(const RunConfig& config, const std::string& checkpoint_path,
                            const std::string& dataset_path, const std::string& manifest_path);

struct SampleResult {
    std::string sample_path;
    std::string curve_path;  // two-column KDE table
    std::string plot_path;   // SVG, empty when plotting disabled
    std::int64_t sample_count = 0;
    std::int64_t degenerate_draws = 0;
};

/// Draw posterior samples for a query, write them in the dataset pose
/// format, and optionally plot a translation-axis KDE marginal.
SampleResult cmd_sample(const RunConfig& config, const std::string& checkpoint_path,
                        const QuerySpec& query, bool with_plot);

struct BenchResult {
    std::string report_path;
    double mean_ms = 0;
    double std_ms = 0;
    std::int64_t sample_count = 0;
    std::int64_t repetitions = 0;
};

/// Wall time of generating sample_count posterior samples, averaged over
/// repetitions.
BenchResult cmd_bench(const RunConfig& config, const std::string& checkpoint_path,
                      std::int64_t repetitions);

}  // namespace posegen::io
