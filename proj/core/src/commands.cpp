#include "posegen/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include "posegen/checkpoint.hpp"
#include "posegen/dataset_io.hpp"
#include "posegen/svg_plot.hpp"
#include "posegen/textio.hpp"

namespace posegen::io {

namespace fs = std::filesystem;

namespace {

std::string ensure_out_dir(const RunConfig& config) {
    const std::string dir = resolve_out_dir(config);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

void write_config_header(std::ofstream& out, const RunConfig& config) {
    for (const auto& [k, v] : config.to_key_values()) out << "# " << k << ' ' << v << '\n';
}

template <typename T>
vae::ModelParams<T> build_model(const RunConfig& config, std::int64_t obs_dim) {
    vae::ModelParams<T> model;
    model.encoder.latent_dim = config.train.latent_dim;
    model.decoder.latent_dim = config.train.latent_dim;
    model.decoder.obs_dim = obs_dim;
    model.decoder.extractor_widths = config.extractor_widths;
    model.decoder.fusion_width = config.fusion_width;
    Rng init_rng(config.seed_init);
    vae::init_model(model, init_rng);
    return model;
}

std::map<std::string, std::uint64_t> seed_map(const RunConfig& config) {
    return {{"scene", config.seed_scene},
            {"init", config.seed_init},
            {"train", config.seed_train},
            {"eval", config.seed_eval}};
}

template <typename T>
TrainResult run_train(const RunConfig& config, const std::string& dataset_path) {
    const scene::Dataset dataset = read_dataset(dataset_path);
    const std::int64_t obs_dim =
        static_cast<std::int64_t>(dataset.samples.front().obs.features.size());

    vae::ModelParams<T> model = build_model<T>(config, obs_dim);
    vae::TrainConfig train_cfg = config.train;
    train_cfg.seed = config.seed_train;
    const vae::LossLog log = vae::train(model, dataset, train_cfg);

    const std::string dir = ensure_out_dir(config);
    TrainResult result;
    result.checkpoint_path = (fs::path(dir) / "checkpoint.json").string();
    result.loss_log_path = (fs::path(dir) / "loss_log.txt").string();
    result.iterations = train_cfg.total_iterations;
    result.final_total = log.empty() ? 0.0 : log.back().total;

    CheckpointInfo info;
    info.precision_bits = static_cast<int>(sizeof(T) * 8);
    info.train_config = train_cfg;
    info.final_iteration = train_cfg.total_iterations;
    info.seeds = seed_map(config);
    save_checkpoint(result.checkpoint_path, model, info);

    std::ofstream out(result.loss_log_path);
    if (!out) throw IoError("cannot open " + result.loss_log_path + " for writing");
    write_config_header(out, config);
    out << "# columns: iteration beta_effective kl recon total\n";
    for (const vae::LossLogRow& row : log)
        out << row.iteration << ' ' << textio::g17(row.beta_effective) << ' '
            << textio::g17(row.kl) << ' ' << textio::g17(row.recon) << ' '
            << textio::g17(row.total) << '\n';
    if (!out) throw IoError("write failed for " + result.loss_log_path);
    return result;
}

template <typename T>
EvaluateResult run_evaluate(const RunConfig& config, const std::string& checkpoint_path,
                            const std::string& dataset_path, const std::string& manifest_path) {
    auto [model, info] = load_checkpoint<T>(checkpoint_path);
    const scene::Dataset dataset = read_dataset(dataset_path);
    const std::int64_t obs_dim =
        static_cast<std::int64_t>(dataset.samples.front().obs.features.size());
    if (obs_dim != model.decoder.obs_dim)
        throw ArchitectureMismatch("checkpoint expects " + std::to_string(model.decoder.obs_dim) +
                                   " observation features, dataset has " + std::to_string(obs_dim));

    std::optional<scene::SceneSpec> oracle;
    if (!manifest_path.empty()) oracle = read_scene_manifest(manifest_path);

    const auto& thresholds = config.recall.thresholds;
    EvaluateResult result;
    std::vector<std::vector<bool>> per_query_tp;
    std::vector<geo::Pose> estimates, ground_truths;

    Rng seed_gen(config.seed_eval);
    for (std::size_t q = 0; q < dataset.samples.size(); ++q) {
        const scene::Sample& sample = dataset.samples[q];
        const std::uint64_t query_seed = seed_gen.next_u64();
        const std::vector<geo::Pose> poses =
            vae::sample_posterior(model, sample.obs.features, config.sample_count, query_seed);

        QueryEvaluation qe;
        qe.query_id = static_cast<std::int64_t>(q);
        qe.sample_count = static_cast<std::int64_t>(poses.size());
        for (const auto& th : thresholds) {
            const std::int64_t within = eval::within_count(poses, sample.pose, th);
            qe.within.push_back(within);
            qe.tp.push_back(static_cast<double>(within) / static_cast<double>(poses.size()) >=
                            config.recall.gamma);
        }
        per_query_tp.push_back(qe.tp);

        estimates.push_back(eval::point_estimate(poses));
        ground_truths.push_back(sample.pose);

        if (oracle) {
            const scene::ModeSet modes = scene::true_mode_set(*oracle, sample.obs);
            const eval::ModeCoverage cov = eval::mode_coverage(poses, *oracle, modes,
                                                               config.mode_threshold,
                                                               config.mode_gamma);
            qe.mode_count = static_cast<std::int64_t>(modes.regions.size());
            qe.modes_covered = cov.covered;
            qe.mode_mass = cov.mass;
        }
        result.queries.push_back(std::move(qe));
    }

    result.aggregate_recall = eval::recall_aggregate(per_query_tp);
    const auto [mt, mr] = eval::median_errors(estimates, ground_truths);
    result.median_translation_error = mt;
    result.median_rotation_error_deg = mr;

    const std::string dir = ensure_out_dir(config);
    result.report_path = (fs::path(dir) / "recall_report.csv").string();
    result.coverage_path = oracle ? (fs::path(dir) / "mode_coverage.csv").string() : "";
    result.summary_path = (fs::path(dir) / "summary.txt").string();

    {
        std::ofstream out(result.report_path);
        if (!out) throw IoError("cannot open " + result.report_path + " for writing");
        write_config_header(out, config);
        out << "query_id,threshold_index,within_count,sample_count,tp\n";
        for (const QueryEvaluation& qe : result.queries)
            for (std::size_t t = 0; t < thresholds.size(); ++t)
                out << qe.query_id << ',' << t << ',' << qe.within[t] << ',' << qe.sample_count
                    << ',' << (qe.tp[t] ? 1 : 0) << '\n';
        char buf[16];
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            std::snprintf(buf, sizeof buf, "%.2f", result.aggregate_recall[t]);
            out << "aggregate," << t << ",,," << buf << '\n';
        }
        if (!out) throw IoError("write failed for " + result.report_path);
    }

    if (oracle) {
        std::ofstream out(result.coverage_path);
        if (!out) throw IoError("cannot open " + result.coverage_path + " for writing");
        write_config_header(out, config);
        out << "query_id,mode_count,modes_covered,mass\n";
        for (const QueryEvaluation& qe : result.queries) {
            out << qe.query_id << ',' << qe.mode_count << ',' << qe.modes_covered << ',';
            for (std::size_t k = 0; k < qe.mode_mass.size(); ++k) {
                if (k) out << ';';
                out << textio::g17(qe.mode_mass[k]);
            }
            out << '\n';
        }
        if (!out) throw IoError("write failed for " + result.coverage_path);
    }

    {
        std::ofstream out(result.summary_path);
        if (!out) throw IoError("cannot open " + result.summary_path + " for writing");
        write_config_header(out, config);
        out << "queries " << result.queries.size() << '\n';
        char buf[16];
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            std::snprintf(buf, sizeof buf, "%.2f", result.aggregate_recall[t]);
            out << "recall " << textio::g17(thresholds[t].first) << ':'
                << textio::g17(thresholds[t].second) << ' ' << buf << '\n';
        }
        out << "median_translation_error " << textio::g17(mt) << '\n';
        out << "median_rotation_error_deg " << textio::g17(mr) << '\n';
        if (!out) throw IoError("write failed for " + result.summary_path);
    }
    return result;
}

template <typename T>
SampleResult run_sample(const RunConfig& config, const std::string& checkpoint_path,
                        const QuerySpec& query, bool with_plot) {
    auto [model, info] = load_checkpoint<T>(checkpoint_path);

    std::vector<double> features = query.features;
    std::optional<geo::Pose> ground_truth;
    if (query.index >= 0) {
        if (query.dataset_path.empty())
            throw ConfigError("query index requires a dataset path");
        const scene::Dataset ds = read_dataset(query.dataset_path);
        if (query.index >= static_cast<std::int64_t>(ds.samples.size()))
            throw ConfigError("query index " + std::to_string(query.index) + " out of range (" +
                              std::to_string(ds.samples.size()) + " rows)");
        features = ds.samples[query.index].obs.features;
        ground_truth = ds.samples[query.index].pose;
    }
    if (features.empty()) throw ConfigError("no query: give a dataset index or feature values");
    if (static_cast<std::int64_t>(features.size()) != model.decoder.obs_dim)
        throw ArchitectureMismatch("query has " + std::to_string(features.size()) +
                                   " features, checkpoint expects " +
                                   std::to_string(model.decoder.obs_dim));

    SampleResult result;
    std::int64_t degenerate = 0;
    const std::vector<geo::Pose> poses =
        vae::sample_posterior(model, features, config.sample_count, config.seed_eval, &degenerate);
    result.sample_count = static_cast<std::int64_t>(poses.size());
    result.degenerate_draws = degenerate;

    const std::string dir = ensure_out_dir(config);
    result.sample_path = (fs::path(dir) / "samples.txt").string();
    {
        std::ofstream out(result.sample_path);
        if (!out) throw IoError("cannot open " + result.sample_path + " for writing");
        write_config_header(out, config);
        out << "# query";
        for (double f : features) out << ' ' << textio::g17(f);
        out << "\n# degenerate_draws " << degenerate << '\n';
        out << "# columns: rotation (9, row-major) translation (3)\n";
        for (const geo::Pose& p : poses) {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    if (r != 0 || c != 0) out << ' ';
                    out << textio::g17(p.rotation(r, c));
                }
            for (int k = 0; k < 3; ++k) out << ' ' << textio::g17(p.translation[k]);
            out << '\n';
        }
        if (!out) throw IoError("write failed for " + result.sample_path);
    }

    if (with_plot) {
        const std::vector<double> values =
            eval::translation_axis_values(poses, config.kde_axis);
        const std::vector<double> grid =
            eval::make_grid(values, static_cast<std::size_t>(config.kde_grid_points));
        const eval::DensityCurve curve = eval::kde_1d(values, grid);
        std::optional<double> gt_x;
        if (ground_truth) gt_x = ground_truth->translation[config.kde_axis];

        result.curve_path = (fs::path(dir) / "kde_curve.txt").string();
        result.plot_path = (fs::path(dir) / "kde_plot.svg").string();
        write_density_table(result.curve_path, curve, gt_x);
        write_density_svg(result.plot_path, curve, gt_x,
                          "translation axis " + std::to_string(config.kde_axis));
    }
    return result;
}

template <typename T>
BenchResult run_bench(const RunConfig& config, const std::string& checkpoint_path,
                      std::int64_t repetitions) {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    auto [model, info] = load_checkpoint<T>(checkpoint_path);
    std::vector<double> features(static_cast<std::size_t>(model.decoder.obs_dim), 0.5);

    // one untimed pass to warm allocators and caches
    vae::sample_posterior(model, features, config.sample_count, config.seed_eval);

    std::vector<double> times_ms;
    times_ms.reserve(repetitions);
    for (std::int64_t r = 0; r < repetitions; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        vae::sample_posterior(model, features, config.sample_count,
                              config.seed_eval + static_cast<std::uint64_t>(r));
        const auto t1 = std::chrono::steady_clock::now();
        times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }

    BenchResult result;
    result.sample_count = config.sample_count;
    result.repetitions = repetitions;
    double mean = 0;
    for (double t : times_ms) mean += t;
    mean /= static_cast<double>(times_ms.size());
    double var = 0;
    for (double t : times_ms) var += (t - mean) * (t - mean);
    var /= static_cast<double>(times_ms.size());
    result.mean_ms = mean;
    result.std_ms = std::sqrt(var);

    const std::string dir = ensure_out_dir(config);
    result.report_path = (fs::path(dir) / "bench.txt").string();
    std::ofstream out(result.report_path);
    if (!out) throw IoError("cannot open " + result.report_path + " for writing");
    write_config_header(out, config);
    out << "samples " << result.sample_count << '\n';
    out << "repetitions " << result.repetitions << '\n';
    out << "mean_ms " << textio::g17(result.mean_ms) << '\n';
    out << "std_ms " << textio::g17(result.std_ms) << '\n';
    if (!out) throw IoError("write failed for " + result.report_path);
    return result;
}

}  // namespace

GenerateResult cmd_generate(const RunConfig& config) {
    config.validate();
    const scene::SceneSpec spec =
        scene::build_tricolor_scene(config.seed_scene, config.scene_options);

    // split seeds derived from the scene seed, kept apart
    const scene::Dataset train =
        scene::generate_dataset(spec, config.n_train, config.spacing, config.seed_scene * 2 + 1,
                                "train");
    const scene::Dataset test =
        scene::generate_dataset(spec, config.n_test, config.spacing, config.seed_scene * 2 + 2,
                                "test");

    const std::string dir = ensure_out_dir(config);
    GenerateResult result;
    result.train_path = (fs::path(dir) / "dataset_train.txt").string();
    result.test_path = (fs::path(dir) / "dataset_test.txt").string();
    result.manifest_path = (fs::path(dir) / "scene_manifest.json").string();
    result.n_train = static_cast<std::int64_t>(train.samples.size());
    result.n_test = static_cast<std::int64_t>(test.samples.size());
    write_dataset(result.train_path, train);
    write_dataset(result.test_path, test);
    write_scene_manifest(result.manifest_path, spec);
    return result;
}

TrainResult cmd_train(const RunConfig& config, const std::string& dataset_path) {
    config.validate();
    if (config.precision_bits == 64) return run_train<double>(config, dataset_path);
    return run_train<float>(config, dataset_path);
}

EvaluateResult cmd_evaluate(const RunConfig& config, const std::string& checkpoint_path,
                            const std::string& dataset_path, const std::string& manifest_path) {
    config.validate();
    if (checkpoint_precision(checkpoint_path) == 64)
        return run_evaluate<double>(config, checkpoint_path, dataset_path, manifest_path);
    return run_evaluate<float>(config, checkpoint_path, dataset_path, manifest_path);
}

SampleResult cmd_sample(const RunConfig& config, const std::string& checkpoint_path,
                        const QuerySpec& query, bool with_plot) {
    config.validate();
    if (checkpoint_precision(checkpoint_path) == 64)
        return run_sample<double>(config, checkpoint_path, query, with_plot);
    return run_sample<float>(config, checkpoint_path, query, with_plot);
}

BenchResult cmd_bench(const RunConfig& config, const std::string& checkpoint_path,
                      std::int64_t repetitions) {
    config.validate();
    if (checkpoint_precision(checkpoint_path) == 64)
        return run_bench<double>(config, checkpoint_path, repetitions);
    return run_bench<float>(config, checkpoint_path, repetitions);
}

}  // namespace posegen::io
