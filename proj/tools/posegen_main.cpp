// Command-line surface for the pose-posterior toolkit: synthetic scene
// generation, CVAE training, recall evaluation, posterior sampling and
// latency measurement.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "posegen/commands.hpp"
#include "posegen/errors.hpp"

namespace {

using posegen::io::RunConfig;

struct CommonArgs {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

/// Registers --set key=value plus dedicated flags mirroring config keys.
void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key = value config file");
    cmd->add_option_function<std::vector<std::string>>(
        "--set",
        [&args](const std::vector<std::string>& kvs) {
            for (const std::string& kv : kvs) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw CLI::ValidationError("--set expects key=value, got '" + kv + "'");
                args.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
            }
        },
        "override any config key (repeatable)");

    auto mirror = [cmd, &args](const std::string& flag, const std::string& key,
                               const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&args, key](const std::string& v) { args.overrides.emplace_back(key, v); },
            help);
    };
    mirror("--out", "out_dir", "output directory (relative paths land under $POSEGEN_OUT_ROOT)");
    mirror("--precision", "precision", "parameter precision: 32 or 64");
    mirror("--seed-scene", "seed_scene", "scene/dataset seed");
    mirror("--seed-init", "seed_init", "weight initialization seed");
    mirror("--seed-train", "seed_train", "training loop seed");
    mirror("--seed-eval", "seed_eval", "evaluation/sampling seed");
    mirror("--n-train", "n_train", "training samples");
    mirror("--n-test", "n_test", "test samples");
    mirror("--sigma-obs", "sigma_obs", "observation noise sigma");
    mirror("--iterations", "iterations", "training iterations");
    mirror("--batch-size", "batch_size", "minibatch size");
    mirror("--mc-train-samples", "mc_train_samples", "Monte Carlo reconstructions per pose");
    mirror("--latent-dim", "latent_dim", "latent dimension");
    mirror("--beta", "beta", "KL weight after warm-up");
    mirror("--learning-rate", "learning_rate", "AdamW learning rate");
    mirror("--weight-decay", "weight_decay", "decoupled weight decay");
    mirror("--sample-count", "sample_count", "posterior samples per query");
    mirror("--recall-gamma", "recall_gamma", "required sample ratio for recall");
}

RunConfig make_config(const CommonArgs& args) {
    RunConfig config;
    if (!args.config_path.empty()) config = posegen::io::load_run_config(args.config_path);
    for (const auto& [k, v] : args.overrides) posegen::io::apply_config_kv(config, k, v);
    config.validate();
    return config;
}

int exit_code_for(const posegen::Error& e) {
    const std::string& k = e.kind();
    if (k == "ConfigError") return 1;
    if (k == "NonFiniteValue" || k == "DegenerateRotation6D" || k == "DegenerateMean" ||
        k == "ExcessiveDegeneracy")
        return 3;
    return 2;  // data / parse / scene / architecture errors
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional-VAE camera pose posterior toolkit"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, sample_args, bench_args;

    CLI::App* gen = app.add_subcommand("generate", "write synthetic dataset files and manifest");
    add_common(gen, gen_args);

    CLI::App* train = app.add_subcommand("train", "train the pose generative model");
    add_common(train, train_args);
    std::string train_dataset;
    train->add_option("dataset", train_dataset, "training dataset file")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "recall protocol over a test dataset");
    add_common(evaluate, eval_args);
    std::string eval_checkpoint, eval_dataset, eval_manifest;
    evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
    evaluate->add_option("--dataset", eval_dataset, "test dataset file")->required();
    evaluate->add_option("--manifest", eval_manifest,
                         "scene manifest for the mode oracle (default: sibling of the dataset)");

    CLI::App* sample = app.add_subcommand("sample", "draw posterior samples for one query");
    add_common(sample, sample_args);
    std::string sample_checkpoint, sample_features, sample_dataset;
    std::int64_t sample_index = -1;
    bool sample_plot = false;
    sample->add_option("--checkpoint", sample_checkpoint, "checkpoint file")->required();
    sample->add_option("--index", sample_index, "query row in --dataset");
    sample->add_option("--dataset", sample_dataset, "dataset file for --index queries");
    sample->add_option("--features", sample_features, "explicit feature vector, comma-separated");
    sample->add_flag("--plot", sample_plot, "emit a KDE marginal plot (SVG + data table)");

    CLI::App* bench = app.add_subcommand("bench", "time posterior sample generation");
    add_common(bench, bench_args);
    std::string bench_checkpoint;
    std::int64_t bench_reps = 100;
    bench->add_option("--checkpoint", bench_checkpoint, "checkpoint file")->required();
    bench->add_option("--repetitions", bench_reps, "timing repetitions (default 100)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto r = posegen::io::cmd_generate(make_config(gen_args));
            std::cout << "wrote " << r.train_path << " (" << r.n_train << " rows)\n"
                      << "wrote " << r.test_path << " (" << r.n_test << " rows)\n"
                      << "wrote " << r.manifest_path << "\n";
        } else if (train->parsed()) {
            const auto r = posegen::io::cmd_train(make_config(train_args), train_dataset);
            std::cout << "wrote " << r.checkpoint_path << "\n"
                      << "wrote " << r.loss_log_path << "\n"
                      << "iterations " << r.iterations << ", final loss " << r.final_total
                      << "\n";
        } else if (evaluate->parsed()) {
            if (eval_manifest.empty()) {
                const auto sibling =
                    std::filesystem::path(eval_dataset).parent_path() / "scene_manifest.json";
                if (std::filesystem::exists(sibling)) eval_manifest = sibling.string();
            }
            const auto r = posegen::io::cmd_evaluate(make_config(eval_args), eval_checkpoint,
                                                     eval_dataset, eval_manifest);
            std::cout << "wrote " << r.report_path << "\n";
            if (!r.coverage_path.empty()) std::cout << "wrote " << r.coverage_path << "\n";
            std::cout << "wrote " << r.summary_path << "\n";
            for (std::size_t t = 0; t < r.aggregate_recall.size(); ++t) {
                char buf[16];
                std::snprintf(buf, sizeof buf, "%.2f", r.aggregate_recall[t]);
                std::cout << "recall[" << t << "] " << buf << "\n";
            }
            std::cout << "median errors " << r.median_translation_error << " / "
                      << r.median_rotation_error_deg << " deg\n";
        } else if (sample->parsed()) {
            posegen::io::QuerySpec query;
            query.index = sample_index;
            query.dataset_path = sample_dataset;
            if (!sample_features.empty()) {
                std::string item;
                std::istringstream in(sample_features);
                while (std::getline(in, item, ','))
                    query.features.push_back(std::stod(item));
            }
            const auto r = posegen::io::cmd_sample(make_config(sample_args), sample_checkpoint,
                                                   query, sample_plot);
            std::cout << "wrote " << r.sample_path << " (" << r.sample_count << " samples, "
                      << r.degenerate_draws << " degenerate draws)\n";
            if (!r.curve_path.empty())
                std::cout << "wrote " << r.curve_path << "\nwrote " << r.plot_path << "\n";
        } else if (bench->parsed()) {
            const auto r = posegen::io::cmd_bench(make_config(bench_args), bench_checkpoint,
                                                  bench_reps);
            std::cout << "generated " << r.sample_count << " samples x " << r.repetitions
                      << " repetitions: " << r.mean_ms << " +- " << r.std_ms << " ms\n";
        }
    } catch (const posegen::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
