#include "posegen/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "posegen/textio.hpp"

namespace posegen::io {

using nlohmann::json;

namespace {

json train_config_json(const vae::TrainConfig& c) {
    return {{"latent_dim", c.latent_dim},
            {"beta", c.beta},
            {"warmup_start", c.warmup_start},
            {"warmup_length", c.warmup_length},
            {"batch_size", c.batch_size},
            {"mc_train_samples", c.mc_train_samples},
            {"lambda_r", c.lambda_r},
            {"lambda_t", c.lambda_t},
            {"total_iterations", c.total_iterations},
            {"seed", c.seed},
            {"learning_rate", c.optimizer.learning_rate},
            {"weight_decay", c.optimizer.weight_decay},
            {"adam_beta1", c.optimizer.beta1},
            {"adam_beta2", c.optimizer.beta2},
            {"adam_epsilon", c.optimizer.epsilon}};
}

vae::TrainConfig train_config_from_json(const json& j) {
    vae::TrainConfig c;
    c.latent_dim = j.at("latent_dim").get<std::int64_t>();
    c.beta = j.at("beta").get<double>();
    c.warmup_start = j.at("warmup_start").get<std::int64_t>();
    c.warmup_length = j.at("warmup_length").get<std::int64_t>();
    c.batch_size = j.at("batch_size").get<std::int64_t>();
    c.mc_train_samples = j.at("mc_train_samples").get<std::int64_t>();
    c.lambda_r = j.at("lambda_r").get<double>();
    c.lambda_t = j.at("lambda_t").get<double>();
    c.total_iterations = j.at("total_iterations").get<std::int64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.optimizer.learning_rate = j.at("learning_rate").get<double>();
    c.optimizer.weight_decay = j.at("weight_decay").get<double>();
    c.optimizer.beta1 = j.at("adam_beta1").get<double>();
    c.optimizer.beta2 = j.at("adam_beta2").get<double>();
    c.optimizer.epsilon = j.at("adam_epsilon").get<double>();
    return c;
}

json int_list(const std::vector<std::int64_t>& w) {
    json a = json::array();
    for (auto v : w) a.push_back(v);
    return a;
}

std::vector<std::int64_t> int_list_from(const json& j) {
    std::vector<std::int64_t> w;
    for (const auto& v : j) w.push_back(v.get<std::int64_t>());
    return w;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path, const vae::ModelParams<T>& model,
                     const CheckpointInfo& info) {
    json j;
    j["format_version"] = info.format_version;
    j["precision"] = static_cast<int>(sizeof(T) * 8);
    j["final_iteration"] = info.final_iteration;
    j["seeds"] = info.seeds;
    j["train_config"] = train_config_json(info.train_config);

    json arch;
    arch["encoder"]["input_width"] = model.encoder.input_width;
    arch["encoder"]["hidden"] = int_list(model.encoder.hidden);
    arch["encoder"]["latent_dim"] = model.encoder.latent_dim;
    arch["decoder"]["obs_dim"] = model.decoder.obs_dim;
    arch["decoder"]["extractor_widths"] = int_list(model.decoder.extractor_widths);
    arch["decoder"]["fusion_width"] = model.decoder.fusion_width;
    arch["decoder"]["hidden"] = int_list(model.decoder.hidden);
    arch["decoder"]["latent_dim"] = model.decoder.latent_dim;
    j["architecture"] = arch;

    json params = json::array();
    for (std::size_t i = 0; i < model.store.size(); ++i) {
        const auto& e = model.store.entry(i);
        json p;
        p["name"] = e.name;
        p["shape"] = json::array({e.value.rows(), e.value.cols()});
        p["decay"] = e.decay;
        json data = json::array();
        for (std::int64_t k = 0; k < e.value.size(); ++k)
            data.push_back(textio::hexfloat(static_cast<double>(e.value[k])));
        p["data"] = std::move(data);
        params.push_back(std::move(p));
    }
    j["params"] = std::move(params);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

}  // namespace

int checkpoint_precision(const std::string& path) {
    const json j = read_json(path);
    try {
        return j.at("precision").get<int>();
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

template <typename T>
std::pair<vae::ModelParams<T>, CheckpointInfo> load_checkpoint(const std::string& path) {
    const json j = read_json(path);
    try {
        CheckpointInfo info;
        info.format_version = j.at("format_version").get<int>();
        if (info.format_version != 1)
            throw ParseError(path + ": unsupported format version " +
                             std::to_string(info.format_version));
        info.precision_bits = j.at("precision").get<int>();
        if (info.precision_bits != static_cast<int>(sizeof(T) * 8))
            throw ArchitectureMismatch(path + " stores " + std::to_string(info.precision_bits) +
                                       "-bit parameters");
        info.final_iteration = j.at("final_iteration").get<std::int64_t>();
        info.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
        info.train_config = train_config_from_json(j.at("train_config"));

        vae::ModelParams<T> model;
        const json& arch = j.at("architecture");
        model.encoder.input_width = arch.at("encoder").at("input_width").get<std::int64_t>();
        model.encoder.hidden = int_list_from(arch.at("encoder").at("hidden"));
        model.encoder.latent_dim = arch.at("encoder").at("latent_dim").get<std::int64_t>();
        model.decoder.obs_dim = arch.at("decoder").at("obs_dim").get<std::int64_t>();
        model.decoder.extractor_widths = int_list_from(arch.at("decoder").at("extractor_widths"));
        model.decoder.fusion_width = arch.at("decoder").at("fusion_width").get<std::int64_t>();
        model.decoder.hidden = int_list_from(arch.at("decoder").at("hidden"));
        model.decoder.latent_dim = arch.at("decoder").at("latent_dim").get<std::int64_t>();

        for (const json& p : j.at("params")) {
            const std::string name = p.at("name").get<std::string>();
            const std::int64_t rows = p.at("shape").at(0).get<std::int64_t>();
            const std::int64_t cols = p.at("shape").at(1).get<std::int64_t>();
            const bool decay = p.at("decay").get<bool>();
            const json& data = p.at("data");
            if (static_cast<std::int64_t>(data.size()) != rows * cols)
                throw ParseError(path + ": parameter " + name + " has " +
                                 std::to_string(data.size()) + " values for shape " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
            Tensor<T> t(rows, cols);
            for (std::int64_t k = 0; k < t.size(); ++k)
                t[k] = static_cast<T>(textio::parse_double(data.at(k).get<std::string>()));
            model.store.add(name, std::move(t), decay);
        }
        return {std::move(model), std::move(info)};
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

template void save_checkpoint<float>(const std::string&, const vae::ModelParams<float>&,
                                     const CheckpointInfo&);
template void save_checkpoint<double>(const std::string&, const vae::ModelParams<double>&,
                                      const CheckpointInfo&);
template std::pair<vae::ModelParams<float>, CheckpointInfo> load_checkpoint<float>(
    const std::string&);
template std::pair<vae::ModelParams<double>, CheckpointInfo> load_checkpoint<double>(
    const std::string&);

}  // namespace posegen::io
