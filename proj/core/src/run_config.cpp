#include "posegen/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "posegen/textio.hpp"

namespace posegen::io {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    return parts;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> v;
    for (const std::string& p : split(s, ','))
        if (!p.empty()) v.push_back(textio::parse_double(p));
    return v;
}

std::vector<std::int64_t> parse_int_list(const std::string& s) {
    std::vector<std::int64_t> v;
    for (const std::string& p : split(s, ','))
        if (!p.empty()) v.push_back(textio::parse_int(p));
    return v;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += textio::g17(v[i]);
    }
    return s;
}

/// "0.1:10,0.2:15" -> threshold pairs
std::vector<eval::Threshold> parse_thresholds(const std::string& s) {
    std::vector<eval::Threshold> out;
    for (const std::string& p : split(s, ',')) {
        const auto kv = split(p, ':');
        if (kv.size() != 2) throw ConfigError("threshold '" + p + "' is not trans:rot");
        out.emplace_back(textio::parse_double(kv[0]), textio::parse_double(kv[1]));
    }
    if (out.empty()) throw ConfigError("empty threshold list");
    return out;
}

std::string thresholds_str(const std::vector<eval::Threshold>& t) {
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) s += ',';
        s += textio::g17(t[i].first) + ":" + textio::g17(t[i].second);
    }
    return s;
}

}  // namespace

void RunConfig::validate() const {
    if (precision_bits != 32 && precision_bits != 64)
        throw ConfigError("precision must be 32 or 64");
    if (n_train < 1 || n_test < 1) throw ConfigError("dataset sizes must be positive");
    if (sample_count < 1) throw ConfigError("sample_count must be positive");
    if (kde_axis < 0 || kde_axis > 2) throw ConfigError("kde_axis must be 0, 1 or 2");
    if (kde_grid_points < 2) throw ConfigError("kde_grid_points must be >= 2");
    if (!(mode_gamma > 0 && mode_gamma <= 1)) throw ConfigError("mode_gamma must be in (0,1]");
    if (!(mode_threshold.first > 0 && mode_threshold.second > 0))
        throw ConfigError("mode_threshold components must be positive");
    if (extractor_widths.empty() || extractor_widths.back() > 512)
        throw ConfigError("extractor widths must be non-empty with output <= 512");
    if (fusion_width < 1) throw ConfigError("fusion_width must be positive");
    train.validate();
    recall.validate();
}

void apply_config_kv(RunConfig& c, const std::string& key, const std::string& value) {
    try {
        if (key == "out_dir") c.out_dir = value;
        else if (key == "precision") c.precision_bits = static_cast<int>(textio::parse_int(value));
        else if (key == "seed_scene") c.seed_scene = textio::parse_int(value);
        else if (key == "seed_init") c.seed_init = textio::parse_int(value);
        else if (key == "seed_train") {
            c.seed_train = textio::parse_int(value);
            c.train.seed = c.seed_train;
        }
        else if (key == "seed_eval") c.seed_eval = textio::parse_int(value);
        else if (key == "scene_pattern") {
            c.scene_options.pattern.clear();
            for (auto v : parse_int_list(value))
                c.scene_options.pattern.push_back(static_cast<int>(v));
            c.scene_options.segment_count =
                static_cast<std::int64_t>(c.scene_options.pattern.size());
        }
        else if (key == "scene_length") c.scene_options.length = textio::parse_double(value);
        else if (key == "scene_palette") {
            c.scene_options.palette.clear();
            for (const std::string& cs : split(value, ';')) {
                const auto rgb = parse_double_list(cs);
                if (rgb.size() != 3) throw ConfigError("palette color '" + cs + "' is not r,g,b");
                c.scene_options.palette.push_back({rgb[0], rgb[1], rgb[2]});
            }
        }
        else if (key == "scene_orientation") {
            if (value == "fixed") c.scene_options.orientation = scene::OrientationProfile::Fixed;
            else if (value == "per_segment_yaw")
                c.scene_options.orientation = scene::OrientationProfile::PerSegmentYaw;
            else throw ConfigError("scene_orientation must be fixed or per_segment_yaw");
        }
        else if (key == "scene_yaw_degrees") c.scene_options.yaw_degrees = parse_double_list(value);
        else if (key == "sigma_obs") c.scene_options.sigma_obs = textio::parse_double(value);
        else if (key == "feature_dim") c.scene_options.feature_dim = textio::parse_int(value);
        else if (key == "n_train") c.n_train = textio::parse_int(value);
        else if (key == "n_test") c.n_test = textio::parse_int(value);
        else if (key == "spacing") c.spacing = textio::parse_double(value);
        else if (key == "latent_dim") c.train.latent_dim = textio::parse_int(value);
        else if (key == "beta") c.train.beta = textio::parse_double(value);
        else if (key == "warmup_start") c.train.warmup_start = textio::parse_int(value);
        else if (key == "warmup_length") c.train.warmup_length = textio::parse_int(value);
        else if (key == "batch_size") c.train.batch_size = textio::parse_int(value);
        else if (key == "mc_train_samples") c.train.mc_train_samples = textio::parse_int(value);
        else if (key == "lambda_r") c.train.lambda_r = textio::parse_double(value);
        else if (key == "lambda_t") c.train.lambda_t = textio::parse_double(value);
        else if (key == "iterations") c.train.total_iterations = textio::parse_int(value);
        else if (key == "learning_rate") c.train.optimizer.learning_rate = textio::parse_double(value);
        else if (key == "weight_decay") c.train.optimizer.weight_decay = textio::parse_double(value);
        else if (key == "adam_beta1") c.train.optimizer.beta1 = textio::parse_double(value);
        else if (key == "adam_beta2") c.train.optimizer.beta2 = textio::parse_double(value);
        else if (key == "adam_epsilon") c.train.optimizer.epsilon = textio::parse_double(value);
        else if (key == "extractor_widths") c.extractor_widths = parse_int_list(value);
        else if (key == "fusion_width") c.fusion_width = textio::parse_int(value);
        else if (key == "recall_thresholds") c.recall.thresholds = parse_thresholds(value);
        else if (key == "recall_gamma") c.recall.gamma = textio::parse_double(value);
        else if (key == "mode_gamma") c.mode_gamma = textio::parse_double(value);
        else if (key == "mode_threshold") {
            const auto t = parse_thresholds(value);
            if (t.size() != 1) throw ConfigError("mode_threshold takes one trans:rot pair");
            c.mode_threshold = t.front();
        }
        else if (key == "sample_count") c.sample_count = textio::parse_int(value);
        else if (key == "kde_axis") c.kde_axis = static_cast<int>(textio::parse_int(value));
        else if (key == "kde_grid_points") c.kde_grid_points = textio::parse_int(value);
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const ParseError& e) {
        throw ConfigError("bad value for '" + key + "': " + e.what());
    }
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_key_values() const {
    std::vector<std::pair<std::string, std::string>> kv;
    auto add = [&kv](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
    add("out_dir", out_dir);
    add("precision", std::to_string(precision_bits));
    add("seed_scene", std::to_string(seed_scene));
    add("seed_init", std::to_string(seed_init));
    add("seed_train", std::to_string(seed_train));
    add("seed_eval", std::to_string(seed_eval));
    {
        std::string p;
        for (std::size_t i = 0; i < scene_options.pattern.size(); ++i) {
            if (i) p += ',';
            p += std::to_string(scene_options.pattern[i]);
        }
        add("scene_pattern", p);
    }
    add("scene_length", textio::g17(scene_options.length));
    {
        std::string p;
        for (std::size_t i = 0; i < scene_options.palette.size(); ++i) {
            if (i) p += ';';
            p += join_doubles({scene_options.palette[i][0], scene_options.palette[i][1],
                               scene_options.palette[i][2]});
        }
        add("scene_palette", p);
    }
    add("scene_orientation",
        scene_options.orientation == scene::OrientationProfile::Fixed ? "fixed"
                                                                      : "per_segment_yaw");
    add("scene_yaw_degrees", join_doubles(scene_options.yaw_degrees));
    add("sigma_obs", textio::g17(scene_options.sigma_obs));
    add("feature_dim", std::to_string(scene_options.feature_dim));
    add("n_train", std::to_string(n_train));
    add("n_test", std::to_string(n_test));
    add("spacing", textio::g17(spacing));
    add("latent_dim", std::to_string(train.latent_dim));
    add("beta", textio::g17(train.beta));
    add("warmup_start", std::to_string(train.warmup_start));
    add("warmup_length", std::to_string(train.warmup_length));
    add("batch_size", std::to_string(train.batch_size));
    add("mc_train_samples", std::to_string(train.mc_train_samples));
    add("lambda_r", textio::g17(train.lambda_r));
    add("lambda_t", textio::g17(train.lambda_t));
    add("iterations", std::to_string(train.total_iterations));
    add("learning_rate", textio::g17(train.optimizer.learning_rate));
    add("weight_decay", textio::g17(train.optimizer.weight_decay));
    add("adam_beta1", textio::g17(train.optimizer.beta1));
    add("adam_beta2", textio::g17(train.optimizer.beta2));
    add("adam_epsilon", textio::g17(train.optimizer.epsilon));
    {
        std::string p;
        for (std::size_t i = 0; i < extractor_widths.size(); ++i) {
            if (i) p += ',';
            p += std::to_string(extractor_widths[i]);
        }
        add("extractor_widths", p);
    }
    add("fusion_width", std::to_string(fusion_width));
    add("recall_thresholds", thresholds_str(recall.thresholds));
    add("recall_gamma", textio::g17(recall.gamma));
    add("mode_gamma", textio::g17(mode_gamma));
    add("mode_threshold", thresholds_str({mode_threshold}));
    add("sample_count", std::to_string(sample_count));
    add("kde_axis", std::to_string(kde_axis));
    add("kde_grid_points", std::to_string(kde_grid_points));
    return kv;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    RunConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        apply_config_kv(c, key, value);
    }
    return c;
}

std::string resolve_out_dir(const RunConfig& config) {
    std::filesystem::path p(config.out_dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("POSEGEN_OUT_ROOT")) p = std::filesystem::path(root) / p;
    }
    return p.string();
}

}  // namespace posegen::io
