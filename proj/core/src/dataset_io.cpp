#include "posegen/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "posegen/textio.hpp"

namespace posegen::io {

using nlohmann::json;

void write_dataset(const std::string& path, const scene::Dataset& dataset) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "# posegen dataset\n";
    out << "# split " << dataset.split << "\n";
    out << "# seed " << dataset.seed << "\n";
    out << "# count " << dataset.samples.size() << "\n";
    for (const scene::Sample& s : dataset.samples) {
        out << dataset.split << ' ' << textio::g17(s.coordinate);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out << ' ' << textio::g17(s.pose.rotation(r, c));
        for (int k = 0; k < 3; ++k) out << ' ' << textio::g17(s.pose.translation[k]);
        for (double f : s.obs.features) out << ' ' << textio::g17(f);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

scene::Dataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    scene::Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            // recover the generation seed from the header comments
            std::istringstream hs(line);
            std::string hash, key, value;
            if (hs >> hash >> key >> value && key == "seed")
                ds.seed = static_cast<std::uint64_t>(textio::parse_int(value));
            continue;
        }
        std::istringstream ls(line);
        std::vector<std::string> fields;
        std::string f;
        while (ls >> f) fields.push_back(f);
        if (fields.size() < 15)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected at least 15 fields, got " +
                             std::to_string(fields.size()));
        scene::Sample s;
        const std::string& split = fields[0];
        if (split != "train" && split != "test")
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad split tag '" + split + "'");
        if (ds.split.empty())
            ds.split = split;
        else if (ds.split != split)
            throw ParseError(path + ":" + std::to_string(lineno) + ": mixed split tags");
        s.coordinate = textio::parse_double(fields[1]);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                s.pose.rotation(r, c) = textio::parse_double(fields[2 + r * 3 + c]);
        for (int k = 0; k < 3; ++k) s.pose.translation[k] = textio::parse_double(fields[11 + k]);
        for (std::size_t k = 14; k < fields.size(); ++k)
            s.obs.features.push_back(textio::parse_double(fields[k]));
        if (!ds.samples.empty() &&
            ds.samples.front().obs.features.size() != s.obs.features.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": inconsistent feature width");
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw ParseError(path + ": no records");
    return ds;
}

namespace {

json color_json(const scene::Color& c) { return json::array({c[0], c[1], c[2]}); }

scene::Color color_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ParseError("color must be a 3-array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_json(const geo::Vec3& v) { return json::array({v[0], v[1], v[2]}); }

geo::Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ParseError("vector must be a 3-array");
    return geo::Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

void write_scene_manifest(const std::string& path, const scene::SceneSpec& scene) {
    json j;
    j["format_version"] = 1;
    j["seed"] = scene.seed;
    j["sigma_obs"] = scene.sigma_obs;
    j["feature_dim"] = scene.feature_dim;
    j["orientation"] =
        scene.orientation == scene::OrientationProfile::Fixed ? "fixed" : "per_segment_yaw";
    j["trajectory"]["start"] = vec3_json(scene.trajectory.start);
    j["trajectory"]["direction"] = vec3_json(scene.trajectory.direction);
    j["trajectory"]["length"] = scene.trajectory.length;
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(scene.trajectory.base_rotation(r, c));
    j["trajectory"]["base_rotation"] = rot;
    j["palette"] = json::array();
    for (const auto& c : scene.palette) j["palette"].push_back(color_json(c));
    j["segments"] = json::array();
    for (const auto& s : scene.segments)
        j["segments"].push_back(
            {{"t0", s.t0}, {"t1", s.t1}, {"color", s.color}, {"yaw_deg", s.yaw_deg}});

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

scene::SceneSpec read_scene_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        scene::SceneSpec s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.sigma_obs = j.at("sigma_obs").get<double>();
        s.feature_dim = j.at("feature_dim").get<std::int64_t>();
        s.orientation = j.at("orientation").get<std::string>() == "fixed"
                            ? scene::OrientationProfile::Fixed
                            : scene::OrientationProfile::PerSegmentYaw;
        s.trajectory.start = vec3_from_json(j.at("trajectory").at("start"));
        s.trajectory.direction = vec3_from_json(j.at("trajectory").at("direction"));
        s.trajectory.length = j.at("trajectory").at("length").get<double>();
        const json& rot = j.at("trajectory").at("base_rotation");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                s.trajectory.base_rotation(r, c) = rot.at(r * 3 + c).get<double>();
        for (const json& c : j.at("palette")) s.palette.push_back(color_from_json(c));
        for (const json& seg : j.at("segments")) {
            scene::Segment sg;
            sg.t0 = seg.at("t0").get<double>();
            sg.t1 = seg.at("t1").get<double>();
            sg.color = seg.at("color").get<int>();
            sg.yaw_deg = seg.at("yaw_deg").get<double>();
            s.segments.push_back(sg);
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace posegen::io
