#include "anfekf/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "anfekf/errors.hpp"

namespace anfekf {

using nlohmann::json;

namespace {

// Degrees are emitted rounded to 1e-9 deg so that file -> memory -> file is
// textually stable.
double emit_deg(double rad) { return std::round(rad_to_deg(rad) * 1e9) / 1e9; }

json noise_to_json(const NoiseSpec& n) {
    return {{"sigma_v", n.sigma_v},
            {"sigma_gamma_deg", emit_deg(n.sigma_gamma)},
            {"sigma_r", n.sigma_r},
            {"sigma_theta_deg", emit_deg(n.sigma_theta)}};
}

NoiseSpec noise_from_json(const json& j) {
    NoiseSpec n;
    n.sigma_v = j.at("sigma_v").get<double>();
    n.sigma_gamma = deg_to_rad(j.at("sigma_gamma_deg").get<double>());
    n.sigma_r = j.at("sigma_r").get<double>();
    n.sigma_theta = deg_to_rad(j.at("sigma_theta_deg").get<double>());
    return n;
}

json net_to_json(const AnfisNet& net) {
    const auto p = net.parameters();
    return json(std::vector<double>(p.begin(), p.end()));
}

AnfisNet net_from_json(const json& j, const AnfisNet& base) {
    const auto values = j.get<std::vector<double>>();
    AnfisNet net = base;
    net.set_parameters(values);
    return net;
}

}  // namespace

json to_json(const ScenarioFile& file) {
    const Scenario& s = file.scenario;
    json j;
    j["schema"] = kScenarioSchema;
    j["vehicle"] = {{"wheelbase", s.wheelbase}, {"speed", s.speed}, {"gamma_max_deg", emit_deg(s.gamma_max)}};
    j["sensor"] = {{"range", s.sensor_range}, {"fov_deg", emit_deg(s.sensor_fov)}};
    j["rates"] = {{"control_hz", s.control_rate}, {"observe_hz", s.observe_rate}};
    j["duration"] = s.duration;
    j["seed"] = s.seed;
    j["waypoint_tolerance"] = s.waypoint_tolerance;
    j["initial_pose"] = {s.initial_pose.x, s.initial_pose.y, emit_deg(s.initial_pose.phi)};
    j["noise"] = {{"true", noise_to_json(s.true_noise)}, {"assumed", noise_to_json(s.assumed_noise)}};
    json lms = json::array();
    for (const Landmark& lm : s.landmarks) lms.push_back({lm.id, lm.x, lm.y});
    j["landmarks"] = lms;
    json wps = json::array();
    for (const Waypoint& wp : s.waypoints) wps.push_back({wp.x, wp.y});
    j["waypoints"] = wps;

    const FilterSettings& f = file.filter;
    const AdaptationConfig& a = f.adaptation;
    json adapt = {{"window", a.window},       {"eta", a.eta},         {"r_floor", a.r_floor},
                  {"q_floor", a.q_floor},     {"q_ceiling", a.q_ceiling}, {"r_step", a.r_step},
                  {"q_ratio", a.q_ratio},     {"q_width", a.q_width},
                  {"output_gain", a.output_gain}};
    if (f.r_nets) adapt["r_nets"] = {net_to_json((*f.r_nets)[0]), net_to_json((*f.r_nets)[1])};
    if (f.q_net) adapt["q_net"] = net_to_json(*f.q_net);
    j["filter"] = {{"gate", f.gate}, {"p0", {f.p0_diag(0), f.p0_diag(1), f.p0_diag(2)}}, {"adaptation", adapt}};
    return j;
}

ScenarioFile scenario_from_json(const json& j) {
    ScenarioFile file;
    try {
        if (j.value("schema", std::string{}) != kScenarioSchema)
            throw ConfigError(std::string("scenario schema must be \"") + kScenarioSchema + "\"");
        Scenario& s = file.scenario;
        const json& veh = j.at("vehicle");
        s.wheelbase = veh.at("wheelbase").get<double>();
        s.speed = veh.at("speed").get<double>();
        s.gamma_max = deg_to_rad(veh.at("gamma_max_deg").get<double>());
        const json& sen = j.at("sensor");
        s.sensor_range = sen.at("range").get<double>();
        s.sensor_fov = deg_to_rad(sen.at("fov_deg").get<double>());
        const json& rates = j.at("rates");
        s.control_rate = rates.at("control_hz").get<double>();
        s.observe_rate = rates.at("observe_hz").get<double>();
        s.duration = j.at("duration").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.waypoint_tolerance = j.value("waypoint_tolerance", 1.0);
        if (j.contains("initial_pose")) {
            const auto p = j.at("initial_pose").get<std::vector<double>>();
            if (p.size() != 3) throw ConfigError("initial_pose must be [x, y, phi_deg]");
            s.initial_pose = Pose(p[0], p[1], deg_to_rad(p[2]));
        }
        s.true_noise = noise_from_json(j.at("noise").at("true"));
        s.assumed_noise = noise_from_json(j.at("noise").at("assumed"));
        for (const json& lm : j.at("landmarks")) {
            if (!lm.is_array() || lm.size() != 3) throw ConfigError("landmarks must be [id, x, y] triples");
            s.landmarks.push_back({lm[0].get<int>(), lm[1].get<double>(), lm[2].get<double>()});
        }
        for (const json& wp : j.at("waypoints")) {
            if (!wp.is_array() || wp.size() != 2) throw ConfigError("waypoints must be [x, y] pairs");
            s.waypoints.push_back({wp[0].get<double>(), wp[1].get<double>()});
        }

        if (j.contains("filter")) {
            const json& f = j.at("filter");
            FilterSettings& fs = file.filter;
            fs.gate = f.value("gate", kDefaultGate);
            if (f.contains("p0")) {
                const auto p0 = f.at("p0").get<std::vector<double>>();
                if (p0.size() != 3) throw ConfigError("filter.p0 must hold three variances");
                fs.p0_diag = Vec3(p0[0], p0[1], p0[2]);
            }
            if (f.contains("adaptation")) {
                const json& a = f.at("adaptation");
                AdaptationConfig& c = fs.adaptation;
                c.window = a.value("window", c.window);
                c.eta = a.value("eta", c.eta);
                c.r_floor = a.value("r_floor", c.r_floor);
                c.q_floor = a.value("q_floor", c.q_floor);
                c.q_ceiling = a.value("q_ceiling", c.q_ceiling);
                c.r_step = a.value("r_step", c.r_step);
                c.q_ratio = a.value("q_ratio", c.q_ratio);
                c.q_width = a.value("q_width", c.q_width);
                c.output_gain = a.value("output_gain", c.output_gain);
                c.validate();
                if (a.contains("r_nets")) {
                    const json& nets = a.at("r_nets");
                    if (!nets.is_array() || nets.size() != 2) throw ConfigError("r_nets must hold two networks");
                    const AnfisNet base = default_r_net(c);
                    fs.r_nets = std::array<AnfisNet, 2>{net_from_json(nets[0], base), net_from_json(nets[1], base)};
                }
                if (a.contains("q_net")) fs.q_net = net_from_json(a.at("q_net"), default_q_net(c));
            }
        }
        s.validate();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
    return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read scenario file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("scenario file " + path.string() + " is not valid JSON: " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string dump_scenario(const ScenarioFile& file) { return to_json(file).dump(2) + "\n"; }

void save_scenario(const ScenarioFile& file, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write scenario file " + path.string());
    out << dump_scenario(file);
    if (!out) throw ConfigError("failed writing scenario file " + path.string());
}

Scenario default_scenario() {
    Scenario s;
    s.waypoints = {{60, -5}, {120, 10}, {130, 60}, {70, 75}, {10, 60}, {0, 0}};
    // Landmarks sit 6-13 m either side of the route, roughly one per 10 m of
    // path, so a 20 m half-plane sensor usually sees two to four of them.
    s.landmarks = {{1, 5, 7},     {2, 15, -8},   {3, 26, 6},    {4, 32, -12},  {5, 44, 5},    {6, 53, -11},
                   {7, 62, 8},    {8, 75, -9},   {9, 82, 14},   {10, 97, -5},  {11, 105, 13}, {12, 118, 1},
                   {13, 114, 15}, {14, 134, 22}, {15, 115, 36}, {16, 136, 44}, {17, 123, 56}, {18, 129, 68},
                   {19, 112, 55}, {20, 108, 76}, {21, 93, 61},  {22, 86, 82},  {23, 74, 64},  {24, 62, 85},
                   {25, 56, 63},  {26, 41, 75},  {27, 38, 55},  {28, 24, 73},  {29, 19, 51},  {30, -1, 56},
                   {31, 15, 42},  {32, -4, 36},  {33, 13, 23},  {34, -10, 16}, {35, 11, 3}};
    s.initial_pose = Pose(0, 0, 0);
    s.wheelbase = 4.0;
    s.speed = 3.0;
    s.gamma_max = deg_to_rad(30.0);
    s.sensor_range = 20.0;
    s.sensor_fov = deg_to_rad(180.0);
    s.control_rate = 40.0;
    s.observe_rate = 5.0;
    s.true_noise = {0.3, deg_to_rad(3.0), 0.1, deg_to_rad(1.0)};
    s.assumed_noise = s.true_noise;
    s.duration = 150.0;
    s.seed = 1;
    return s;
}

Preset parse_preset(const std::string& name) {
    for (Preset p : {Preset::Known, Preset::WrongR, Preset::WrongQ, Preset::Consistency})
        if (name == to_string(p)) return p;
    throw ConfigError("unknown preset '" + name + "' (expected known, wrong-r, wrong-q or consistency)");
}

const char* to_string(Preset p) {
    switch (p) {
        case Preset::Known: return "known";
        case Preset::WrongR: return "wrong-r";
        case Preset::WrongQ: return "wrong-q";
        case Preset::Consistency: return "consistency";
    }
    return "?";
}

Scenario preset_scenario(Preset p) {
    Scenario s = default_scenario();
    switch (p) {
        case Preset::Known:
            break;
        case Preset::WrongR:
            s.assumed_noise.sigma_r = 2.0;
            s.assumed_noise.sigma_theta = deg_to_rad(0.1);
            break;
        case Preset::WrongQ:
            s.assumed_noise.sigma_v = 0.03;
            s.assumed_noise.sigma_gamma = deg_to_rad(0.5);
            break;
        case Preset::Consistency:
            s.assumed_noise.sigma_r = 2.0;
            s.assumed_noise.sigma_theta = deg_to_rad(0.5);
            break;
    }
    return s;
}

}  // namespace anfekf
