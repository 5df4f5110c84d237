#include "hvacopt/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

namespace hvacopt {

namespace {

using ordered_json = nlohmann::ordered_json;

// Deterministic uniform draws independent of the standard library's
// distribution implementations.
double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_index(std::mt19937_64& rng, int n) {
    const int k = static_cast<int>(u01(rng) * n);
    return std::min(k, n - 1);
}

std::vector<CouplingEdge> random_graph(int n, int max_degree, double r_zone,
                                       std::mt19937_64& rng) {
    std::vector<CouplingEdge> edges;
    if (n == 1) return edges;
    if (max_degree < 1 || (n > 2 && max_degree < 2))
        throw ModelError("degree cap too small for a connected graph");

    std::vector<int> degree(static_cast<size_t>(n), 0);
    std::set<std::pair<int, int>> used;
    // Random spanning tree by uniform attachment among nodes with headroom.
    for (int k = 1; k < n; ++k) {
        std::vector<int> eligible;
        for (int j = 0; j < k; ++j)
            if (degree[static_cast<size_t>(j)] < max_degree) eligible.push_back(j);
        if (eligible.empty())
            throw ModelError("degree constraint unsatisfiable during attachment");
        const int j = eligible[static_cast<size_t>(uniform_index(
            rng, static_cast<int>(eligible.size())))];
        edges.push_back({j, k, r_zone});
        used.insert({j, k});
        ++degree[static_cast<size_t>(j)];
        ++degree[static_cast<size_t>(k)];
    }
    // Extra edges by rejection, keeping the degree cap.
    const int attempts = n;
    for (int a = 0; a < attempts; ++a) {
        int i = uniform_index(rng, n);
        int j = uniform_index(rng, n);
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        if (used.count({i, j})) continue;
        if (degree[static_cast<size_t>(i)] >= max_degree ||
            degree[static_cast<size_t>(j)] >= max_degree)
            continue;
        edges.push_back({i, j, r_zone});
        used.insert({i, j});
        ++degree[static_cast<size_t>(i)];
        ++degree[static_cast<size_t>(j)];
    }
    return edges;
}

}  // namespace

std::vector<double> default_price_curve(int horizon, double dt_seconds) {
    std::vector<double> p(static_cast<size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
        const double h = (t + 0.5) * dt_seconds / 3600.0;
        const double h_day = std::fmod(h, 24.0);
        if (h_day < 8.0) p[static_cast<size_t>(t)] = 0.08;
        else if (h_day < 20.0) p[static_cast<size_t>(t)] = 0.22;
        else p[static_cast<size_t>(t)] = 0.10;
    }
    return p;
}

std::vector<double> default_outdoor_curve(int horizon, double dt_seconds) {
    std::vector<double> v(static_cast<size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
        const double h = (t + 0.5) * dt_seconds / 3600.0;
        v[static_cast<size_t>(t)] = 30.0 - 4.0 * std::cos(2.0 * M_PI * (h - 3.0) / 24.0);
    }
    return v;
}

Scenario generate_scenario(int n_zones, std::uint64_t seed, const GeneratorParams& p) {
    if (n_zones < 1) throw ModelError("generate_scenario: need at least one zone");
    std::mt19937_64 rng(seed);

    std::vector<ZoneParams> zones;
    zones.reserve(static_cast<size_t>(n_zones));
    for (int i = 0; i < n_zones; ++i) {
        ZoneParams z;
        z.capacitance = p.capacitance;
        z.r_out = p.r_out;
        z.t_min = p.t_min;
        z.t_max = p.t_max;
        z.m_min = p.m_min;
        z.m_max = p.m_max;
        z.t_init = p.init_lo + u01(rng) * (p.init_hi - p.init_lo);
        zones.push_back(z);
    }
    if (p.init_temps) {
        if (static_cast<int>(p.init_temps->size()) != n_zones)
            throw ModelError("init_temps length must equal the zone count");
        for (int i = 0; i < n_zones; ++i)
            zones[static_cast<size_t>(i)].t_init = (*p.init_temps)[static_cast<size_t>(i)];
    }

    std::vector<CouplingEdge> edges;
    if (p.complete_graph) {
        if (n_zones - 1 > p.max_degree)
            throw ModelError("complete graph exceeds the degree cap");
        for (int i = 0; i < n_zones; ++i)
            for (int j = i + 1; j < n_zones; ++j) edges.push_back({i, j, p.r_zone});
    } else {
        edges = random_graph(n_zones, p.max_degree, p.r_zone, rng);
    }

    AhuParams ahu;
    ahu.return_air_fraction = p.return_air_fraction;
    ahu.cop_reciprocal = p.cop_reciprocal;
    ahu.fan_coefficient = p.fan_coefficient;
    ahu.air_specific_heat = p.air_specific_heat;
    ahu.total_flow_max = p.cap_fraction * p.m_max * n_zones;

    Scenario sc{BuildingModel::create(std::move(zones), std::move(edges), ahu,
                                      p.dt_seconds, p.horizon),
                ExogenousSeries{}, seed, ""};

    const int T = p.horizon;
    sc.exo.t_out.resize(T);
    sc.exo.price.resize(T);
    sc.exo.t_supply = Eigen::VectorXd::Constant(T, p.t_supply);
    const auto price = p.price ? *p.price : default_price_curve(T, p.dt_seconds);
    const auto outdoor = p.outdoor ? *p.outdoor : default_outdoor_curve(T, p.dt_seconds);
    if (static_cast<int>(price.size()) != T || static_cast<int>(outdoor.size()) != T)
        throw ModelError("supplied price/outdoor curves must match the horizon");
    for (int t = 0; t < T; ++t) {
        sc.exo.price[t] = price[static_cast<size_t>(t)];
        sc.exo.t_out[t] = outdoor[static_cast<size_t>(t)];
    }
    sc.exo.q_load.resize(n_zones, T);
    for (int i = 0; i < n_zones; ++i)
        for (int t = 0; t < T; ++t) sc.exo.q_load(i, t) = p.load_max * u01(rng);

    ordered_json prov;
    prov["generator"] = {{"n_zones", n_zones},
                         {"seed", seed},
                         {"horizon", p.horizon},
                         {"dt_seconds", p.dt_seconds},
                         {"max_degree", p.max_degree},
                         {"complete_graph", p.complete_graph},
                         {"cap_fraction", p.cap_fraction},
                         {"load_max", p.load_max}};
    sc.provenance = prov.dump();
    validate_series(sc.model, sc.exo);
    return sc;
}

std::string scenario_to_json(const Scenario& sc) {
    ordered_json j;
    j["building"]["dt_seconds"] = sc.model.dt_seconds();
    j["building"]["horizon"] = sc.model.horizon();
    const AhuParams& a = sc.model.ahu();
    j["building"]["ahu"] = {{"return_air_fraction", a.return_air_fraction},
                            {"cop_reciprocal", a.cop_reciprocal},
                            {"fan_coefficient", a.fan_coefficient},
                            {"total_flow_max", a.total_flow_max},
                            {"air_specific_heat", a.air_specific_heat}};
    j["building"]["zones"] = ordered_json::array();
    for (const auto& z : sc.model.zones()) {
        j["building"]["zones"].push_back({{"capacitance", z.capacitance},
                                          {"r_out", z.r_out},
                                          {"t_min", z.t_min},
                                          {"t_max", z.t_max},
                                          {"m_min", z.m_min},
                                          {"m_max", z.m_max},
                                          {"t_init", z.t_init}});
    }
    j["building"]["coupling"] = ordered_json::array();
    for (const auto& e : sc.model.coupling())
        j["building"]["coupling"].push_back(
            {{"i", e.i}, {"j", e.j}, {"resistance", e.resistance}});

    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    j["exogenous"]["outdoor_temp"] = vec(sc.exo.t_out);
    j["exogenous"]["price"] = vec(sc.exo.price);
    j["exogenous"]["supply_temp"] = vec(sc.exo.t_supply);
    j["exogenous"]["zone_loads"] = ordered_json::array();
    for (int i = 0; i < sc.exo.q_load.rows(); ++i) {
        std::vector<double> row(static_cast<size_t>(sc.exo.q_load.cols()));
        for (int t = 0; t < sc.exo.q_load.cols(); ++t)
            row[static_cast<size_t>(t)] = sc.exo.q_load(i, t);
        j["exogenous"]["zone_loads"].push_back(row);
    }
    j["seed"] = sc.seed;
    if (!sc.provenance.empty())
        j["provenance"] = ordered_json::parse(sc.provenance);
    return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
    const ordered_json j = ordered_json::parse(text);
    const auto& jb = j.at("building");
    AhuParams ahu;
    const auto& ja = jb.at("ahu");
    ahu.return_air_fraction = ja.at("return_air_fraction").get<double>();
    ahu.cop_reciprocal = ja.at("cop_reciprocal").get<double>();
    ahu.fan_coefficient = ja.at("fan_coefficient").get<double>();
    ahu.total_flow_max = ja.at("total_flow_max").get<double>();
    ahu.air_specific_heat = ja.at("air_specific_heat").get<double>();

    std::vector<ZoneParams> zones;
    for (const auto& jz : jb.at("zones")) {
        ZoneParams z;
        z.capacitance = jz.at("capacitance").get<double>();
        z.r_out = jz.at("r_out").get<double>();
        z.t_min = jz.at("t_min").get<double>();
        z.t_max = jz.at("t_max").get<double>();
        z.m_min = jz.at("m_min").get<double>();
        z.m_max = jz.at("m_max").get<double>();
        z.t_init = jz.at("t_init").get<double>();
        zones.push_back(z);
    }
    std::vector<CouplingEdge> edges;
    if (jb.contains("coupling")) {
        for (const auto& je : jb.at("coupling"))
            edges.push_back({je.at("i").get<int>(), je.at("j").get<int>(),
                             je.at("resistance").get<double>()});
    }
    Scenario sc{BuildingModel::create(std::move(zones), std::move(edges), ahu,
                                      jb.at("dt_seconds").get<double>(),
                                      jb.at("horizon").get<int>()),
                ExogenousSeries{}, 0, ""};

    const auto& je = j.at("exogenous");
    auto to_vec = [](const ordered_json& arr) {
        Eigen::VectorXd v(arr.size());
        for (size_t k = 0; k < arr.size(); ++k) v[static_cast<Eigen::Index>(k)] = arr[k];
        return v;
    };
    sc.exo.t_out = to_vec(je.at("outdoor_temp"));
    sc.exo.price = to_vec(je.at("price"));
    sc.exo.t_supply = to_vec(je.at("supply_temp"));
    const auto& loads = je.at("zone_loads");
    sc.exo.q_load.resize(static_cast<Eigen::Index>(loads.size()), sc.model.horizon());
    for (size_t i = 0; i < loads.size(); ++i)
        for (size_t t = 0; t < loads[i].size(); ++t)
            sc.exo.q_load(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
                loads[i][t];
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("provenance")) sc.provenance = j.at("provenance").dump();
    validate_series(sc.model, sc.exo);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open scenario file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return scenario_from_json(text);
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw ModelError("cannot write scenario file: " + tmp.string());
        out << scenario_to_json(scenario);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace hvacopt
