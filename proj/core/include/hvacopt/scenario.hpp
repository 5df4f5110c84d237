#ifndef HVACOPT_SCENARIO_HPP
#define HVACOPT_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hvacopt/model.hpp"

namespace hvacopt {

/// Knobs of the random scenario generator. Defaults follow the bundled
/// desk-scale setup: 30-minute stages over one day, identical zones, random
/// bounded-degree coupling, uniform internal loads, TOU price and sinusoidal
/// outdoor-temperature curves.
struct GeneratorParams {
    int horizon = 48;
    double dt_seconds = 1800.0;

    double capacitance = 1375.0;   ///< kJ/K
    double r_out = 50.0;           ///< K/kW
    double r_zone = 14.0;          ///< K/kW, every coupling edge
    double t_min = 24.0;
    double t_max = 26.0;
    double m_min = 0.0;
    double m_max = 0.5;

    double return_air_fraction = 0.8;
    double cop_reciprocal = 1.0;
    double fan_coefficient = 0.08;
    double air_specific_heat = 1.012;
    /// AHU cap as a fraction of the aggregate zone flow limit.
    double cap_fraction = 0.7;

    int max_degree = 4;
    bool complete_graph = false;  ///< couple every pair (degree cap permitting I <= 5)

    double load_max = 1.0;        ///< loads ~ U[0, load_max] kW
    double t_supply = 15.0;
    double init_lo = 26.0;
    double init_hi = 28.0;
    /// Exact initial temperatures; overrides the random draw when set.
    std::optional<std::vector<double>> init_temps;
    /// User-supplied series; defaults are generated when absent.
    std::optional<std::vector<double>> price;
    std::optional<std::vector<double>> outdoor;
};

/// A reproducible problem instance: plant, exogenous series, and the
/// generator provenance that produced them.
struct Scenario {
    BuildingModel model;
    ExogenousSeries exo;
    std::uint64_t seed = 0;
    std::string provenance;  ///< JSON text of the generator call, empty for files
};

/// Bundled default curves (editable by supplying series in GeneratorParams or
/// in the scenario document).
std::vector<double> default_price_curve(int horizon, double dt_seconds);
std::vector<double> default_outdoor_curve(int horizon, double dt_seconds);

/// Deterministic scenario from a seed: random connected coupling graph with
/// bounded degree, i.i.d. uniform loads, initial temperatures from
/// [init_lo, init_hi] unless pinned.
Scenario generate_scenario(int n_zones, std::uint64_t seed,
                           const GeneratorParams& params = {});

/// Scenario document I/O (JSON; schema documented in the README).
/// save_scenario writes atomically (temp file + rename).
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

}  // namespace hvacopt

#endif
