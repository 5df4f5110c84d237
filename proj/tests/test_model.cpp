#include <doctest.h>

#include <random>

#include "test_support.hpp"

using namespace hvacopt;
using namespace hvacopt::testing;

TEST_CASE("discrete coefficients match hand evaluation") {
    // Two coupled zones, paper-scale parameters, 30-minute stages.
    const BuildingModel model = chain_model(2, 4);
    ExogenousSeries exo = flat_exo(model, 30.0, 0.2, 0.5);
    const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);

    CHECK(dyn.a_neighbor[0].size() == 1);
    CHECK(dyn.a_neighbor[0][0].first == 1);
    CHECK(std::abs(dyn.a_neighbor[0][0].second - 0.09351) < 1e-5);
    CHECK(std::abs(dyn.a_self[0] - 0.88031) < 1e-5);
    CHECK(std::abs(dyn.c_self[0] - (-1.32480)) < 1e-5);
    // T_out = 30, load 0.5 kW: conduction + internal parts of the constant term.
    CHECK(std::abs(dyn.d_const(0, 0) - 1.44000) < 1e-5);
}

TEST_CASE("isolated zone with huge outside resistance approaches identity") {
    ZoneParams z = default_zone();
    z.r_out = 1e12;
    const BuildingModel model =
        BuildingModel::create({z}, {}, default_ahu(1), 1800.0, 3);
    ExogenousSeries exo = flat_exo(model, 30.0, 0.2, 0.5);
    const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
    CHECK(dyn.a_self[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dyn.d_const(0, 0) ==
          doctest::Approx(1800.0 * 0.5 / 1375.0).epsilon(1e-9));
}

TEST_CASE("unstable discretization is rejected naming the zone") {
    ZoneParams z = default_zone();
    z.capacitance = 1.0;  // tiny capacitance drives a_self negative
    CHECK_THROWS_WITH_AS(
        BuildingModel::create({z}, {}, default_ahu(1), 1800.0, 3).zone_count(),
        doctest::Contains("zone 0"), ModelError);
}

TEST_CASE("row consistency and symmetric coupling hold to machine precision") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(u01(rng) * 4);
        std::vector<ZoneParams> zs;
        for (int i = 0; i < n; ++i) {
            ZoneParams z = default_zone();
            z.capacitance = 1000.0 + 800.0 * u01(rng);
            z.r_out = 30.0 + 40.0 * u01(rng);
            zs.push_back(z);
        }
        std::vector<CouplingEdge> edges;
        for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 10.0 + 10.0 * u01(rng)});
        const BuildingModel model =
            BuildingModel::create(zs, edges, default_ahu(n), 1800.0, 3);
        ExogenousSeries exo = flat_exo(model);
        const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
        for (int i = 0; i < n; ++i) {
            double row = dyn.a_self[i] +
                         1800.0 / (model.zone(i).capacitance * model.zone(i).r_out);
            for (const auto& [j, a] : dyn.a_neighbor[static_cast<size_t>(i)]) {
                (void)j;
                row += a;
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-14));
        }
        for (const auto& e : model.coupling()) {
            double a_ij = 0.0, a_ji = 0.0;
            for (const auto& [j, a] : dyn.a_neighbor[static_cast<size_t>(e.i)])
                if (j == e.j) a_ij = a;
            for (const auto& [j, a] : dyn.a_neighbor[static_cast<size_t>(e.j)])
                if (j == e.i) a_ji = a;
            CHECK(a_ij * model.zone(e.i).capacitance ==
                  doctest::Approx(a_ji * model.zone(e.j).capacitance).epsilon(1e-14));
        }
    }
}

TEST_CASE("simulate_step: equilibrium, hand value, cooling monotonicity") {
    const BuildingModel model = chain_model(2, 4);

    SUBCASE("thermal equilibrium is a fixed point") {
        ExogenousSeries exo = flat_exo(model, 25.0, 0.2, 0.0);
        const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
        Eigen::VectorXd temps = Eigen::VectorXd::Constant(2, 25.0);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
        const Eigen::VectorXd next = simulate_step(dyn, temps, x, 0);
        CHECK(next[0] == doctest::Approx(25.0).epsilon(1e-13));
        CHECK(next[1] == doctest::Approx(25.0).epsilon(1e-13));
    }

    SUBCASE("hand-evaluated step") {
        ExogenousSeries exo = flat_exo(model, 30.0, 0.2, 0.5);
        const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
        Eigen::VectorXd temps(2);
        temps << 26.0, 25.0;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
        const Eigen::VectorXd next = simulate_step(dyn, temps, x, 0);
        const double expect =
            dyn.a_self[0] * 26.0 + dyn.a_neighbor[0][0].second * 25.0 + dyn.d_const(0, 0);
        CHECK(next[0] == doctest::Approx(expect).epsilon(1e-15));
    }

    SUBCASE("more cooling strictly lowers the next temperature") {
        ExogenousSeries exo = flat_exo(model, 30.0, 0.2, 0.5);
        const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
        Eigen::VectorXd temps = Eigen::VectorXd::Constant(2, 26.0);
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
        Eigen::VectorXd x1 = x0;
        x1[0] += 0.3;
        const Eigen::VectorXd n0 = simulate_step(dyn, temps, x0, 0);
        const Eigen::VectorXd n1 = simulate_step(dyn, temps, x1, 0);
        CHECK(n1[0] == doctest::Approx(n0[0] + dyn.c_self[0] * 0.3).epsilon(1e-13));
        CHECK(n1[0] < n0[0]);
    }
}

TEST_CASE("simulate_schedule: constant case, cooling, composition identity") {
    const BuildingModel model = chain_model(2, 6);

    SUBCASE("zero flows, no load, ambient at init temperature stays constant") {
        std::vector<ZoneParams> zs(2, default_zone());
        for (auto& z : zs) z.t_init = 25.0;
        const BuildingModel m2 =
            BuildingModel::create(zs, {{0, 1, 14.0}}, default_ahu(2), 1800.0, 6);
        ExogenousSeries exo = flat_exo(m2, 25.0, 0.2, 0.0);
        const Eigen::MatrixXd temps =
            simulate_schedule(m2, exo, Eigen::MatrixXd::Zero(2, 6));
        for (int t = 0; t < 6; ++t) {
            CHECK(temps(0, t) == doctest::Approx(25.0).epsilon(1e-12));
            CHECK(temps(1, t) == doctest::Approx(25.0).epsilon(1e-12));
        }
    }

    SUBCASE("max flow from a hot start cools monotonically with zero load") {
        std::vector<ZoneParams> zs(2, default_zone());
        for (auto& z : zs) z.t_init = 28.0;
        const BuildingModel m2 =
            BuildingModel::create(zs, {{0, 1, 14.0}}, default_ahu(2), 1800.0, 6);
        ExogenousSeries exo = flat_exo(m2, 28.0, 0.2, 0.0);
        const Eigen::MatrixXd temps =
            simulate_schedule(m2, exo, Eigen::MatrixXd::Constant(2, 6, 0.5));
        for (int t = 0; t + 1 < 6; ++t) {
            if (temps(0, t) > exo.t_supply[t]) CHECK(temps(0, t + 1) <= temps(0, t));
        }
    }

    SUBCASE("stage-by-stage composition reproduces the rollout bitwise") {
        ExogenousSeries exo = flat_exo(model);
        std::mt19937_64 rng(3);
        Eigen::MatrixXd flows(2, 6);
        for (int i = 0; i < 2; ++i)
            for (int t = 0; t < 6; ++t) flows(i, t) = 0.5 * u01(rng);
        const Eigen::MatrixXd temps = simulate_schedule(model, exo, flows);
        const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
        Eigen::VectorXd cur = temps.col(0);
        for (int t = 0; t + 1 < 6; ++t) {
            Eigen::VectorXd x(2);
            for (int i = 0; i < 2; ++i) x[i] = flows(i, t) * (cur[i] - exo.t_supply[t]);
            cur = simulate_step(dyn, cur, x, t);
            for (int i = 0; i < 2; ++i) CHECK(cur[i] == temps(i, t + 1));
        }
    }
}

TEST_CASE("series validation rejects mismatched lengths and warm setpoints") {
    const BuildingModel model = chain_model(2, 4);
    ExogenousSeries exo = flat_exo(model);
    exo.price.resize(3);
    CHECK_THROWS_AS(validate_series(model, exo), ModelError);

    ExogenousSeries exo2 = flat_exo(model);
    exo2.t_supply[2] = 24.5;  // not below the band
    CHECK_THROWS_AS(validate_series(model, exo2), ModelError);
}
