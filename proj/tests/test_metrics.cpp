// Traffic and energy accounting against hand-counted rounds, the CSV
// round-trip, and run summaries.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hfl/metrics.hpp"

using namespace hfl;

namespace {

ClusterDiag diag(int cluster, int layer, int size, std::uint64_t edges, int theta, int flood,
                 bool lut, bool active = true) {
    ClusterDiag d;
    d.cluster = cluster;
    d.layer = layer;
    d.size = size;
    d.edge_count = edges;
    d.theta = theta;
    d.flood_rounds = flood;
    d.lut = lut;
    d.active = active;
    return d;
}

// the 1-5-25 tree: one cluster at layer 1, five at 2, twenty-five at 3
GlobalRound tree_round(int theta, bool lut, int flood) {
    GlobalRound r;
    r.k = 1;
    int id = 0;
    r.clusters.push_back(diag(id++, 1, 5, 10, theta, flood, lut));
    for (int i = 0; i < 5; ++i) r.clusters.push_back(diag(id++, 2, 5, 10, theta, flood, lut));
    for (int i = 0; i < 25; ++i) r.clusters.push_back(diag(id++, 3, 5, 10, theta, flood, lut));
    r.theta_mean.assign(3, static_cast<double>(theta));
    return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("dbm arithmetic, frozen") {
    CHECK(watts_from_dbm(10.0) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(watts_from_dbm(30.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(watts_from_dbm(24.0) / watts_from_dbm(10.0) ==
          doctest::Approx(std::pow(10.0, 1.4)).epsilon(1e-9));
}

TEST_CASE("single upload of 7850 params costs about 63 millijoules") {
    EnergyModel em;
    Traffic t;
    t.uplink_params = 7850.0;
    const double e = round_energy(t, em);
    CHECK(e == doctest::Approx(7850.0 * 32.0 / 1e6 * std::pow(10.0, -0.6)).epsilon(1e-12));
    CHECK(e == doctest::Approx(0.0631).epsilon(1e-3));

    Traffic d;
    d.d2d_params = 7850.0;
    CHECK(round_energy(d, em) == doctest::Approx(0.002512).epsilon(1e-3));
    CHECK(round_energy(Traffic{}, em) == 0.0);
}

TEST_CASE("direct-upload tree moves (125+25+5) params per unit length") {
    const auto r = tree_round(0, false, 0);
    const auto t = round_traffic(r, 1, 2.0);
    CHECK(t.uplink_params == 155.0);
    CHECK(t.d2d_params == 0.0);

    const auto m7 = round_traffic(r, 7, 2.0);
    CHECK(m7.uplink_params == 155.0 * 7);
}

TEST_CASE("mixing tree uploads one sample per cluster") {
    const auto r = tree_round(0, true, 0);  // fixed policy: no flood
    const auto t = round_traffic(r, 1, 2.0);
    CHECK(t.uplink_params == 31.0);  // 25 + 5 + 1
    CHECK(t.d2d_params == 0.0);      // theta = 0 and no divergence flood
}

TEST_CASE("mixing traffic counts edges, rounds, duplex and flood scalars") {
    const auto r = tree_round(3, true, 2);
    const int m = 11;
    const auto t = round_traffic(r, m, 2.0);
    // per cluster: theta * duplex * |E| * m + 2 scalars * |E| * flood rounds
    const double per_cluster = 3.0 * 2.0 * 10.0 * m + 2.0 * 10.0 * 2.0;
    CHECK(t.d2d_params == doctest::Approx(31.0 * per_cluster).epsilon(1e-15));
    CHECK(t.uplink_params == 31.0 * m);

    // half duplex halves the mixing share only
    const auto h = round_traffic(r, m, 1.0);
    CHECK(h.d2d_params == doctest::Approx(31.0 * (3.0 * 1.0 * 10.0 * m + 40.0)).epsilon(1e-15));
}

TEST_CASE("bottom restriction keeps only the leaf layer") {
    const auto r = tree_round(2, true, 1);
    const int m = 4;
    const auto bottom = round_traffic_bottom(r, m, 2.0);
    const double per_cluster = 2.0 * 2.0 * 10.0 * m + 2.0 * 10.0 * 1.0;
    CHECK(bottom.d2d_params == doctest::Approx(25.0 * per_cluster).epsilon(1e-15));
    CHECK(bottom.uplink_params == 25.0 * m);
}

TEST_CASE("inactive clusters move nothing") {
    auto r = tree_round(2, true, 1);
    for (auto& c : r.clusters)
        if (c.layer == 3 && c.cluster % 2 == 0) c.active = false;
    const auto t = round_traffic(r, 1, 2.0);
    int active_total = 0;
    for (const auto& c : r.clusters) active_total += c.active ? 1 : 0;
    CHECK(t.uplink_params == static_cast<double>(active_total));
}

TEST_CASE("mixing uploads less than direct upload whenever clusters are real") {
    for (int m : {1, 10, 105}) {
        const auto lut = round_traffic(tree_round(5, true, 0), m, 2.0);
        const auto eut = round_traffic(tree_round(0, false, 0), m, 2.0);
        CHECK(lut.uplink_params < eut.uplink_params);
    }
}

TEST_CASE("energy grows with the mixing round count") {
    EnergyModel em;
    double prev = -1.0;
    for (int theta : {0, 1, 2, 5, 9}) {
        const auto t = round_traffic_bottom(tree_round(theta, true, 0), 10, 2.0);
        const double e = round_energy(t, em);
        CHECK(e > prev);
        prev = e;
    }
}

TEST_CASE("summaries total the series and find the accuracy knee") {
    std::vector<GlobalRound> rounds(4);
    std::vector<Traffic> traffic(4);
    std::vector<double> energy(4);
    for (int k = 0; k < 4; ++k) {
        rounds[static_cast<std::size_t>(k)].k = k + 1;
        rounds[static_cast<std::size_t>(k)].loss = 1.0 / (k + 1);
        rounds[static_cast<std::size_t>(k)].accuracy = 0.5 + 0.1 * k;
        traffic[static_cast<std::size_t>(k)].d2d_params = 10.0;
        traffic[static_cast<std::size_t>(k)].uplink_params = 5.0;
        energy[static_cast<std::size_t>(k)] = 0.25;
    }
    const auto s = summarize(rounds, traffic, energy);
    CHECK(s.rounds == 4);
    CHECK(s.final_loss == 0.25);
    CHECK(s.final_accuracy == 0.8);
    CHECK(s.total_d2d == 40.0);
    CHECK(s.total_uplink == 20.0);
    CHECK(s.total_energy_j == 1.0);
    // 98% of 0.8 = 0.784: first reached at accuracy 0.8, round 4
    CHECK(s.rounds_to_target == 4);

    const auto none = summarize({}, {}, {});
    CHECK(none.rounds == 0);
    CHECK(none.rounds_to_target == -1);

    std::vector<Traffic> short_traffic(3);
    CHECK_THROWS_AS(summarize(rounds, short_traffic, energy), std::invalid_argument);
}

TEST_CASE("savings against a baseline") {
    RunSummary base;
    base.total_energy_j = 2.0;
    base.total_d2d = 100.0;
    base.total_uplink = 400.0;
    base.rounds_to_target = 10;
    RunSummary cand = base;
    const auto zero = compare_runs(base, cand);
    CHECK(zero.energy_pct == 0.0);
    CHECK(zero.uplink_pct == 0.0);
    CHECK(zero.rounds_delta == 0);

    cand.total_energy_j = 1.0;
    cand.total_uplink = 100.0;
    cand.rounds_to_target = 12;
    const auto s = compare_runs(base, cand);
    CHECK(s.energy_pct == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(s.uplink_pct == doctest::Approx(75.0).epsilon(1e-12));
    CHECK(s.rounds_delta == 2);
}

TEST_CASE("trajectory file round-trips bit for bit") {
    std::vector<GlobalRound> rounds(3);
    std::vector<Traffic> traffic(3);
    std::vector<double> energy(3), bound(3);
    for (int k = 0; k < 3; ++k) {
        auto& r = rounds[static_cast<std::size_t>(k)];
        r.k = k + 1;
        r.loss = 0.1 + 1e-17 + k * 0.3333333333333333;
        r.accuracy = 0.97 + 0.001 * k;
        r.agg_error = 1.25e-9 * (k + 1);
        r.theta_mean = {1.0 + k, 0.5 * k};
        traffic[static_cast<std::size_t>(k)] = {1000.0 + k, 500.0};
        energy[static_cast<std::size_t>(k)] = 0.001 * (k + 1);
        bound[static_cast<std::size_t>(k)] = 2.0 / (k + 1);
    }
    CsvMeta meta{"cfg123", "data456", "tree789"};
    std::ostringstream os;
    write_trajectory_csv(os, rounds, traffic, energy, bound, 2, meta);

    std::istringstream is(os.str());
    const auto file = read_trajectory_csv(is);
    CHECK(file.meta.config_digest == "cfg123");
    CHECK(file.meta.dataset_digest == "data456");
    CHECK(file.meta.hierarchy_digest == "tree789");
    REQUIRE(file.rows.size() == 3);
    for (int k = 0; k < 3; ++k) {
        const auto& row = file.rows[static_cast<std::size_t>(k)];
        const auto& r = rounds[static_cast<std::size_t>(k)];
        CHECK(row.k == r.k);
        CHECK(row.loss == r.loss);  // %.17g is lossless for doubles
        CHECK(row.acc == r.accuracy);
        CHECK(row.agg_err == r.agg_error);
        REQUIRE(row.theta_mean.size() == 2);
        CHECK(row.theta_mean[0] == r.theta_mean[0]);
        CHECK(row.theta_mean[1] == r.theta_mean[1]);
        CHECK(row.d2d_params == traffic[static_cast<std::size_t>(k)].d2d_params);
        CHECK(row.energy_j == energy[static_cast<std::size_t>(k)]);
        CHECK(row.bound_thm1 == bound[static_cast<std::size_t>(k)]);
    }

    // two writes of the same series are byte-identical
    std::ostringstream again;
    write_trajectory_csv(again, rounds, traffic, energy, bound, 2, meta);
    CHECK(again.str() == os.str());
}

TEST_CASE("trajectory reader rejects ragged rows") {
    std::istringstream is("# config_digest=a\n# dataset_digest=b\n# hierarchy_digest=c\n"
                          "k,loss,acc,theta_mean_L1,d2d_params,uplink_params,energy_j,agg_err,bound_thm1\n"
                          "1,0.5,0.9,2\n");
    CHECK_THROWS_AS(read_trajectory_csv(is), std::runtime_error);
}

}  // TEST_SUITE
