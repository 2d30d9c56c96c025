#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hfl/protocol.hpp"

namespace hfl {

struct EnergyModel {
    double p_d2d_dbm = 10.0;
    double p_uplink_dbm = 24.0;
    double rate_bps = 1e6;
    int bits_per_param = 32;
    double duplex_factor = 2.0;  // directed transmissions per undirected edge per round
    double delay_s = 0.25;       // carried in config for completeness; no metric uses it
};

struct Traffic {
    double d2d_params = 0.0;  // mixing payloads plus divergence-flood scalars
    double uplink_params = 0.0;

    Traffic& operator+=(const Traffic& o) {
        d2d_params += o.d2d_params;
        uplink_params += o.uplink_params;
        return *this;
    }
};

// Parameter counts one round moved across the whole tree. Mixing clusters pay
// theta * duplex_factor * |E| * m over D2D plus one sampled upload of m;
// direct clusters pay |C| * m uplink. Flood rounds add 2 scalars per edge per
// round. Inactive clusters moved nothing.
Traffic round_traffic(const GlobalRound& r, int m, double duplex_factor);

// Same, restricted to bottom-layer clusters; those transmitters are the edge
// devices whose battery the energy metric prices.
Traffic round_traffic_bottom(const GlobalRound& r, int m, double duplex_factor);

double watts_from_dbm(double dbm);

// Joules for one round of bottom-layer traffic at the model's powers.
double round_energy(const Traffic& bottom, const EnergyModel& em);

struct RunSummary {
    int rounds = 0;
    double final_loss = 0.0;
    double final_accuracy = 0.0;
    double total_d2d = 0.0;
    double total_uplink = 0.0;
    double total_energy_j = 0.0;
    int rounds_to_target = -1;  // first round at 98% of the final accuracy
};

RunSummary summarize(const std::vector<GlobalRound>& rounds,
                     const std::vector<Traffic>& per_round, const std::vector<double>& energy_j);

struct Savings {
    double energy_pct = 0.0;  // positive = candidate cheaper than baseline
    double d2d_pct = 0.0;
    double uplink_pct = 0.0;
    int rounds_delta = 0;
};

Savings compare_runs(const RunSummary& baseline, const RunSummary& candidate);

struct CsvMeta {
    std::string config_digest;
    std::string dataset_digest;
    std::string hierarchy_digest;
};

// One row per round:
// k,loss,acc,theta_mean_L1..L<depth>,d2d_params,uplink_params,energy_j,agg_err,bound_thm1
// preceded by '#' digest lines. Doubles printed with %.17g; byte-stable.
void write_trajectory_csv(std::ostream& os, const std::vector<GlobalRound>& rounds,
                          const std::vector<Traffic>& per_round,
                          const std::vector<double>& energy_j, const std::vector<double>& bound,
                          int depth, const CsvMeta& meta);

struct TrajectoryRow {
    int k = 0;
    double loss = 0.0;
    double acc = 0.0;
    std::vector<double> theta_mean;
    double d2d_params = 0.0;
    double uplink_params = 0.0;
    double energy_j = 0.0;
    double agg_err = 0.0;
    double bound_thm1 = 0.0;
};

struct TrajectoryFile {
    CsvMeta meta;
    std::vector<TrajectoryRow> rows;
};

TrajectoryFile read_trajectory_csv(std::istream& is);

}  // namespace hfl
