#include "hfl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hfl {

namespace {

Traffic traffic_filtered(const GlobalRound& r, int m, double duplex_factor, int only_layer) {
    Traffic t;
    for (const ClusterDiag& d : r.clusters) {
        if (!d.active) continue;
        if (only_layer >= 0 && d.layer != only_layer) continue;
        if (d.lut) {
            t.d2d_params += static_cast<double>(d.theta) * duplex_factor * d.edge_count *
                            static_cast<double>(m);
            t.d2d_params += 2.0 * d.edge_count * static_cast<double>(d.flood_rounds);
            t.uplink_params += static_cast<double>(m);
        } else {
            t.uplink_params += d.size * static_cast<double>(m);
        }
    }
    return t;
}

void append_g17(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

}  // namespace

Traffic round_traffic(const GlobalRound& r, int m, double duplex_factor) {
    return traffic_filtered(r, m, duplex_factor, -1);
}

Traffic round_traffic_bottom(const GlobalRound& r, int m, double duplex_factor) {
    return traffic_filtered(r, m, duplex_factor, static_cast<int>(r.theta_mean.size()));
}

double watts_from_dbm(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double round_energy(const Traffic& bottom, const EnergyModel& em) {
    const double bits = static_cast<double>(em.bits_per_param);
    const double d2d_seconds = bottom.d2d_params * bits / em.rate_bps;
    const double uplink_seconds = bottom.uplink_params * bits / em.rate_bps;
    return d2d_seconds * watts_from_dbm(em.p_d2d_dbm) +
           uplink_seconds * watts_from_dbm(em.p_uplink_dbm);
}

RunSummary summarize(const std::vector<GlobalRound>& rounds,
                     const std::vector<Traffic>& per_round, const std::vector<double>& energy_j) {
    if (per_round.size() != rounds.size() || energy_j.size() != rounds.size())
        throw std::invalid_argument("summarize: per-round series lengths disagree");
    RunSummary s;
    s.rounds = static_cast<int>(rounds.size());
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        s.total_d2d += per_round[i].d2d_params;
        s.total_uplink += per_round[i].uplink_params;
        s.total_energy_j += energy_j[i];
    }
    if (!rounds.empty()) {
        s.final_loss = rounds.back().loss;
        s.final_accuracy = rounds.back().accuracy;
        if (s.final_accuracy > 0.0) {
            const double target = 0.98 * s.final_accuracy;
            for (const GlobalRound& r : rounds) {
                if (r.accuracy >= target) {
                    s.rounds_to_target = r.k;
                    break;
                }
            }
        }
    }
    return s;
}

namespace {

double pct_saving(double baseline, double candidate) {
    if (baseline == 0.0) return 0.0;
    return (baseline - candidate) / baseline * 100.0;
}

}  // namespace

Savings compare_runs(const RunSummary& baseline, const RunSummary& candidate) {
    Savings s;
    s.energy_pct = pct_saving(baseline.total_energy_j, candidate.total_energy_j);
    s.d2d_pct = pct_saving(baseline.total_d2d, candidate.total_d2d);
    s.uplink_pct = pct_saving(baseline.total_uplink, candidate.total_uplink);
    if (baseline.rounds_to_target >= 0 && candidate.rounds_to_target >= 0)
        s.rounds_delta = candidate.rounds_to_target - baseline.rounds_to_target;
    return s;
}

void write_trajectory_csv(std::ostream& os, const std::vector<GlobalRound>& rounds,
                          const std::vector<Traffic>& per_round,
                          const std::vector<double>& energy_j, const std::vector<double>& bound,
                          int depth, const CsvMeta& meta) {
    if (per_round.size() != rounds.size() || energy_j.size() != rounds.size())
        throw std::invalid_argument("write_trajectory_csv: per-round series lengths disagree");
    if (!bound.empty() && bound.size() != rounds.size())
        throw std::invalid_argument("write_trajectory_csv: bound series length mismatch");
    std::string text;
    text += "# config_digest=" + meta.config_digest + "\n";
    text += "# dataset_digest=" + meta.dataset_digest + "\n";
    text += "# hierarchy_digest=" + meta.hierarchy_digest + "\n";
    text += "k,loss,acc";
    for (int j = 1; j <= depth; ++j) text += ",theta_mean_L" + std::to_string(j);
    text += ",d2d_params,uplink_params,energy_j,agg_err,bound_thm1\n";
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        const GlobalRound& r = rounds[i];
        if (static_cast<int>(r.theta_mean.size()) != depth)
            throw std::invalid_argument("write_trajectory_csv: layer count mismatch");
        text += std::to_string(r.k);
        text += ',';
        append_g17(text, r.loss);
        text += ',';
        append_g17(text, r.accuracy);
        for (double tm : r.theta_mean) {
            text += ',';
            append_g17(text, tm);
        }
        text += ',';
        append_g17(text, per_round[i].d2d_params);
        text += ',';
        append_g17(text, per_round[i].uplink_params);
        text += ',';
        append_g17(text, energy_j[i]);
        text += ',';
        append_g17(text, r.agg_error);
        text += ',';
        append_g17(text, bound.empty() ? 0.0 : bound[i]);
        text += '\n';
    }
    os << text;
}

TrajectoryFile read_trajectory_csv(std::istream& is) {
    TrajectoryFile out;
    std::string line;
    bool header_seen = false;
    int theta_cols = -1;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            std::string val = line.substr(eq + 1);
            while (!key.empty() && key.front() == ' ') key.erase(key.begin());
            while (!key.empty() && key.back() == ' ') key.pop_back();
            if (key == "config_digest") out.meta.config_digest = val;
            if (key == "dataset_digest") out.meta.dataset_digest = val;
            if (key == "hierarchy_digest") out.meta.hierarchy_digest = val;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header_seen) {
            if (cells.size() < 8 || cells[0] != "k")
                throw std::runtime_error("trajectory csv: unrecognized header row");
            theta_cols = static_cast<int>(cells.size()) - 8;
            header_seen = true;
            continue;
        }
        if (static_cast<int>(cells.size()) != theta_cols + 8)
            throw std::runtime_error("trajectory csv: ragged row");
        TrajectoryRow row;
        std::size_t c = 0;
        row.k = std::stoi(cells[c++]);
        row.loss = std::stod(cells[c++]);
        row.acc = std::stod(cells[c++]);
        for (int j = 0; j < theta_cols; ++j) row.theta_mean.push_back(std::stod(cells[c++]));
        row.d2d_params = std::stod(cells[c++]);
        row.uplink_params = std::stod(cells[c++]);
        row.energy_j = std::stod(cells[c++]);
        row.agg_err = std::stod(cells[c++]);
        row.bound_thm1 = std::stod(cells[c++]);
        out.rows.push_back(std::move(row));
    }
    if (!header_seen) throw std::runtime_error("trajectory csv: no header row found");
    return out;
}

}  // namespace hfl
