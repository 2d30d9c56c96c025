#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hfl/config.hpp"
#include "hfl/metrics.hpp"

namespace hfl {

struct CliOverrides {
    bool dry_run = false;
    bool force_eut = false;  // baseline: every cluster uploads directly
    bool force_bound = false;
    std::vector<std::uint64_t> seed_override;
    std::string out_dir = ".";
};

// Everything assembled from one config: data, partition, tree, per-cluster
// graphs, loss machinery. SimSetup points into hierarchy and model, so the
// struct is pinned (no copies).
struct BuiltExperiment {
    Dataset dataset;
    Partition partition;
    NetworkHierarchy hierarchy;
    std::unique_ptr<Model> model;
    SimSetup setup;
    std::string dataset_digest;
    std::string hierarchy_digest;

    BuiltExperiment() = default;
    BuiltExperiment(const BuiltExperiment&) = delete;
    BuiltExperiment& operator=(const BuiltExperiment&) = delete;
};

std::unique_ptr<BuiltExperiment> build_experiment(const ExperimentConfig& cfg);

struct SeedRunOutput {
    std::uint64_t seed = 0;
    TrainResult train;
    std::vector<Traffic> traffic;     // whole-network, per round
    std::vector<double> energy_j;     // bottom-layer, per round
    std::vector<double> bound;        // optimality-gap bound, empty when disabled
    RunSummary summary;
};

struct ExperimentOutput {
    std::vector<SeedRunOutput> per_seed;
    PolicyConfig resolved_policy;  // derived sigma / delta filled in
    double f_star = 0.0;
    double f0_gap = 0.0;
    bool oracle_ran = false;
    std::vector<std::string> warnings;
};

// Runs every seed (in parallel) over a prebuilt experiment. The oracle long
// run happens once when a policy derivation or the bound column needs it.
ExperimentOutput run_experiment(const BuiltExperiment& built, const ExperimentConfig& cfg,
                                const CliOverrides& cli);

// Full pipeline: build, dry-run printing or run, CSV + summary emission.
// Returns a process exit code.
int run_experiment_to_files(const std::string& config_path, const CliOverrides& cli,
                            std::ostream& out, std::ostream& err);

// Paired savings between two trajectory CSVs at a matched target loss.
// Refuses mismatched or absent dataset/hierarchy digests.
int compare_trajectories(const std::string& baseline_path, const std::string& candidate_path,
                         std::ostream& out, std::ostream& err);

}  // namespace hfl
