#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "hfl/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hierarchical federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::uint64_t> seed_override;
    std::string out_dir = ".";
    bool dry_run = false;
    bool baseline = false;
    bool bound = false;

    CLI::App* run = app.add_subcommand("run", "run the experiment a config describes");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--seed-override", seed_override,
                    "replace the config's seed list for this invocation");
    run->add_option("--out", out_dir, "output directory for CSV and summary files");
    run->add_flag("--dry-run", dry_run, "validate, build the hierarchy, print its shape, exit");
    run->add_flag("--baseline", baseline, "force every cluster to direct upload");
    run->add_flag("--bound", bound, "emit the optimality-gap bound column (runs the oracle)");

    std::string baseline_csv, candidate_csv;
    CLI::App* cmp = app.add_subcommand("compare", "paired savings between two trajectory CSVs");
    cmp->add_option("baseline", baseline_csv, "baseline trajectory CSV")->required();
    cmp->add_option("candidate", candidate_csv, "candidate trajectory CSV")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        hfl::CliOverrides cli;
        cli.dry_run = dry_run;
        cli.force_eut = baseline;
        cli.force_bound = bound;
        cli.seed_override = seed_override;
        cli.out_dir = out_dir;
        return hfl::run_experiment_to_files(config_path, cli, std::cout, std::cerr);
    }
    return hfl::compare_trajectories(baseline_csv, candidate_csv, std::cout, std::cerr);
}
