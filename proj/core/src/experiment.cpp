#include "hfl/experiment.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "hfl/digest.hpp"
#include "hfl/theory.hpp"

namespace hfl {

namespace {

constexpr std::uint64_t kTagBlobs = 0x626c6f62;
constexpr std::uint64_t kTagPartition = 0x70617274;
constexpr std::uint64_t kTagTopology = 0x746f706f;

std::string dataset_digest_of(const Dataset& ds) {
    std::uint64_t h = kFnvOffset;
    const std::int64_t rows = ds.features.rows();
    const std::int64_t cols = ds.features.cols();
    h = fnv1a(&rows, sizeof rows, h);
    h = fnv1a(&cols, sizeof cols, h);
    h = fnv1a(ds.labels.data(), ds.labels.size() * sizeof(int), h);
    h = fnv1a(ds.features.data(), static_cast<std::size_t>(rows * cols) * sizeof(double), h);
    return hex64(h);
}

std::string hierarchy_digest_of(const NetworkHierarchy& h) {
    std::string text;
    for (const auto& layer : h.layers) text += std::to_string(layer.size()) + ";";
    text += "|";
    for (const Node& n : h.nodes)
        text += std::to_string(n.parent) + ":" + std::to_string(n.data_count) + ";";
    return hex64(fnv1a(text));
}

std::vector<ClusterRoundStat> stats_of(const GlobalRound& r) {
    std::vector<ClusterRoundStat> out;
    out.reserve(r.clusters.size());
    for (const ClusterDiag& d : r.clusters)
        out.push_back({d.size, d.lambda, d.theta, d.divergence_true, d.lut && d.active});
    return out;
}

}  // namespace

std::unique_ptr<BuiltExperiment> build_experiment(const ExperimentConfig& cfg) {
    auto b = std::make_unique<BuiltExperiment>();
    b->hierarchy = build_hierarchy(cfg.hierarchy);
    const auto n_leaves = static_cast<int>(b->hierarchy.leaf_ids().size());

    if (cfg.data_kind == ExperimentConfig::DataKind::Blobs) {
        Rng blob_rng(mix_seed(cfg.data_seed, kTagBlobs));
        b->dataset = make_blobs(static_cast<std::int64_t>(n_leaves) * cfg.samples_per_leaf,
                                cfg.features, cfg.classes, cfg.spread, cfg.center_scale, blob_rng);
    } else {
        b->dataset = load_idx(cfg.mnist_dir + "/train-images-idx3-ubyte",
                              cfg.mnist_dir + "/train-labels-idx1-ubyte");
    }

    Rng part_rng(mix_seed(cfg.data_seed, kTagPartition));
    b->partition = partition(b->dataset, n_leaves, cfg.partition, part_rng);
    b->model = std::make_unique<Model>(b->dataset, b->partition.assignment, cfg.loss);

    std::vector<ClusterTopology> topo;
    topo.reserve(b->hierarchy.clusters.size());
    for (std::size_t cid = 0; cid < b->hierarchy.clusters.size(); ++cid) {
        Rng trng(mix_seed(cfg.topo_seed, kTagTopology, cid));
        ClusterTopology t = generate_rgg_topology(
            static_cast<int>(b->hierarchy.clusters[cid].members.size()), cfg.comm_range_m,
            cfg.disc_radius_m, trng);
        finalize_topology(t, cfg.edge_weight);
        topo.push_back(std::move(t));
    }
    std::vector<ClusterMode> modes(b->hierarchy.clusters.size(), cfg.cluster_mode);
    b->setup = SimSetup::create(b->hierarchy, *b->model, std::move(topo), std::move(modes));
    b->dataset_digest = dataset_digest_of(b->dataset);
    b->hierarchy_digest = hierarchy_digest_of(b->hierarchy);
    return b;
}

ExperimentOutput run_experiment(const BuiltExperiment& built, const ExperimentConfig& cfg,
                                const CliOverrides& cli) {
    ExperimentOutput out;
    out.resolved_policy = cfg.policy;
    const Model& model = *built.model;
    const SystemConsts& consts = built.setup.consts;
    const bool want_bound = cfg.emit_bound || cli.force_bound;
    const bool need_oracle = cfg.derive_sigma || cfg.derive_delta || want_bound;

    ParamVector w0 = ParamVector::Zero(model.dim());
    if (need_oracle) {
        const int budget = cfg.oracle_budget_factor * std::max(cfg.rounds, 1);
        out.f_star = reference_optimum(model, w0, budget);
        out.f0_gap = model.global_loss(w0) - out.f_star;
        out.oracle_ran = true;
        if (cfg.derive_sigma)
            out.resolved_policy.sigma =
                sigma_for_gap_target(consts, cfg.epsilon, cfg.kappa, out.f0_gap);
        if (cfg.derive_delta) {
            const DeltaChoice dc =
                delta_for_target(cfg.epsilon, out.f0_gap, cfg.kappa, consts.mu / consts.eta);
            out.resolved_policy.delta = dc.delta;
            if (dc.clamped) {
                std::ostringstream os;
                os << "target contraction needed delta above mu/eta = " << consts.mu / consts.eta
                   << "; clamped";
                out.warnings.push_back(os.str());
            }
        }
    }

    const std::vector<std::uint64_t>& seeds =
        cli.seed_override.empty() ? cfg.seeds : cli.seed_override;
    out.per_seed.resize(seeds.size());
    std::vector<std::exception_ptr> failures(seeds.size());

    auto worker = [&](std::size_t i) {
        try {
            SeedRunOutput& s = out.per_seed[i];
            s.seed = seeds[i];
            TrainOptions opt;
            opt.rounds = cfg.rounds;
            opt.variant = cfg.variant;
            opt.alpha = cfg.alpha;
            opt.lambda_step = cfg.lambda_step;
            opt.sampling_fraction = cfg.sampling_fraction;
            opt.seed = seeds[i];
            opt.force_eut = cli.force_eut;
            opt.track_accuracy = cfg.track_accuracy;
            opt.lut_probability = cfg.lut_probability;
            s.train = run_training(built.setup, out.resolved_policy, w0, opt);

            const int m = model.dim();
            std::vector<std::vector<ClusterRoundStat>> acc;
            for (const GlobalRound& r : s.train.rounds) {
                s.traffic.push_back(round_traffic(r, m, cfg.energy.duplex_factor));
                s.energy_j.push_back(
                    round_energy(round_traffic_bottom(r, m, cfg.energy.duplex_factor),
                                 cfg.energy));
                if (out.oracle_ran && want_bound) {
                    acc.push_back(stats_of(r));
                    s.bound.push_back(optimality_bound(consts, out.f0_gap, acc,
                                                       static_cast<int>(acc.size())));
                }
            }
            s.summary = summarize(s.train.rounds, s.traffic, s.energy_j);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };

    if (seeds.size() == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(seeds.size());
        for (std::size_t i = 0; i < seeds.size(); ++i) pool.emplace_back(worker, i);
        for (auto& t : pool) t.join();
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    for (const SeedRunOutput& s : out.per_seed)
        for (const std::string& w : s.train.warnings) {
            bool seen = false;
            for (const std::string& have : out.warnings) seen = seen || have == w;
            if (!seen) out.warnings.push_back(w);
        }
    return out;
}

namespace {

std::string config_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

}  // namespace

int run_experiment_to_files(const std::string& config_path, const CliOverrides& cli,
                            std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    try {
        cfg = ExperimentConfig::load_file(config_path);
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return 1;
    }

    std::unique_ptr<BuiltExperiment> built;
    try {
        built = build_experiment(cfg);
    } catch (const std::exception& e) {
        err << "failed to build experiment: " << e.what() << "\n";
        return 2;
    }

    if (cli.dry_run) {
        const NetworkHierarchy& h = built->hierarchy;
        out << "phi = " << h.phi() << "\n";
        const auto sizes = h.layer_sizes();
        for (std::size_t j = 0; j < sizes.size(); ++j)
            out << "N_" << j << " = " << sizes[j] << "\n";
        out << "D = " << h.total_data() << "\n";
        return 0;
    }

    ExperimentOutput result;
    try {
        result = run_experiment(*built, cfg, cli);
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << "\n";
        return 2;
    }

    std::error_code ec;
    std::filesystem::create_directories(cli.out_dir, ec);
    if (ec) {
        err << "cannot create output directory " << cli.out_dir << ": " << ec.message() << "\n";
        return 2;
    }

    std::string stem = config_stem(config_path);
    if (cli.force_eut) stem += "_eut";
    CsvMeta meta{hex64(cfg.digest()), built->dataset_digest, built->hierarchy_digest};
    const int depth = built->hierarchy.depth();

    for (const SeedRunOutput& s : result.per_seed) {
        const std::string path =
            cli.out_dir + "/" + stem + "_seed" + std::to_string(s.seed) + ".csv";
        std::ofstream os(path, std::ios::binary);
        if (!os) {
            err << "cannot write " << path << "\n";
            return 2;
        }
        write_trajectory_csv(os, s.train.rounds, s.traffic, s.energy_j, s.bound, depth, meta);
        out << "wrote " << path << "\n";
    }

    const std::string summary_path = cli.out_dir + "/" + stem + "_summary.txt";
    std::ofstream sum(summary_path, std::ios::binary);
    if (!sum) {
        err << "cannot write " << summary_path << "\n";
        return 2;
    }
    sum << "config_digest " << meta.config_digest << "\n";
    if (result.oracle_ran) {
        sum << "f_star " << result.f_star << "\n";
        sum << "f0_gap " << result.f0_gap << "\n";
    }
    for (const SeedRunOutput& s : result.per_seed) {
        sum << "seed " << s.seed << ": rounds " << s.summary.rounds << ", final_loss "
            << s.summary.final_loss << ", final_acc " << s.summary.final_accuracy << ", d2d "
            << s.summary.total_d2d << ", uplink " << s.summary.total_uplink << ", energy_j "
            << s.summary.total_energy_j << ", rounds_to_target " << s.summary.rounds_to_target
            << "\n";
    }
    for (const std::string& w : result.warnings) {
        sum << "warning: " << w << "\n";
        err << "warning: " << w << "\n";
    }
    out << "wrote " << summary_path << "\n";

    const std::string cfg_path = cli.out_dir + "/" + stem + "_effective.cfg";
    std::ofstream cfgos(cfg_path, std::ios::binary);
    cfgos << cfg.effective();
    out << "wrote " << cfg_path << "\n";
    return 0;
}

int compare_trajectories(const std::string& baseline_path, const std::string& candidate_path,
                         std::ostream& out, std::ostream& err) {
    TrajectoryFile base, cand;
    try {
        std::ifstream b(baseline_path);
        if (!b) throw std::runtime_error("cannot open " + baseline_path);
        base = read_trajectory_csv(b);
        std::ifstream c(candidate_path);
        if (!c) throw std::runtime_error("cannot open " + candidate_path);
        cand = read_trajectory_csv(c);
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 1;
    }
    if (base.meta.dataset_digest.empty() || base.meta.hierarchy_digest.empty() ||
        cand.meta.dataset_digest.empty() || cand.meta.hierarchy_digest.empty()) {
        err << "refusing to compare: digest lines missing\n";
        return 1;
    }
    if (base.meta.dataset_digest != cand.meta.dataset_digest ||
        base.meta.hierarchy_digest != cand.meta.hierarchy_digest) {
        err << "refusing to compare: runs used different data or hierarchy\n";
        return 1;
    }
    if (base.rows.empty() || cand.rows.empty()) {
        err << "refusing to compare: empty trajectory\n";
        return 1;
    }

    const double target = std::max(base.rows.back().loss, cand.rows.back().loss);
    struct Cum {
        int k = 0;
        double d2d = 0, uplink = 0, energy = 0;
    };
    const auto reach = [&](const TrajectoryFile& t) {
        Cum c;
        for (const TrajectoryRow& row : t.rows) {
            c.d2d += row.d2d_params;
            c.uplink += row.uplink_params;
            c.energy += row.energy_j;
            c.k = row.k;
            if (row.loss <= target) break;
        }
        return c;
    };
    const Cum b = reach(base);
    const Cum c = reach(cand);
    const auto pct = [](double baseline, double candidate) {
        return baseline == 0.0 ? 0.0 : (baseline - candidate) / baseline * 100.0;
    };
    out << "target_loss " << target << "\n";
    out << "baseline: rounds " << b.k << ", d2d " << b.d2d << ", uplink " << b.uplink
        << ", energy_j " << b.energy << "\n";
    out << "candidate: rounds " << c.k << ", d2d " << c.d2d << ", uplink " << c.uplink
        << ", energy_j " << c.energy << "\n";
    out << "savings: d2d " << pct(b.d2d, c.d2d) << "%, uplink " << pct(b.uplink, c.uplink)
        << "%, energy " << pct(b.energy, c.energy) << "%, rounds_delta " << (c.k - b.k) << "\n";
    return 0;
}

}  // namespace hfl
