#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hfl/consensus.hpp"
#include "hfl/control.hpp"
#include "hfl/model.hpp"
#include "hfl/network.hpp"
#include "hfl/sampling.hpp"
#include "hfl/theory.hpp"

namespace hfl {

// ParamShare: leaves take one gradient step and relay scaled parameters; the
// server divides by the active data count. GradShare: leaves relay scaled raw
// gradients and the server applies a decaying step to the aggregate.
enum class ShareVariant { ParamShare, GradShare };

struct ClusterDiag {
    int cluster = -1;
    int layer = 0;
    double size = 0.0;
    double edge_count = 0.0;
    double lambda = 0.0;
    int theta = 0;
    int flood_rounds = 0;
    double divergence_est = 0.0;   // flooded norm range (adaptive policies only)
    double divergence_true = 0.0;  // exact pairwise spread at mixing time
    double consensus_err = 0.0;    // realized |c| over the whole cluster
    bool lut = false;
    bool active = true;
};

struct GlobalRound {
    int k = 0;
    ParamVector w_out;
    double loss = 0.0;
    double accuracy = 0.0;
    double agg_error = 0.0;    // |aggregate - exact weighted average|
    double error_bound = 0.0;  // (phi / d_active^2) * composite, true divergences
    double d_active = 0.0;
    double grad_norm_est = 0.0;  // slack driver used this round, 0 if none
    std::vector<ClusterDiag> clusters;  // by cluster id
    std::vector<double> theta_mean;     // per layer 1..depth, mixing clusters only
};

// Static per-run wiring: hierarchy, per-cluster communication graphs, cluster
// modes, and the leaf model. Leaf i of the model holds the data of
// h.leaf_ids()[i]; create() stamps the counts into the hierarchy.
struct SimSetup {
    const NetworkHierarchy* h = nullptr;
    const Model* model = nullptr;
    std::vector<ClusterTopology> topology;  // by cluster id
    std::vector<ClusterMode> mode;          // by cluster id
    std::vector<int> leaf_slot;             // node id -> model leaf index, -1 otherwise
    SystemConsts consts;

    static SimSetup create(NetworkHierarchy& h, const Model& model,
                           std::vector<ClusterTopology> topology,
                           std::vector<ClusterMode> mode);
};

struct RoundSpec {
    int k = 1;
    ShareVariant variant = ShareVariant::ParamShare;
    double beta_leaf = 0.0;       // leaf step size (ParamShare)
    double beta_apply = 0.0;      // server step size (GradShare)
    double grad_norm_est = 0.0;   // adaptive slack driver
    const RoundActivation* activation = nullptr;  // null = everyone
    const std::vector<ClusterMode>* mode_override = nullptr;
    bool force_eut = false;
    bool track_accuracy = true;
};

// One global iteration, bottom-up: leaf work, per-cluster mixing or direct
// summation, uniform child sampling for mixing clusters, server average.
GlobalRound run_global_round(const SimSetup& s, const PolicyConfig& policy, const ParamVector& w,
                       std::uint64_t seed, const RoundSpec& spec);

struct TrainOptions {
    int rounds = 0;
    ShareVariant variant = ShareVariant::ParamShare;
    double alpha = 0.0;        // GradShare: beta_k = alpha / (k + lambda_step)
    double lambda_step = 0.0;
    double sampling_fraction = 1.0;
    std::uint64_t seed = 1;
    bool force_eut = false;
    bool track_accuracy = true;
    double lut_probability = -1.0;  // in [0,1]: redraw cluster modes per round
};

struct TrainResult {
    std::vector<GlobalRound> rounds;
    std::vector<std::string> warnings;
};

TrainResult run_training(const SimSetup& s, const PolicyConfig& policy, ParamVector w0,
                         const TrainOptions& opt);

}  // namespace hfl
