#include "hfl/protocol.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hfl {

namespace {

constexpr std::uint64_t kTagSample = 0x73616d70;  // child sampling, per (k, cluster)
constexpr std::uint64_t kTagPolicy = 0x706f6c69;  // policy seed draws
constexpr std::uint64_t kTagActive = 0x61637476;  // per-round activation draw
constexpr std::uint64_t kTagMode = 0x6d6f6465;    // per-round mode redraw

double frobenius(const NodeStates& z) { return std::sqrt(z.squaredNorm()); }

}  // namespace

SimSetup SimSetup::create(NetworkHierarchy& h, const Model& model,
                          std::vector<ClusterTopology> topology, std::vector<ClusterMode> mode) {
    if (topology.size() != h.clusters.size())
        throw std::invalid_argument("sim setup: one topology per cluster required");
    if (mode.size() != h.clusters.size())
        throw std::invalid_argument("sim setup: one mode per cluster required");
    const auto& leaves = h.leaf_ids();
    if (static_cast<int>(leaves.size()) != model.leaves())
        throw std::invalid_argument("sim setup: model leaf count does not match hierarchy");
    for (std::size_t c = 0; c < topology.size(); ++c) {
        if (topology[c].n != static_cast<int>(h.clusters[c].members.size()))
            throw std::invalid_argument("sim setup: topology size does not match cluster");
        topology[c].mode = mode[c];
    }
    std::vector<std::uint64_t> counts(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i)
        counts[i] = model.data_count(static_cast<int>(i));
    bind_data_counts(h, counts);

    SimSetup s;
    s.h = &h;
    s.model = &model;
    s.topology = std::move(topology);
    s.mode = std::move(mode);
    s.leaf_slot.assign(h.nodes.size(), -1);
    for (std::size_t i = 0; i < leaves.size(); ++i)
        s.leaf_slot[static_cast<std::size_t>(leaves[i])] = static_cast<int>(i);
    s.consts = SystemConsts::from(h, model.spec().mu, model.spec().eta);
    return s;
}

GlobalRound run_global_round(const SimSetup& s, const PolicyConfig& policy, const ParamVector& w,
                       std::uint64_t seed, const RoundSpec& spec) {
    const NetworkHierarchy& h = *s.h;
    const Model& model = *s.model;
    const int m = model.dim();
    if (w.size() != m) throw std::invalid_argument("run_global_round: parameter length mismatch");
    if (spec.k < 1) throw std::invalid_argument("run_global_round: rounds are 1-based");
    const bool grad_share = spec.variant == ShareVariant::GradShare;
    if (!grad_share && !(spec.beta_leaf > 0.0))
        throw std::invalid_argument("run_global_round: leaf step size must be positive");
    if (grad_share && !(spec.beta_apply > 0.0))
        throw std::invalid_argument("run_global_round: server step size must be positive");

    const RoundActivation* act = spec.activation;
    RoundActivation everyone;
    if (act == nullptr) {
        everyone = activate_all(h);
        act = &everyone;
    }

    GlobalRound out;
    out.k = spec.k;
    out.d_active = act->d_active;
    out.grad_norm_est = policy.kind == PolicyConfig::Kind::LinearRate ? spec.grad_norm_est : 0.0;
    out.clusters.resize(h.clusters.size());

    // leaf work and the exact aggregate it should produce
    std::vector<ParamVector> relay(h.nodes.size(), ParamVector::Zero(m));
    ParamVector exact = ParamVector::Zero(m);
    for (int n : h.leaf_ids()) {
        if (!act->node_active[static_cast<std::size_t>(n)]) continue;
        const int slot = s.leaf_slot[static_cast<std::size_t>(n)];
        const double weight = static_cast<double>(model.data_count(slot));
        ParamVector v = grad_share ? model.leaf_gradient(w, slot)
                                   : ParamVector(w - spec.beta_leaf * model.leaf_gradient(w, slot));
        relay[static_cast<std::size_t>(n)] = weight * v;
        exact += relay[static_cast<std::size_t>(n)];
    }
    exact /= act->d_active;

    std::vector<double> sigma;
    if (policy.adaptive()) sigma = layer_sigmas(policy, s.consts, spec.grad_norm_est);

    const int depth = h.depth();
    std::vector<double> theta_sum(static_cast<std::size_t>(depth), 0.0);
    std::vector<int> theta_cnt(static_cast<std::size_t>(depth), 0);
    double xi_active = 0.0;

    for (int layer = depth; layer >= 1; --layer) {
        for (int cid : h.clusters_at_layer(layer)) {
            const Cluster& cluster = h.clusters[static_cast<std::size_t>(cid)];
            const ClusterTopology& topo = s.topology[static_cast<std::size_t>(cid)];
            const auto members = static_cast<int>(cluster.members.size());
            ClusterDiag& diag = out.clusters[static_cast<std::size_t>(cid)];
            diag.cluster = cid;
            diag.layer = layer;
            diag.size = members;
            diag.edge_count = static_cast<double>(topo.edge_count);
            diag.lambda = topo.lambda;

            if (!act->cluster_active[static_cast<std::size_t>(cid)]) {
                diag.active = false;
                continue;  // parent relay stays zero
            }
            ClusterMode mode = spec.force_eut ? ClusterMode::Eut
                               : spec.mode_override
                                   ? (*spec.mode_override)[static_cast<std::size_t>(cid)]
                                   : s.mode[static_cast<std::size_t>(cid)];
            diag.lut = mode == ClusterMode::Lut;

            NodeStates z(members, m);
            for (int i = 0; i < members; ++i)
                z.row(i) = relay[static_cast<std::size_t>(cluster.members[static_cast<std::size_t>(i)])];
            diag.divergence_true = true_divergence(z);

            ParamVector& up = relay[static_cast<std::size_t>(cluster.parent)];
            if (mode == ClusterMode::Eut) {
                up = ParamVector::Zero(m);
                for (int i = 0; i < members; ++i) up += z.row(i).transpose();
                continue;
            }

            if (policy.kind == PolicyConfig::Kind::Fixed) {
                diag.theta = policy.fixed_theta;
            } else {
                Eigen::VectorXd norms(members);
                for (int i = 0; i < members; ++i) norms[i] = z.row(i).norm();
                const DivergenceEstimate est = estimate_divergence(topo, norms);
                diag.divergence_est = est.value;
                diag.flood_rounds = est.rounds;
                const ClusterStats stats{static_cast<double>(members), topo.lambda, est.value};
                diag.theta = choose_theta(policy, stats, sigma[static_cast<std::size_t>(layer - 1)]);
            }
            theta_sum[static_cast<std::size_t>(layer - 1)] += diag.theta;
            theta_cnt[static_cast<std::size_t>(layer - 1)] += 1;

            NodeStates mixed = run_consensus(topo.weight, z, diag.theta);
            diag.consensus_err = frobenius(consensus_deviation(z, mixed));
            xi_active += static_cast<double>(members) * members * members *
                         std::pow(topo.lambda, 2.0 * diag.theta) * diag.divergence_true *
                         diag.divergence_true;

            Rng pick(mix_seed(seed, kTagSample, static_cast<std::uint64_t>(spec.k),
                              static_cast<std::uint64_t>(cid)));
            const auto chosen = static_cast<int>(pick.integer(static_cast<std::uint64_t>(members)));
            up = static_cast<double>(members) * mixed.row(chosen).transpose();
        }
    }

    ParamVector aggregate = relay[0] / act->d_active;
    out.w_out = grad_share ? ParamVector(w - spec.beta_apply * aggregate) : aggregate;
    out.agg_error = (aggregate - exact).norm();
    out.error_bound = s.consts.phi / (act->d_active * act->d_active) * xi_active;
    out.loss = model.global_loss(out.w_out);
    out.accuracy = spec.track_accuracy ? model.accuracy(out.w_out) : 0.0;
    out.theta_mean.resize(static_cast<std::size_t>(depth), 0.0);
    for (int j = 0; j < depth; ++j)
        if (theta_cnt[static_cast<std::size_t>(j)] > 0)
            out.theta_mean[static_cast<std::size_t>(j)] =
                theta_sum[static_cast<std::size_t>(j)] / theta_cnt[static_cast<std::size_t>(j)];
    return out;
}

TrainResult run_training(const SimSetup& s, const PolicyConfig& policy, ParamVector w0,
                         const TrainOptions& opt) {
    TrainResult result;
    if (opt.rounds < 0) throw std::invalid_argument("run_training: negative round count");
    const bool grad_share = opt.variant == ShareVariant::GradShare;
    if (grad_share) {
        if (!(opt.alpha > 1.0 / s.consts.mu))
            throw std::invalid_argument("run_training: gradient relaying needs alpha > 1/mu");
        if (!(opt.lambda_step > 1.0))
            throw std::invalid_argument("run_training: gradient relaying needs lambda_step > 1");
        const double beta0 = opt.alpha / opt.lambda_step;
        if (beta0 > 1.0 / s.consts.eta) {
            std::ostringstream os;
            os << "initial step " << beta0 << " exceeds 1/eta = " << 1.0 / s.consts.eta
               << "; the decaying-step analysis assumes it does not";
            result.warnings.push_back(os.str());
        }
    }
    if (!(opt.sampling_fraction > 0.0) || opt.sampling_fraction > 1.0)
        throw std::invalid_argument("run_training: sampling fraction outside (0,1]");
    if (opt.lut_probability > 1.0)
        throw std::invalid_argument("run_training: lut probability outside [0,1]");

    const double beta_leaf = 1.0 / s.consts.eta;
    Rng policy_rng(mix_seed(opt.seed, kTagPolicy));
    Rng act_rng(mix_seed(opt.seed, kTagActive));
    Rng mode_rng(mix_seed(opt.seed, kTagMode));

    double gest = 0.0;
    if (policy.kind == PolicyConfig::Kind::LinearRate)
        gest = initial_grad_norm_guess(policy_rng);

    ParamVector w = std::move(w0);
    ParamVector w_prev;
    double last_beta = 0.0;
    result.rounds.reserve(static_cast<std::size_t>(opt.rounds));
    for (int k = 1; k <= opt.rounds; ++k) {
        RoundActivation act;
        const bool sampled = opt.sampling_fraction < 1.0;
        if (sampled) act = draw_active(*s.h, opt.sampling_fraction, act_rng);

        std::vector<ClusterMode> modes;
        if (opt.lut_probability >= 0.0) {
            modes.resize(s.h->clusters.size());
            for (auto& mode : modes)
                mode = mode_rng.uniform() < opt.lut_probability ? ClusterMode::Lut
                                                                : ClusterMode::Eut;
        }

        if (k >= 2 && policy.kind == PolicyConfig::Kind::LinearRate)
            gest = estimate_grad_norm(w_prev, w, last_beta, policy.omega);

        RoundSpec spec;
        spec.k = k;
        spec.variant = opt.variant;
        spec.beta_leaf = beta_leaf;
        spec.beta_apply = grad_share
                              ? opt.alpha / (static_cast<double>(k - 1) + opt.lambda_step)
                              : 0.0;
        spec.grad_norm_est = gest;
        spec.activation = sampled ? &act : nullptr;
        spec.mode_override = modes.empty() ? nullptr : &modes;
        spec.force_eut = opt.force_eut;
        spec.track_accuracy = opt.track_accuracy;

        GlobalRound round = run_global_round(s, policy, w, opt.seed, spec);
        w_prev = w;
        w = round.w_out;
        last_beta = grad_share ? spec.beta_apply : beta_leaf;
        result.rounds.push_back(std::move(round));
    }
    return result;
}

}  // namespace hfl
