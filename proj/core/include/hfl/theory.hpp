#pragma once

#include <vector>

#include "hfl/network.hpp"

namespace hfl {

// Global constants every bound shares. layer_nodes[0] = 1 (the server);
// layer_nodes[j] counts nodes at depth j, virtual relays included. layers()
// is the number of sub-server layers, phi the node count above the leaves
// (equivalently the total cluster count).
struct SystemConsts {
    double mu = 0.0;
    double eta = 0.0;
    double d_total = 0.0;
    double phi = 0.0;
    std::vector<double> layer_nodes;

    int layers() const { return static_cast<int>(layer_nodes.size()) - 1; }
    double rate() const { return 1.0 - mu / eta; }

    static SystemConsts from(const NetworkHierarchy& h, double mu, double eta);
};

// Per-cluster facts one global round produced, as the bounds consume them.
// divergence is the true pairwise spread of the scaled member states at the
// moment mixing started; lambda the spectral contraction factor.
struct ClusterRoundStat {
    double size = 0.0;
    double lambda = 0.0;
    int theta = 0;
    double divergence = 0.0;
    bool lut = false;
};

// (1-mu/eta)^t via exp(t*log1p(-mu/eta)); stable for large t.
double damping_power(const SystemConsts& c, double t);

// Sum over mixing clusters of |C|^3 lambda^(2 theta) Upsilon^2; the per-round
// aggregation-error composite.
double xi_composite(const std::vector<ClusterRoundStat>& clusters);

// Squared-norm bound on the server-side aggregation error for one round:
// (phi / D^2) * xi.
double aggregation_error_bound(const SystemConsts& c, double xi);

// Optimality-gap bound after k rounds: damped initial gap plus the discounted
// sum of the per-round composites. per_round[t] holds round t+1's stats.
double optimality_bound(const SystemConsts& c, double f0_gap,
                        const std::vector<std::vector<ClusterRoundStat>>& per_round, int k);

// Closed-form tail gap when every layer-j cluster holds its composite below
// sigma[j-1]: (eta^2 phi / (2 mu D^2)) * sum_j N_{j-1} sigma_j.
double asymptotic_gap(const SystemConsts& c, const std::vector<double>& sigma);

// Smallest k with gap_bound(k) <= eps when per-round composites are capped by
// the sigma schedule. Throws when eps is below the asymptotic gap or above
// the initial gap's reach.
int sufficient_rounds_gap(const SystemConsts& c, const std::vector<double>& sigma, double eps,
                          double f0_gap);

// Smallest k with f0_gap*(1-delta)^k <= eps under the per-round linear
// contraction delta.
int sufficient_rounds_linear(double delta, double eps, double f0_gap);

// Expected-gap bound for the decaying-step gradient-relay variant:
// Gamma / (k + lambda_step), Gamma = max{lambda_step*f0_gap,
// eta*alpha^2*phi*sum_j N_{j-1} sigma_j / (2 D^2 (alpha*mu - 1))}.
double decaying_step_bound(const SystemConsts& c, double alpha, double lambda_step,
                           const std::vector<double>& sigma, double f0_gap, int k);

}  // namespace hfl
