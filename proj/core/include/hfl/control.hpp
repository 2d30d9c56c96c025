#pragma once

#include <vector>

#include "hfl/model.hpp"
#include "hfl/rng.hpp"
#include "hfl/theory.hpp"

namespace hfl {

// How each cluster picks its in-cluster mixing round count theta.
//   Fixed:       constant theta everywhere.
//   GapTarget:   per-layer slack sigma_j fixed for the whole run; drives the
//                asymptotic optimality gap. sigma given directly or derived
//                from an (eps, kappa) target.
//   LinearRate:  sigma_j recomputed each round from a gradient-norm estimate;
//                enforces a per-round contraction factor (1 - delta).
//   ErrorBudget: sigma_j from a cap psi on the squared aggregation error.
struct PolicyConfig {
    enum class Kind { Fixed, GapTarget, LinearRate, ErrorBudget };
    Kind kind = Kind::Fixed;
    int fixed_theta = 0;
    std::vector<double> sigma;  // GapTarget; sigma[j-1] applies to layer j
    double delta = 0.0;         // LinearRate; 0 < delta <= mu/eta
    double omega = 2.0;         // LinearRate estimator discount, > 1
    double psi = 0.0;           // ErrorBudget; > 0
    double chi = 1.0;           // slack scaling inside the log, >= 1
    int theta_cap = 500;

    bool adaptive() const { return kind != Kind::Fixed; }
};

// What the round-count rule needs to know about one cluster. divergence is
// the flooded norm-range estimate, a lower bound on the true spread.
struct ClusterStats {
    double size = 0.0;    // member count
    double lambda = 0.0;  // spectral contraction factor, in [0,1)
    double divergence = 0.0;
};

// Minimal nonnegative theta with lambda^(2 theta) |C|^3 div^2 <= chi*sigma,
// computed by the closed-form ceiling and tightened against the exact
// predicate; capped. Zero divergence or a slack above |C|^3 div^2 yields 0.
int rounds_for_tolerance(const ClusterStats& c, double sigma, double chi, int cap);

int choose_theta(const PolicyConfig& p, const ClusterStats& c, double sigma_layer);

// Per-layer slack vector for the adaptive policies; grad_norm_est is consumed
// by LinearRate only. sigma_layer[j-1] belongs to layer j.
std::vector<double> layer_sigmas(const PolicyConfig& p, const SystemConsts& consts,
                                 double grad_norm_est);

// Equalized slack schedule hitting optimality gap eps after kappa rounds:
// sigma_j* = [eps - r^kappa f0_gap] / [(1 - r^kappa) (eta^2 phi / 2 mu D^2)
// N_{j-1} L]. Feasible iff r^kappa f0_gap <= eps < f0_gap.
std::vector<double> sigma_for_gap_target(const SystemConsts& consts, double eps, int kappa,
                                         double f0_gap);

// Slack schedule enforcing per-round contraction (1 - delta):
// sigma_j = D^2 mu (mu - delta eta) / (eta^4 phi N_{j-1} L) * g^2.
std::vector<double> sigma_for_linear_rate(const SystemConsts& consts, double delta,
                                          double grad_norm_est);

// Slack schedule capping the squared aggregation error by psi:
// sigma_j = psi D^2 / (phi N_{j-1} L).
std::vector<double> sigma_for_error_budget(const SystemConsts& consts, double psi);

// One-step-behind gradient-norm estimator: |w_prev - w_cur| / (beta * omega).
// omega must exceed 1; the slack absorbs the one-step staleness.
double estimate_grad_norm(const ParamVector& w_prev, const ParamVector& w_cur, double beta,
                          double omega);

// Positive stand-in for the estimate before any step exists.
double initial_grad_norm_guess(Rng& rng);

// Per-round contraction needed to reach eps within kappa rounds:
// 1 - (eps/f0_gap)^(1/kappa), clamped into (0, mu/eta].
struct DeltaChoice {
    double delta = 0.0;
    bool clamped = false;
};
DeltaChoice delta_for_target(double eps, double f0_gap, int kappa, double mu_over_eta);

}  // namespace hfl
