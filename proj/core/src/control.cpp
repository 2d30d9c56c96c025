#include "hfl/control.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hfl {

int rounds_for_tolerance(const ClusterStats& c, double sigma, double chi, int cap) {
    if (!(c.lambda >= 0.0) || c.lambda >= 1.0)
        throw std::invalid_argument("rounds_for_tolerance: lambda outside [0,1)");
    if (!(chi >= 1.0)) throw std::invalid_argument("rounds_for_tolerance: chi below 1");
    if (c.divergence < 0.0)
        throw std::invalid_argument("rounds_for_tolerance: negative divergence");
    if (cap < 0) throw std::invalid_argument("rounds_for_tolerance: negative cap");
    if (c.divergence == 0.0) return 0;
    const double spread = c.size * c.size * c.size * c.divergence * c.divergence;
    if (sigma > spread) return 0;
    const double target = chi * sigma;
    if (c.lambda == 0.0) return (spread <= target) ? 0 : std::min(1, cap);
    if (!(sigma > 0.0)) return cap;  // zero slack, positive contraction: cap binds
    auto ok = [&](int t) { return std::pow(c.lambda, 2.0 * t) * spread <= target; };
    const double raw = (std::log(target) - std::log(spread)) / (2.0 * std::log(c.lambda));
    double ceiled = std::ceil(raw);
    int t = (ceiled <= 0.0)                        ? 0
            : (ceiled >= static_cast<double>(cap)) ? cap
                                                   : static_cast<int>(ceiled);
    while (t > 0 && ok(t - 1)) --t;
    while (!ok(t) && t < cap) ++t;
    return t;
}

int choose_theta(const PolicyConfig& p, const ClusterStats& c, double sigma_layer) {
    if (p.kind == PolicyConfig::Kind::Fixed) return p.fixed_theta;
    return rounds_for_tolerance(c, sigma_layer, p.chi, p.theta_cap);
}

std::vector<double> layer_sigmas(const PolicyConfig& p, const SystemConsts& consts,
                                 double grad_norm_est) {
    switch (p.kind) {
        case PolicyConfig::Kind::GapTarget:
            if (static_cast<int>(p.sigma.size()) != consts.layers())
                throw std::invalid_argument("layer_sigmas: sigma schedule length mismatch");
            return p.sigma;
        case PolicyConfig::Kind::LinearRate:
            return sigma_for_linear_rate(consts, p.delta, grad_norm_est);
        case PolicyConfig::Kind::ErrorBudget:
            return sigma_for_error_budget(consts, p.psi);
        case PolicyConfig::Kind::Fixed:
            break;
    }
    throw std::logic_error("layer_sigmas: fixed policy has no slack schedule");
}

std::vector<double> sigma_for_gap_target(const SystemConsts& consts, double eps, int kappa,
                                         double f0_gap) {
    if (kappa < 1) throw std::invalid_argument("sigma_for_gap_target: kappa must be positive");
    if (!(f0_gap > 0.0))
        throw std::invalid_argument("sigma_for_gap_target: nonpositive initial gap");
    const double floor_eps = damping_power(consts, kappa) * f0_gap;
    if (!(eps >= floor_eps) || !(eps < f0_gap)) {
        std::ostringstream os;
        os << "sigma_for_gap_target: eps " << eps << " outside feasible [" << floor_eps << ", "
           << f0_gap << ")";
        throw std::invalid_argument(os.str());
    }
    const double rk = damping_power(consts, kappa);
    const double coef =
        consts.eta * consts.eta * consts.phi / (2.0 * consts.mu * consts.d_total * consts.d_total);
    const int L = consts.layers();
    const double num = eps - rk * f0_gap;
    std::vector<double> sigma(static_cast<std::size_t>(L));
    for (int j = 1; j <= L; ++j)
        sigma[static_cast<std::size_t>(j - 1)] =
            num / ((1.0 - rk) * coef * consts.layer_nodes[static_cast<std::size_t>(j - 1)] *
                   static_cast<double>(L));
    return sigma;
}

std::vector<double> sigma_for_linear_rate(const SystemConsts& consts, double delta,
                                          double grad_norm_est) {
    if (!(delta > 0.0) || delta > consts.mu / consts.eta)
        throw std::invalid_argument("sigma_for_linear_rate: delta outside (0, mu/eta]");
    if (grad_norm_est < 0.0)
        throw std::invalid_argument("sigma_for_linear_rate: negative gradient estimate");
    const int L = consts.layers();
    const double e2 = consts.eta * consts.eta;
    const double scale = consts.d_total * consts.d_total * consts.mu *
                         (consts.mu - delta * consts.eta) /
                         (e2 * e2 * consts.phi * static_cast<double>(L)) * grad_norm_est *
                         grad_norm_est;
    std::vector<double> sigma(static_cast<std::size_t>(L));
    for (int j = 1; j <= L; ++j)
        sigma[static_cast<std::size_t>(j - 1)] =
            scale / consts.layer_nodes[static_cast<std::size_t>(j - 1)];
    return sigma;
}

std::vector<double> sigma_for_error_budget(const SystemConsts& consts, double psi) {
    if (!(psi > 0.0)) throw std::invalid_argument("sigma_for_error_budget: psi must be positive");
    const int L = consts.layers();
    std::vector<double> sigma(static_cast<std::size_t>(L));
    for (int j = 1; j <= L; ++j)
        sigma[static_cast<std::size_t>(j - 1)] =
            psi * consts.d_total * consts.d_total /
            (consts.phi * consts.layer_nodes[static_cast<std::size_t>(j - 1)] *
             static_cast<double>(L));
    return sigma;
}

double estimate_grad_norm(const ParamVector& w_prev, const ParamVector& w_cur, double beta,
                          double omega) {
    if (!(beta > 0.0)) throw std::invalid_argument("estimate_grad_norm: beta must be positive");
    if (!(omega > 1.0)) throw std::invalid_argument("estimate_grad_norm: omega must exceed 1");
    return (w_prev - w_cur).norm() / (beta * omega);
}

double initial_grad_norm_guess(Rng& rng) { return rng.uniform(0.5, 1.5); }

DeltaChoice delta_for_target(double eps, double f0_gap, int kappa, double mu_over_eta) {
    if (!(f0_gap > 0.0)) throw std::invalid_argument("delta_for_target: nonpositive initial gap");
    if (!(eps > 0.0) || eps >= f0_gap)
        throw std::invalid_argument("delta_for_target: eps outside (0, f0_gap)");
    if (kappa < 1) throw std::invalid_argument("delta_for_target: kappa must be positive");
    if (!(mu_over_eta > 0.0) || mu_over_eta > 1.0)
        throw std::invalid_argument("delta_for_target: mu/eta outside (0,1]");
    DeltaChoice out;
    out.delta = 1.0 - std::pow(eps / f0_gap, 1.0 / static_cast<double>(kappa));
    if (out.delta > mu_over_eta) {
        out.delta = mu_over_eta;
        out.clamped = true;
    }
    return out;
}

}  // namespace hfl
