#include "hfl/theory.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace hfl {

SystemConsts SystemConsts::from(const NetworkHierarchy& h, double mu, double eta) {
    if (!(mu > 0.0) || !(eta > 0.0) || mu > eta)
        throw std::invalid_argument("system consts: need 0 < mu <= eta");
    SystemConsts c;
    c.mu = mu;
    c.eta = eta;
    c.d_total = static_cast<double>(h.total_data());
    c.phi = static_cast<double>(h.phi());
    for (std::size_t s : h.layer_sizes()) c.layer_nodes.push_back(static_cast<double>(s));
    return c;
}

double damping_power(const SystemConsts& c, double t) {
    if (t == 0.0) return 1.0;
    const double r = c.mu / c.eta;
    if (r >= 1.0) return 0.0;
    return std::exp(t * std::log1p(-r));
}

double xi_composite(const std::vector<ClusterRoundStat>& clusters) {
    double xi = 0.0;
    for (const auto& s : clusters) {
        if (!s.lut) continue;
        const double contraction = std::pow(s.lambda, 2.0 * s.theta);
        xi += s.size * s.size * s.size * contraction * s.divergence * s.divergence;
    }
    return xi;
}

double aggregation_error_bound(const SystemConsts& c, double xi) {
    return c.phi / (c.d_total * c.d_total) * xi;
}

double optimality_bound(const SystemConsts& c, double f0_gap,
                        const std::vector<std::vector<ClusterRoundStat>>& per_round, int k) {
    if (k < 0 || static_cast<std::size_t>(k) > per_round.size())
        throw std::invalid_argument("optimality_bound: diagnostics missing for requested round");
    double acc = damping_power(c, k) * f0_gap;
    const double coef = c.eta * c.phi / (2.0 * c.d_total * c.d_total);
    for (int t = 0; t < k; ++t)
        acc += coef * damping_power(c, t) * xi_composite(per_round[static_cast<std::size_t>(k - t - 1)]);
    return acc;
}

double asymptotic_gap(const SystemConsts& c, const std::vector<double>& sigma) {
    const int L = c.layers();
    if (static_cast<int>(sigma.size()) != L)
        throw std::invalid_argument("asymptotic_gap: one sigma per sub-server layer required");
    double s = 0.0;
    for (int j = 0; j < L; ++j) s += c.layer_nodes[static_cast<std::size_t>(j)] * sigma[static_cast<std::size_t>(j)];
    return c.eta * c.eta * c.phi / (2.0 * c.mu * c.d_total * c.d_total) * s;
}

namespace {

// Resolve ceil(raw) against the exact predicate to absorb last-ulp wobble;
// the result is the minimal k >= floor_k satisfying ok(k).
int tightened_ceil(double raw, int floor_k, const std::function<bool(int)>& ok) {
    double c = std::ceil(raw);
    int k = (c < static_cast<double>(floor_k)) ? floor_k
            : (c > 1e9)                        ? 1000000000
                                               : static_cast<int>(c);
    while (k > floor_k && ok(k - 1)) --k;
    while (!ok(k) && k < 1000000000) ++k;
    return k;
}

}  // namespace

int sufficient_rounds_gap(const SystemConsts& c, const std::vector<double>& sigma, double eps,
                          double f0_gap) {
    const double gap = asymptotic_gap(c, sigma);
    if (!(eps > gap)) {
        std::ostringstream os;
        os << "sufficient_rounds_gap: eps " << eps << " not above the floor gap " << gap;
        throw std::invalid_argument(os.str());
    }
    if (eps >= f0_gap) return 0;
    // bound(k) = gap + (f0_gap - gap) * r^k with r = 1 - mu/eta
    const double raw = std::log((eps - gap) / (f0_gap - gap)) / std::log1p(-c.mu / c.eta);
    auto ok = [&](int k) { return gap + (f0_gap - gap) * damping_power(c, k) <= eps; };
    return tightened_ceil(raw, 0, ok);
}

int sufficient_rounds_linear(double delta, double eps, double f0_gap) {
    if (!(delta > 0.0) || delta >= 1.0)
        throw std::invalid_argument("sufficient_rounds_linear: delta outside (0,1)");
    if (!(eps > 0.0)) throw std::invalid_argument("sufficient_rounds_linear: eps must be positive");
    if (eps >= f0_gap) return 0;
    const double raw = std::log(eps / f0_gap) / std::log1p(-delta);
    auto ok = [&](int k) { return f0_gap * std::exp(k * std::log1p(-delta)) <= eps; };
    return tightened_ceil(raw, 0, ok);
}

double decaying_step_bound(const SystemConsts& c, double alpha, double lambda_step,
                           const std::vector<double>& sigma, double f0_gap, int k) {
    if (!(alpha > 1.0 / c.mu))
        throw std::invalid_argument("decaying_step_bound: alpha must exceed 1/mu");
    if (!(lambda_step > 1.0))
        throw std::invalid_argument("decaying_step_bound: lambda_step must exceed 1");
    const int L = c.layers();
    if (static_cast<int>(sigma.size()) != L)
        throw std::invalid_argument("decaying_step_bound: one sigma per sub-server layer required");
    double s = 0.0;
    for (int j = 0; j < L; ++j) s += c.layer_nodes[static_cast<std::size_t>(j)] * sigma[static_cast<std::size_t>(j)];
    const double noise_arm = c.eta * alpha * alpha * c.phi * s /
                             (2.0 * c.d_total * c.d_total * (alpha * c.mu - 1.0));
    const double gamma = std::max(lambda_step * f0_gap, noise_arm);
    return gamma / (static_cast<double>(k) + lambda_step);
}

}  // namespace hfl
