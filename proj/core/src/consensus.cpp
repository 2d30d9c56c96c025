#include "hfl/consensus.hpp"

#include <stdexcept>

namespace hfl {

NodeStates run_consensus(const Eigen::MatrixXd& v, NodeStates z, int rounds) {
    if (v.rows() != v.cols() || v.rows() != z.rows())
        throw std::invalid_argument("run_consensus: matrix and state shapes disagree");
    if (rounds < 0) throw std::invalid_argument("run_consensus: negative round count");
    for (int t = 0; t < rounds; ++t) z = v * z;
    return z;
}

NodeStates consensus_deviation(const NodeStates& initial, const NodeStates& final_states) {
    if (initial.rows() != final_states.rows() || initial.cols() != final_states.cols())
        throw std::invalid_argument("consensus_deviation: shape mismatch");
    Eigen::RowVectorXd mean = initial.colwise().mean();
    NodeStates out = final_states;
    out.rowwise() -= mean;
    return out;
}

double max_row_norm(const NodeStates& z) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) worst = std::max(worst, z.row(i).norm());
    return worst;
}

double true_divergence(const NodeStates& z) {
    double worst = 0.0;
    for (Eigen::Index a = 0; a < z.rows(); ++a)
        for (Eigen::Index b = a + 1; b < z.rows(); ++b)
            worst = std::max(worst, (z.row(a) - z.row(b)).norm());
    return worst;
}

DivergenceEstimate estimate_divergence(const std::vector<std::vector<int>>& neighbors,
                                       int diameter, const Eigen::VectorXd& scalars) {
    const auto n = static_cast<std::size_t>(scalars.size());
    if (neighbors.size() != n)
        throw std::invalid_argument("estimate_divergence: adjacency and scalar sizes disagree");
    if (diameter < 0) throw std::invalid_argument("estimate_divergence: negative diameter");
    std::vector<double> hi(n), lo(n);
    for (std::size_t i = 0; i < n; ++i) hi[i] = lo[i] = scalars[static_cast<Eigen::Index>(i)];
    std::vector<double> next_hi(n), next_lo(n);
    for (int t = 0; t < diameter; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            double h = hi[i], l = lo[i];
            for (int nb : neighbors[i]) {
                h = std::max(h, hi[static_cast<std::size_t>(nb)]);
                l = std::min(l, lo[static_cast<std::size_t>(nb)]);
            }
            next_hi[i] = h;
            next_lo[i] = l;
        }
        hi.swap(next_hi);
        lo.swap(next_lo);
    }
    return {n == 0 ? 0.0 : hi[0] - lo[0], diameter};
}

DivergenceEstimate estimate_divergence(const ClusterTopology& topo,
                                       const Eigen::VectorXd& scalars) {
    return estimate_divergence(topo.neighbors, topo.diameter, scalars);
}

}  // namespace hfl
