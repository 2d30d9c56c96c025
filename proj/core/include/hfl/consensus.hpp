#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hfl/network.hpp"

namespace hfl {

// Node parameter states within one cluster, one row per member.
using NodeStates = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Applies z <- V z the given number of rounds; zero rounds returns the input
// untouched. V is symmetric and doubly stochastic, so column sums of z are
// preserved exactly up to roundoff.
NodeStates run_consensus(const Eigen::MatrixXd& v, NodeStates z, int rounds);

// final minus the replicated exact row-average of initial; the per-node
// consensus error after a finite number of rounds.
NodeStates consensus_deviation(const NodeStates& initial, const NodeStates& final_states);

double max_row_norm(const NodeStates& z);

// Largest pairwise row distance; the divergence the convergence analysis uses.
double true_divergence(const NodeStates& z);

struct DivergenceEstimate {
    double value = 0.0;  // global max minus min of the scalars
    int rounds = 0;      // flood iterations spent (graph diameter)
};

// Distributed max/min flood over the cluster graph: every node repeatedly
// absorbs neighbour extremes; after diameter rounds all nodes agree. The
// estimate is read at member 0. Cheaper lower bound on true_divergence when
// the scalars are parameter norms.
DivergenceEstimate estimate_divergence(const std::vector<std::vector<int>>& neighbors,
                                       int diameter, const Eigen::VectorXd& scalars);

DivergenceEstimate estimate_divergence(const ClusterTopology& topo,
                                       const Eigen::VectorXd& scalars);

}  // namespace hfl
