#pragma once

// Shared fixtures and independent oracles for the test suite. Oracles here
// recompute quantities by a different route than the library (brute force,
// power iteration, finite differences) so the tests do not just mirror the
// implementation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include "hfl/consensus.hpp"
#include "hfl/data.hpp"
#include "hfl/model.hpp"
#include "hfl/network.hpp"
#include "hfl/protocol.hpp"
#include "hfl/rng.hpp"

namespace hfltest {

// Path graph 0-1-...-(n-1) as a ClusterTopology, weights unset.
inline hfl::ClusterTopology path_topology(int n) {
    hfl::ClusterTopology t;
    t.n = n;
    t.adjacency = Eigen::MatrixXi::Zero(n, n);
    t.neighbors.assign(static_cast<std::size_t>(n), {});
    t.positions.assign(static_cast<std::size_t>(n), {0.0, 0.0});
    for (int i = 0; i + 1 < n; ++i) {
        t.adjacency(i, i + 1) = t.adjacency(i + 1, i) = 1;
        t.neighbors[static_cast<std::size_t>(i)].push_back(i + 1);
        t.neighbors[static_cast<std::size_t>(i + 1)].push_back(i);
    }
    t.max_degree = n > 2 ? 2 : (n > 1 ? 1 : 0);
    t.edge_count = n > 0 ? static_cast<std::uint64_t>(n - 1) : 0;
    t.diameter = n > 0 ? n - 1 : 0;
    return t;
}

inline hfl::ClusterTopology complete_topology(int n) {
    hfl::ClusterTopology t;
    t.n = n;
    t.adjacency = Eigen::MatrixXi::Zero(n, n);
    t.neighbors.assign(static_cast<std::size_t>(n), {});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) {
                t.adjacency(i, j) = 1;
                t.neighbors[static_cast<std::size_t>(i)].push_back(j);
            }
    t.max_degree = n - 1;
    t.edge_count = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    t.diameter = n > 1 ? 1 : 0;
    return t;
}

// Spectral radius of the mean-deflated matrix by power iteration on the
// squared operator; independent of the library's eigensolver route.
inline double power_iteration_radius(const Eigen::MatrixXd& v) {
    const int n = static_cast<int>(v.rows());
    const Eigen::MatrixXd a = v - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    const Eigen::MatrixXd a2 = a * a;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = 0.3 + 0.1 * i + (i % 2 ? 0.07 : -0.03);
    double lam2 = 0.0;
    for (int it = 0; it < 2000; ++it) {
        Eigen::VectorXd y = a2 * x;
        const double norm = y.norm();
        if (norm < 1e-300) return 0.0;
        lam2 = norm / x.norm();
        x = y / norm;
    }
    return std::sqrt(lam2);
}

// All-pairs shortest path hop count by repeated BFS.
inline int bfs_diameter(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    int best = 0;
    for (int s = 0; s < n; ++s) {
        std::vector<int> dist(static_cast<std::size_t>(n), -1);
        std::vector<int> q{s};
        dist[static_cast<std::size_t>(s)] = 0;
        for (std::size_t head = 0; head < q.size(); ++head) {
            const int u = q[head];
            for (int w : adj[static_cast<std::size_t>(u)])
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
                    q.push_back(w);
                }
        }
        for (int d : dist) {
            if (d < 0) return -1;  // disconnected
            best = std::max(best, d);
        }
    }
    return best;
}

inline bool bfs_connected(const std::vector<std::vector<int>>& adj) {
    return bfs_diameter(adj) >= 0;
}

// Central-difference gradient; h scaled per coordinate.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& w, double h = 1e-6) {
    Eigen::VectorXd g(w.size());
    Eigen::VectorXd p = w;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(w[i]));
        p[i] = w[i] + step;
        const double up = f(p);
        p[i] = w[i] - step;
        const double dn = f(p);
        p[i] = w[i];
        g[i] = (up - dn) / (2.0 * step);
    }
    return g;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n, 0.0);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    const double den = std::sqrt(dx * dy);
    return den > 0.0 ? num / den : 0.0;
}

// A small ready-to-run simulation: blob data, uniform tree, RGG clusters.
struct TinySim {
    hfl::Dataset ds;
    hfl::Partition part;
    hfl::NetworkHierarchy h;
    std::unique_ptr<hfl::Model> model;
    hfl::SimSetup setup;
};

struct TinySimSpec {
    std::vector<std::vector<int>> layers = {{5}, hfl::HierarchySpec::uniform_layer(5, 5)};
    int samples_per_leaf = 40;
    int features = 6;
    int classes = 3;
    double spread = 0.5;
    double center_scale = 2.0;
    hfl::Scheme scheme = hfl::Scheme::Iid;
    int labels_per_node = 1;
    hfl::LossSpec loss;
    hfl::ClusterMode mode = hfl::ClusterMode::Lut;
    std::uint64_t data_seed = 11;
    std::uint64_t topo_seed = 5;
    double comm_range_m = 250.0;
    double disc_radius_m = 500.0;
};

inline std::unique_ptr<TinySim> make_sim(const TinySimSpec& ts = {}) {
    auto sim = std::make_unique<TinySim>();
    hfl::HierarchySpec hs;
    hs.layers = ts.layers;
    sim->h = hfl::build_hierarchy(hs);
    const int leaves = static_cast<int>(sim->h.leaf_ids().size());
    hfl::Rng drng(hfl::mix_seed(ts.data_seed, 0xb10b));
    sim->ds = hfl::make_blobs(static_cast<std::int64_t>(leaves) * ts.samples_per_leaf,
                              ts.features, ts.classes, ts.spread, ts.center_scale, drng);
    hfl::Rng prng(hfl::mix_seed(ts.data_seed, 0x9a57));
    hfl::PartitionSpec ps;
    ps.scheme = ts.scheme;
    ps.labels_per_node = ts.labels_per_node;
    sim->part = hfl::partition(sim->ds, leaves, ps, prng);
    sim->model = std::make_unique<hfl::Model>(sim->ds, sim->part.assignment, ts.loss);

    std::vector<hfl::ClusterTopology> topos;
    for (const auto& c : sim->h.clusters) {
        hfl::Rng trng(hfl::mix_seed(ts.topo_seed, 0x10b0, static_cast<std::uint64_t>(c.id)));
        auto t = hfl::generate_rgg_topology(static_cast<int>(c.members.size()), ts.comm_range_m,
                                            ts.disc_radius_m, trng);
        hfl::finalize_topology(t, 0.0);
        topos.push_back(std::move(t));
    }
    std::vector<hfl::ClusterMode> modes(sim->h.clusters.size(), ts.mode);
    sim->setup = hfl::SimSetup::create(sim->h, *sim->model, std::move(topos), std::move(modes));
    return sim;
}

}  // namespace hfltest
