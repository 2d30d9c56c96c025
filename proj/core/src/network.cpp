#include "hfl/network.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace hfl {

namespace {

void validate_spec(const HierarchySpec& spec) {
    if (spec.layers.empty())
        throw std::invalid_argument("hierarchy spec has no layers");
    if (spec.layers.front().size() != 1)
        throw std::invalid_argument("layer below the server must be a single cluster");
    for (std::size_t j = 0; j < spec.layers.size(); ++j) {
        if (spec.layers[j].empty())
            throw std::invalid_argument("layer " + std::to_string(j + 1) + " has no clusters");
        for (int s : spec.layers[j])
            if (s < 1)
                throw std::invalid_argument("cluster sizes must be >= 1");
    }
    for (std::size_t j = 0; j + 1 < spec.layers.size(); ++j) {
        std::size_t nodes_here = 0;
        for (int s : spec.layers[j]) nodes_here += static_cast<std::size_t>(s);
        if (spec.layers[j + 1].size() != nodes_here)
            throw std::invalid_argument(
                "layer " + std::to_string(j + 1) + " has " + std::to_string(nodes_here) +
                " nodes but layer " + std::to_string(j + 2) + " declares " +
                std::to_string(spec.layers[j + 1].size()) + " clusters");
    }
    const int depth = static_cast<int>(spec.layers.size());
    for (const AttachPoint& a : spec.attach) {
        if (a.layer < 1 || a.layer >= depth)
            throw std::invalid_argument("attach layer must be in [1, depth)");
        std::size_t nodes_at_layer = 0;
        for (int s : spec.layers[static_cast<std::size_t>(a.layer - 1)])
            nodes_at_layer += static_cast<std::size_t>(s);
        if (a.parent_index < 0 || static_cast<std::size_t>(a.parent_index) >= nodes_at_layer)
            throw std::invalid_argument("attach parent index out of range");
    }
}

}  // namespace

NetworkHierarchy build_hierarchy(const HierarchySpec& spec) {
    validate_spec(spec);
    const int depth = static_cast<int>(spec.layers.size());

    NetworkHierarchy h;
    h.layers.assign(static_cast<std::size_t>(depth) + 1, {});

    Node server;
    server.id = 0;
    server.layer = 0;
    h.nodes.push_back(server);
    h.layers[0].push_back(0);

    // real layers first, top-down; parents are the nodes of the layer above
    for (int j = 1; j <= depth; ++j) {
        const auto& sizes = spec.layers[static_cast<std::size_t>(j - 1)];
        const auto& parents = h.layers[static_cast<std::size_t>(j - 1)];
        for (std::size_t ci = 0; ci < sizes.size(); ++ci) {
            Cluster c;
            c.id = static_cast<int>(h.clusters.size());
            c.layer = j;
            c.parent = parents[ci];
            for (int m = 0; m < sizes[ci]; ++m) {
                Node node;
                node.id = static_cast<int>(h.nodes.size());
                node.layer = j;
                node.parent = c.parent;
                node.cluster = c.id;
                h.nodes.push_back(node);
                h.nodes[static_cast<std::size_t>(c.parent)].children.push_back(node.id);
                c.members.push_back(node.id);
                h.layers[static_cast<std::size_t>(j)].push_back(node.id);
            }
            h.clusters.push_back(std::move(c));
        }
    }

    // A device attached above the bottom becomes a bottom-layer leaf reached
    // through a chain of virtual nodes. The first chain node joins the
    // parent's existing child cluster (one cluster per parent); the rest form
    // virtual singleton clusters under the virtual nodes.
    for (const AttachPoint& a : spec.attach) {
        int parent = h.layers[static_cast<std::size_t>(a.layer)][static_cast<std::size_t>(
            a.parent_index)];
        for (int j = a.layer + 1; j <= depth; ++j) {
            int cluster_id = -1;
            for (int cid : h.nodes[static_cast<std::size_t>(parent)].children) {
                cluster_id = h.nodes[static_cast<std::size_t>(cid)].cluster;
                break;
            }
            if (cluster_id < 0) {
                Cluster c;
                c.id = static_cast<int>(h.clusters.size());
                c.layer = j;
                c.parent = parent;
                h.clusters.push_back(std::move(c));
                cluster_id = static_cast<int>(h.clusters.size()) - 1;
            }
            Node node;
            node.id = static_cast<int>(h.nodes.size());
            node.layer = j;
            node.parent = parent;
            node.cluster = cluster_id;
            node.is_virtual = j < depth;  // the bottom of the chain is the real device
            h.nodes.push_back(node);
            h.nodes[static_cast<std::size_t>(parent)].children.push_back(node.id);
            h.clusters[static_cast<std::size_t>(cluster_id)].members.push_back(node.id);
            h.layers[static_cast<std::size_t>(j)].push_back(node.id);
            parent = node.id;
        }
    }

    return h;
}

void bind_data_counts(NetworkHierarchy& h, const std::vector<std::uint64_t>& counts) {
    const auto& leaves = h.leaf_ids();
    if (counts.size() != leaves.size())
        throw std::invalid_argument("data count list does not match leaf count");
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (counts[i] == 0)
            throw std::invalid_argument("leaf " + std::to_string(leaves[i]) +
                                        " would hold no data");
        h.nodes[static_cast<std::size_t>(leaves[i])].data_count = counts[i];
    }
}

namespace {

bool connected(const std::vector<std::vector<int>>& nbr) {
    const int n = static_cast<int>(nbr.size());
    if (n <= 1) return true;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : nbr[static_cast<std::size_t>(u)])
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                q.push(v);
            }
    }
    return reached == n;
}

int bfs_ecc(const std::vector<std::vector<int>>& nbr, int src) {
    std::vector<int> dist(nbr.size(), -1);
    std::queue<int> q;
    q.push(src);
    dist[static_cast<std::size_t>(src)] = 0;
    int ecc = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : nbr[static_cast<std::size_t>(u)])
            if (dist[static_cast<std::size_t>(v)] < 0) {
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                ecc = std::max(ecc, dist[static_cast<std::size_t>(v)]);
                q.push(v);
            }
    }
    return ecc;
}

}  // namespace

ClusterTopology generate_rgg_topology(int n, double radius_m, double disc_radius_m,
                                      Rng& rng) {
    if (n < 1) throw std::invalid_argument("node count must be >= 1");
    if (radius_m <= 0.0) throw std::invalid_argument("connection radius must be > 0");
    if (disc_radius_m <= 0.0) throw std::invalid_argument("disc radius must be > 0");

    constexpr int kMaxAttempts = 1000;
    ClusterTopology t;
    t.n = n;

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        t.positions.clear();
        t.positions.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double r = disc_radius_m * std::sqrt(rng.uniform());
            const double a = 6.28318530717958647692 * rng.uniform();
            t.positions.emplace_back(r * std::cos(a), r * std::sin(a));
        }
        t.adjacency = Eigen::MatrixXi::Zero(n, n);
        t.neighbors.assign(static_cast<std::size_t>(n), {});
        t.edge_count = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double dx = t.positions[static_cast<std::size_t>(i)].first -
                                  t.positions[static_cast<std::size_t>(j)].first;
                const double dy = t.positions[static_cast<std::size_t>(i)].second -
                                  t.positions[static_cast<std::size_t>(j)].second;
                if (std::sqrt(dx * dx + dy * dy) < radius_m) {
                    t.adjacency(i, j) = t.adjacency(j, i) = 1;
                    t.neighbors[static_cast<std::size_t>(i)].push_back(j);
                    t.neighbors[static_cast<std::size_t>(j)].push_back(i);
                    ++t.edge_count;
                }
            }
        if (!connected(t.neighbors)) continue;

        t.max_degree = 0;
        for (const auto& nb : t.neighbors)
            t.max_degree = std::max(t.max_degree, static_cast<int>(nb.size()));
        t.diameter = 0;
        for (int i = 0; i < n; ++i) t.diameter = std::max(t.diameter, bfs_ecc(t.neighbors, i));
        return t;
    }
    throw std::runtime_error(
        "no connected placement after " + std::to_string(kMaxAttempts) +
        " attempts: connection radius " + std::to_string(radius_m) +
        " m is too small for " + std::to_string(n) + " nodes in a " +
        std::to_string(disc_radius_m) + " m disc");
}

Eigen::MatrixXd build_consensus_matrix(const ClusterTopology& topology, double d) {
    const int n = topology.n;
    if (!connected(topology.neighbors))
        throw std::invalid_argument("consensus requires a connected topology");
    if (d <= 0.0)
        throw std::invalid_argument("edge weight must be > 0");
    if (topology.max_degree > 0 && d >= 1.0 / topology.max_degree)
        throw std::invalid_argument("edge weight must be < 1/max_degree (strict)");

    Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        laplacian(i, i) =
            static_cast<double>(topology.neighbors[static_cast<std::size_t>(i)].size());
        for (int j : topology.neighbors[static_cast<std::size_t>(i)]) laplacian(i, j) = -1.0;
    }
    return Eigen::MatrixXd::Identity(n, n) - d * laplacian;
}

double spectral_radius_bound(const Eigen::MatrixXd& v, int n) {
    if (v.rows() != n || v.cols() != n)
        throw std::invalid_argument("matrix dimension mismatch");
    const Eigen::MatrixXd deflated =
        v - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(deflated,
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double default_edge_weight(const ClusterTopology& topology) {
    return 0.9 / (topology.max_degree + 1);
}

void finalize_topology(ClusterTopology& topology, double d) {
    if (d <= 0.0) d = default_edge_weight(topology);
    topology.weight = build_consensus_matrix(topology, d);
    topology.lambda = spectral_radius_bound(topology.weight, topology.n);
}

}  // namespace hfl
