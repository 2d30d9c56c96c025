#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "hfl/rng.hpp"

namespace hfl {

enum class ClusterMode { Lut, Eut };

// A device that terminates above the bottom layer. It is re-homed to the
// bottom layer through a chain of virtual singleton clusters so every
// root-to-leaf path keeps equal length.
struct AttachPoint {
    int layer = 0;         // layer of the parent node the device hangs off
    int parent_index = 0;  // index of that parent within its layer
};

// Layers listed top-down: layers[0] sits directly below the server and must
// contain exactly one cluster. Each inner vector gives the size of every
// cluster at that layer, ordered by parent node.
struct HierarchySpec {
    std::vector<std::vector<int>> layers;
    std::vector<AttachPoint> attach;

    static std::vector<int> uniform_layer(int clusters, int size) {
        return std::vector<int>(static_cast<std::size_t>(clusters), size);
    }
};

struct Node {
    int id = -1;
    int layer = 0;
    int parent = -1;
    int cluster = -1;  // cluster this node is a member of (-1 for the server)
    std::vector<int> children;
    bool is_virtual = false;
    std::uint64_t data_count = 0;  // leaves only, set by bind_data_counts
};

struct Cluster {
    int id = -1;
    int layer = 0;   // layer of the member nodes
    int parent = -1; // parent node id (owns this cluster)
    std::vector<int> members;  // node ids, ascending
};

class NetworkHierarchy {
public:
    std::vector<Node> nodes;
    std::vector<Cluster> clusters;
    std::vector<std::vector<int>> layers;  // node ids per layer; layers[0] = {server}

    int depth() const { return static_cast<int>(layers.size()) - 1; }

    // N_j, j = 0..depth
    std::vector<std::size_t> layer_sizes() const {
        std::vector<std::size_t> n(layers.size());
        for (std::size_t j = 0; j < layers.size(); ++j) n[j] = layers[j].size();
        return n;
    }

    // all nodes above the bottom layer, server included
    std::uint64_t phi() const {
        std::uint64_t p = 0;
        for (std::size_t j = 0; j + 1 < layers.size(); ++j) p += layers[j].size();
        return p;
    }

    std::uint64_t total_data() const {
        std::uint64_t d = 0;
        for (int id : layers.back()) d += nodes[static_cast<std::size_t>(id)].data_count;
        return d;
    }

    const std::vector<int>& leaf_ids() const { return layers.back(); }

    std::vector<int> clusters_at_layer(int j) const {
        std::vector<int> out;
        for (const Cluster& c : clusters)
            if (c.layer == j) out.push_back(c.id);
        return out;
    }
};

NetworkHierarchy build_hierarchy(const HierarchySpec& spec);

// Assigns |D_n| to the leaves, in leaf order (ascending node id).
void bind_data_counts(NetworkHierarchy& h, const std::vector<std::uint64_t>& counts);

struct ClusterTopology {
    int n = 0;
    Eigen::MatrixXi adjacency;                    // symmetric 0/1, zero diagonal
    std::vector<std::vector<int>> neighbors;      // derived adjacency lists
    std::vector<std::pair<double, double>> positions;
    int max_degree = 0;
    std::uint64_t edge_count = 0;                 // undirected edges
    int diameter = 0;
    ClusterMode mode = ClusterMode::Eut;
    Eigen::MatrixXd weight;                       // V, filled by finalize_topology
    double lambda = 0.0;                          // deflated spectral radius of V
};

// Uniform placement in a disc of radius disc_radius_m; edge iff pairwise
// distance < radius_m. Placements are redrawn from the same stream until the
// graph is connected, up to 1000 attempts.
ClusterTopology generate_rgg_topology(int n, double radius_m, double disc_radius_m,
                                      Rng& rng);

// V = I - d * Laplacian. Requires 0 < d < 1/max_degree (open interval) on a
// connected topology; a degree-0 singleton accepts any d > 0.
Eigen::MatrixXd build_consensus_matrix(const ClusterTopology& topology, double d);

// Largest eigenvalue magnitude of V - (1/n) * ones.
double spectral_radius_bound(const Eigen::MatrixXd& v, int n);

// d = 0.9 / (max_degree + 1)
double default_edge_weight(const ClusterTopology& topology);

// Fills weight and lambda; d <= 0 selects the default edge weight.
void finalize_topology(ClusterTopology& topology, double d);

}  // namespace hfl
