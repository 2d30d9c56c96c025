#include "hfl/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace hfl {

RoundActivation activate_all(const NetworkHierarchy& h) {
    RoundActivation a;
    a.node_active.assign(h.nodes.size(), 1);
    a.cluster_active.assign(h.clusters.size(), 1);
    a.d_active = static_cast<double>(h.total_data());
    const int bottom_layer = h.depth();
    a.active_bottom = static_cast<int>(h.clusters_at_layer(bottom_layer).size());
    return a;
}

RoundActivation draw_active(const NetworkHierarchy& h, double fraction, Rng& rng) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("draw_active: fraction outside (0,1]");
    if (fraction == 1.0) return activate_all(h);

    const auto bottom = h.clusters_at_layer(h.depth());
    const auto b = static_cast<int>(bottom.size());
    const int take = static_cast<int>(std::ceil(fraction * static_cast<double>(b)));

    // partial Fisher-Yates: the first `take` slots end up a uniform subset
    std::vector<int> order(bottom.begin(), bottom.end());
    for (int i = 0; i < take; ++i) {
        const auto j = i + static_cast<int>(rng.integer(static_cast<std::uint64_t>(b - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    RoundActivation a;
    a.node_active.assign(h.nodes.size(), 0);
    a.cluster_active.assign(h.clusters.size(), 0);
    a.active_bottom = take;
    a.node_active[0] = 1;  // server
    for (int i = 0; i < take; ++i) {
        const int cid = order[static_cast<std::size_t>(i)];
        a.cluster_active[static_cast<std::size_t>(cid)] = 1;
        for (int member : h.clusters[static_cast<std::size_t>(cid)].members) {
            a.d_active += static_cast<double>(h.nodes[static_cast<std::size_t>(member)].data_count);
            // walk the path to the server, activating nodes and their clusters
            for (int n = member; n != -1 && !a.node_active[static_cast<std::size_t>(n)];
                 n = h.nodes[static_cast<std::size_t>(n)].parent) {
                a.node_active[static_cast<std::size_t>(n)] = 1;
                const int c = h.nodes[static_cast<std::size_t>(n)].cluster;
                if (c >= 0) a.cluster_active[static_cast<std::size_t>(c)] = 1;
            }
        }
    }
    return a;
}

}  // namespace hfl
