#pragma once

#include <vector>

#include "hfl/network.hpp"
#include "hfl/rng.hpp"

namespace hfl {

// Which part of the tree participates this round. Bottom clusters are drawn
// uniformly; everything on a path from an active bottom cluster to the server
// is active. d_active replaces the total data count in the server average.
struct RoundActivation {
    std::vector<char> node_active;     // by node id
    std::vector<char> cluster_active;  // by cluster id
    double d_active = 0.0;
    int active_bottom = 0;
};

// ceil(fraction * bottom cluster count) distinct bottom clusters, uniform.
RoundActivation draw_active(const NetworkHierarchy& h, double fraction, Rng& rng);

// Everything active; d_active = total data. fraction = 1 shortcut.
RoundActivation activate_all(const NetworkHierarchy& h);

}  // namespace hfl
