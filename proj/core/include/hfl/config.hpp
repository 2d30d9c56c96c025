#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfl/control.hpp"
#include "hfl/data.hpp"
#include "hfl/metrics.hpp"
#include "hfl/model.hpp"
#include "hfl/network.hpp"
#include "hfl/protocol.hpp"

namespace hfl {

// Carries every violated precondition found in one pass, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> items);
    const std::vector<std::string>& items() const { return items_; }

private:
    std::vector<std::string> items_;
};

// Sectioned key = value text. '#' and ';' start comments. Keys are addressed
// as "section.key".
class ConfigMap {
public:
    static ConfigMap from_text(const std::string& text);
    static ConfigMap from_file(const std::string& path);

    const std::string* find(const std::string& key) const;
    std::vector<std::string> keys() const;

private:
    std::map<std::string, std::string> kv_;
};

// The whole experiment, defaults resolved. effective() is the canonical
// serialization: stable ordering, every key present, reparses to an equal
// config; its digest stamps the CSV outputs.
struct ExperimentConfig {
    enum class DataKind { Blobs, Mnist };

    HierarchySpec hierarchy;
    ClusterMode cluster_mode = ClusterMode::Lut;
    double lut_probability = -1.0;  // >= 0 only for per-round mode redraw

    std::uint64_t topo_seed = 99;
    double comm_range_m = 250.0;
    double disc_radius_m = 500.0;
    double edge_weight = 0.0;  // 0 = per-cluster default 0.9/(deg_max+1)

    DataKind data_kind = DataKind::Blobs;
    std::string mnist_dir;
    int samples_per_leaf = 480;
    PartitionSpec partition;
    std::uint64_t data_seed = 7;
    int features = 20;
    int classes = 5;
    double spread = 0.5;
    double center_scale = 2.0;

    LossSpec loss;

    PolicyConfig policy;
    double epsilon = 0.0;
    int kappa = 0;
    bool derive_sigma = false;  // gap target (epsilon, kappa) -> sigma at runtime
    bool derive_delta = false;  // linear rate (epsilon, kappa) -> delta at runtime

    int rounds = 30;
    std::vector<std::uint64_t> seeds{1};
    ShareVariant variant = ShareVariant::ParamShare;
    double alpha = 0.0;
    double lambda_step = 0.0;
    double sampling_fraction = 1.0;
    bool track_accuracy = true;
    bool emit_bound = false;
    int oracle_budget_factor = 10;

    EnergyModel energy;

    static ExperimentConfig from_text(const std::string& text);
    static ExperimentConfig load_file(const std::string& path);

    std::string effective() const;
    std::uint64_t digest() const;
};

}  // namespace hfl
