#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfl/rng.hpp"

namespace hfl {

using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
    FeatureMatrix features;   // N x F, values in [0, 1] for image data
    std::vector<int> labels;  // N entries in [0, num_classes)
    int num_classes = 0;

    std::int64_t size() const { return features.rows(); }
    std::int64_t feature_dim() const { return features.cols(); }
};

class IdxError : public std::runtime_error {
public:
    enum class Kind { BadMagic, Truncated, CountMismatch };

    IdxError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// IDX image/label pair (big-endian u32 headers, magic 0x00000803 / 0x00000801).
// Pixel values are scaled by 1/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

enum class Scheme { Iid, NonIid };

struct PartitionSpec {
    Scheme scheme = Scheme::Iid;
    int labels_per_node = 1;  // NonIid only
};

struct Partition {
    // assignment[i] = sample indices of the i-th leaf (leaf order)
    std::vector<std::vector<std::int64_t>> assignment;

    std::uint64_t total() const {
        std::uint64_t d = 0;
        for (const auto& a : assignment) d += a.size();
        return d;
    }

    std::vector<std::uint64_t> counts() const {
        std::vector<std::uint64_t> c(assignment.size());
        for (std::size_t i = 0; i < assignment.size(); ++i) c[i] = assignment[i].size();
        return c;
    }
};

// Iid: global shuffle, equal deal, remainder dropped. NonIid: every node
// receives samples from exactly labels_per_node classes, all nodes get the
// same per-node count (largest count feasible given class supplies).
Partition partition(const Dataset& ds, int n_leaves, const PartitionSpec& spec, Rng& rng);

// Gaussian blobs, one center per class on the unit sphere scaled to
// center_scale; per-class sample counts as equal as possible.
Dataset make_blobs(std::int64_t samples, int features, int classes, double spread,
                   double center_scale, Rng& rng);

}  // namespace hfl
