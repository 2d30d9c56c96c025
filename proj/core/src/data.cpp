#include "hfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace hfl {

namespace {

std::uint32_t read_u32_be(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw IdxError(IdxError::Kind::Truncated, path + ": truncated header");
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IdxError(IdxError::Kind::Truncated, images_path + ": cannot open");
    const std::uint32_t img_magic = read_u32_be(img, images_path);
    if (img_magic != 0x00000803u)
        throw IdxError(IdxError::Kind::BadMagic,
                       images_path + ": bad image magic " + std::to_string(img_magic));
    const std::uint32_t count = read_u32_be(img, images_path);
    const std::uint32_t rows = read_u32_be(img, images_path);
    const std::uint32_t cols = read_u32_be(img, images_path);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IdxError(IdxError::Kind::Truncated, labels_path + ": cannot open");
    const std::uint32_t lab_magic = read_u32_be(lab, labels_path);
    if (lab_magic != 0x00000801u)
        throw IdxError(IdxError::Kind::BadMagic,
                       labels_path + ": bad label magic " + std::to_string(lab_magic));
    const std::uint32_t lab_count = read_u32_be(lab, labels_path);
    if (lab_count != count)
        throw IdxError(IdxError::Kind::CountMismatch,
                       images_path + " holds " + std::to_string(count) + " images but " +
                           labels_path + " holds " + std::to_string(lab_count) + " labels");

    const std::int64_t n = count;
    const std::int64_t f = static_cast<std::int64_t>(rows) * cols;
    Dataset ds;
    ds.features.resize(n, f);
    std::vector<unsigned char> row(static_cast<std::size_t>(f));
    for (std::int64_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(row.data()), f))
            throw IdxError(IdxError::Kind::Truncated,
                           images_path + ": truncated at sample " + std::to_string(i));
        for (std::int64_t j = 0; j < f; ++j)
            ds.features(i, j) = row[static_cast<std::size_t>(j)] / 255.0;
    }
    ds.labels.resize(static_cast<std::size_t>(n));
    std::vector<unsigned char> labels_raw(static_cast<std::size_t>(n));
    if (n > 0 && !lab.read(reinterpret_cast<char*>(labels_raw.data()), n))
        throw IdxError(IdxError::Kind::Truncated, labels_path + ": truncated labels");
    int max_label = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        ds.labels[static_cast<std::size_t>(i)] = labels_raw[static_cast<std::size_t>(i)];
        max_label = std::max(max_label, static_cast<int>(labels_raw[static_cast<std::size_t>(i)]));
    }
    ds.num_classes = max_label + 1;
    return ds;
}

namespace {

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.integer(i))]);
}

Partition partition_iid(const Dataset& ds, int n_leaves, Rng& rng) {
    std::vector<std::int64_t> order(static_cast<std::size_t>(ds.size()));
    std::iota(order.begin(), order.end(), 0);
    shuffle_in_place(order, rng);
    const std::int64_t per_node = ds.size() / n_leaves;
    if (per_node == 0)
        throw std::invalid_argument("fewer samples than leaves");
    Partition p;
    p.assignment.resize(static_cast<std::size_t>(n_leaves));
    std::int64_t next = 0;
    for (int i = 0; i < n_leaves; ++i) {
        auto& a = p.assignment[static_cast<std::size_t>(i)];
        a.assign(order.begin() + next, order.begin() + next + per_node);
        next += per_node;
    }
    return p;
}

Partition partition_non_iid(const Dataset& ds, int n_leaves, int labels_per_node,
                            Rng& rng) {
    const int classes = ds.num_classes;
    if (labels_per_node < 1)
        throw std::invalid_argument("labels_per_node must be >= 1");
    if (labels_per_node > classes)
        throw std::invalid_argument("labels_per_node exceeds the number of classes");

    std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(classes));
    for (std::int64_t i = 0; i < ds.size(); ++i)
        by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    for (auto& v : by_class) shuffle_in_place(v, rng);

    // Every node receives q samples split over labels_per_node distinct
    // classes (shard sizes within one of each other). q starts at
    // floor(N / n_leaves) and shrinks until a greedy allocation that always
    // draws from the best-supplied classes covers all nodes; remainder
    // samples are dropped so all nodes hold the same count.
    const std::int64_t shards_per_node = labels_per_node;
    std::vector<std::pair<int, std::int64_t>> plan;  // (class, take), node-major
    auto try_allocate = [&](std::int64_t q_try) {
        plan.clear();
        std::vector<std::int64_t> shard_size(static_cast<std::size_t>(shards_per_node),
                                             q_try / shards_per_node);
        for (std::int64_t s = 0; s < q_try % shards_per_node; ++s)
            ++shard_size[static_cast<std::size_t>(s)];
        std::vector<std::int64_t> left(static_cast<std::size_t>(classes));
        for (int c = 0; c < classes; ++c)
            left[static_cast<std::size_t>(c)] =
                static_cast<std::int64_t>(by_class[static_cast<std::size_t>(c)].size());
        std::vector<int> cls(static_cast<std::size_t>(classes));
        for (int i = 0; i < n_leaves; ++i) {
            std::iota(cls.begin(), cls.end(), 0);
            std::stable_sort(cls.begin(), cls.end(), [&](int a, int b) {
                return left[static_cast<std::size_t>(a)] > left[static_cast<std::size_t>(b)];
            });
            for (std::int64_t s = 0; s < shards_per_node; ++s) {
                const int c = cls[static_cast<std::size_t>(s)];
                const std::int64_t take = shard_size[static_cast<std::size_t>(s)];
                if (left[static_cast<std::size_t>(c)] < take) return false;
                left[static_cast<std::size_t>(c)] -= take;
                plan.emplace_back(c, take);
            }
        }
        return true;
    };
    std::int64_t q = ds.size() / n_leaves;
    while (q >= shards_per_node && !try_allocate(q)) --q;
    if (q < shards_per_node)
        throw std::invalid_argument(
            "non-iid split infeasible: " + std::to_string(n_leaves) + " leaves x " +
            std::to_string(labels_per_node) + " labels per node exceeds the shard "
            "granularity of " + std::to_string(ds.size()) + " samples in " +
            std::to_string(classes) + " classes");

    std::vector<std::int64_t> next(static_cast<std::size_t>(classes), 0);
    Partition p;
    p.assignment.resize(static_cast<std::size_t>(n_leaves));
    std::size_t pi = 0;
    for (int i = 0; i < n_leaves; ++i) {
        auto& a = p.assignment[static_cast<std::size_t>(i)];
        for (std::int64_t s = 0; s < shards_per_node; ++s, ++pi) {
            const auto [c, take] = plan[pi];
            const auto& pool = by_class[static_cast<std::size_t>(c)];
            for (std::int64_t t = 0; t < take; ++t)
                a.push_back(pool[static_cast<std::size_t>(next[static_cast<std::size_t>(c)] + t)]);
            next[static_cast<std::size_t>(c)] += take;
        }
        std::sort(a.begin(), a.end());
    }
    return p;
}

}  // namespace

Partition partition(const Dataset& ds, int n_leaves, const PartitionSpec& spec, Rng& rng) {
    if (n_leaves < 1) throw std::invalid_argument("leaf count must be >= 1");
    if (ds.size() < 1) throw std::invalid_argument("empty dataset");
    if (spec.scheme == Scheme::Iid) return partition_iid(ds, n_leaves, rng);
    return partition_non_iid(ds, n_leaves, spec.labels_per_node, rng);
}

Dataset make_blobs(std::int64_t samples, int features, int classes, double spread,
                   double center_scale, Rng& rng) {
    if (samples < classes) throw std::invalid_argument("need at least one sample per class");
    if (features < 1 || classes < 2) throw std::invalid_argument("bad blob shape");
    if (spread <= 0.0 || center_scale <= 0.0)
        throw std::invalid_argument("spread and center scale must be > 0");

    Eigen::MatrixXd centers(classes, features);
    for (int c = 0; c < classes; ++c) {
        Eigen::VectorXd dir(features);
        for (int j = 0; j < features; ++j) dir(j) = rng.normal();
        centers.row(c) = center_scale * dir.normalized().transpose();
    }

    Dataset ds;
    ds.num_classes = classes;
    ds.features.resize(samples, features);
    ds.labels.resize(static_cast<std::size_t>(samples));
    for (std::int64_t i = 0; i < samples; ++i) {
        const int c = static_cast<int>(i % classes);
        ds.labels[static_cast<std::size_t>(i)] = c;
        for (int j = 0; j < features; ++j)
            ds.features(i, j) = centers(c, j) + spread * rng.normal();
    }
    return ds;
}

}  // namespace hfl
