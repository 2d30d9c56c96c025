#include "hfl/model.hpp"

#include <cmath>
#include <stdexcept>

namespace hfl {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

}  // namespace

Model::Model(const Dataset& ds, const std::vector<std::vector<std::int64_t>>& assignment,
             const LossSpec& spec)
    : spec_(spec) {
    if (assignment.empty()) throw std::invalid_argument("model: empty assignment");
    classes_ = ds.num_classes;
    features_ = static_cast<int>(ds.features.cols());
    std::int64_t total = 0;
    offsets_.reserve(assignment.size() + 1);
    offsets_.push_back(0);
    for (const auto& idx : assignment) {
        total += static_cast<std::int64_t>(idx.size());
        offsets_.push_back(total);
    }
    xaug_.resize(total, features_ + 1);
    labels_.resize(static_cast<std::size_t>(total));
    std::int64_t row = 0;
    for (const auto& idx : assignment) {
        for (std::int64_t src : idx) {
            if (src < 0 || src >= ds.size())
                throw std::out_of_range("model: sample index outside dataset");
            xaug_.row(row).head(features_) = ds.features.row(src);
            xaug_(row, features_) = 1.0;
            labels_[static_cast<std::size_t>(row)] = ds.labels[static_cast<std::size_t>(src)];
            ++row;
        }
    }
    if (spec_.kind == LossSpec::Kind::SvmL2) {
        dim_ = classes_ * (features_ + 1);
    } else {
        dim_ = spec_.hidden * (features_ + 1) + classes_ * (spec_.hidden + 1);
    }
}

double Model::block_loss(const ParamVector& w, std::int64_t begin, std::int64_t end) const {
    const auto n = end - begin;
    const auto X = xaug_.middleRows(begin, n);
    if (spec_.kind == LossSpec::Kind::SvmL2) {
        ConstRowMap W(w.data(), classes_, features_ + 1);
        Eigen::MatrixXd margins = X * W.transpose();
        double acc = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const int label = labels_[static_cast<std::size_t>(begin + i)];
            for (int c = 0; c < classes_; ++c) {
                const double y = (label == c) ? 1.0 : -1.0;
                const double h = std::max(0.0, 1.0 - y * margins(i, c));
                acc += h * h;
            }
        }
        return acc / (static_cast<double>(n) * classes_) + 0.5 * spec_.mu * w.squaredNorm();
    }
    const int H = spec_.hidden;
    ConstRowMap W1(w.data(), H, features_ + 1);
    ConstRowMap W2(w.data() + H * (features_ + 1), classes_, H + 1);
    Eigen::MatrixXd Z = (X * W1.transpose()).array().tanh();
    Eigen::MatrixXd logits = Z * W2.leftCols(H).transpose();
    logits.rowwise() += W2.col(H).transpose();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        acc += lse - logits(i, labels_[static_cast<std::size_t>(begin + i)]);
    }
    return acc / static_cast<double>(n) + 0.5 * spec_.reg * w.squaredNorm();
}

ParamVector Model::block_gradient(const ParamVector& w, std::int64_t begin,
                                  std::int64_t end) const {
    const auto n = end - begin;
    const auto X = xaug_.middleRows(begin, n);
    ParamVector g(dim_);
    if (spec_.kind == LossSpec::Kind::SvmL2) {
        ConstRowMap W(w.data(), classes_, features_ + 1);
        Eigen::MatrixXd margins = X * W.transpose();
        Eigen::MatrixXd S(n, classes_);
        const double scale = 2.0 / (static_cast<double>(n) * classes_);
        for (std::int64_t i = 0; i < n; ++i) {
            const int label = labels_[static_cast<std::size_t>(begin + i)];
            for (int c = 0; c < classes_; ++c) {
                const double y = (label == c) ? 1.0 : -1.0;
                const double h = std::max(0.0, 1.0 - y * margins(i, c));
                S(i, c) = -scale * y * h;
            }
        }
        RowMap G(g.data(), classes_, features_ + 1);
        G.noalias() = S.transpose() * X;
        g += spec_.mu * w;
        return g;
    }
    const int H = spec_.hidden;
    ConstRowMap W1(w.data(), H, features_ + 1);
    ConstRowMap W2(w.data() + H * (features_ + 1), classes_, H + 1);
    Eigen::MatrixXd Z = (X * W1.transpose()).array().tanh();
    Eigen::MatrixXd logits = Z * W2.leftCols(H).transpose();
    logits.rowwise() += W2.col(H).transpose();
    Eigen::MatrixXd P(n, classes_);
    for (std::int64_t i = 0; i < n; ++i) {
        const double m = logits.row(i).maxCoeff();
        P.row(i) = (logits.row(i).array() - m).exp();
        P.row(i) /= P.row(i).sum();
        P(i, labels_[static_cast<std::size_t>(begin + i)]) -= 1.0;
    }
    P /= static_cast<double>(n);
    RowMap G1(g.data(), H, features_ + 1);
    RowMap G2(g.data() + H * (features_ + 1), classes_, H + 1);
    G2.leftCols(H).noalias() = P.transpose() * Z;
    G2.col(H) = P.colwise().sum().transpose();
    Eigen::MatrixXd dA =
        (P * W2.leftCols(H)).array() * (1.0 - Z.array().square());
    G1.noalias() = dA.transpose() * X;
    g += spec_.reg * w;
    return g;
}

double Model::leaf_loss(const ParamVector& w, int leaf) const {
    return block_loss(w, offsets_[static_cast<std::size_t>(leaf)],
                      offsets_[static_cast<std::size_t>(leaf) + 1]);
}

ParamVector Model::leaf_gradient(const ParamVector& w, int leaf) const {
    return block_gradient(w, offsets_[static_cast<std::size_t>(leaf)],
                          offsets_[static_cast<std::size_t>(leaf) + 1]);
}

double Model::global_loss(const ParamVector& w) const {
    return block_loss(w, 0, xaug_.rows());
}

ParamVector Model::global_gradient(const ParamVector& w) const {
    return block_gradient(w, 0, xaug_.rows());
}

double Model::accuracy(const ParamVector& w) const {
    const auto n = xaug_.rows();
    Eigen::MatrixXd scores;
    if (spec_.kind == LossSpec::Kind::SvmL2) {
        ConstRowMap W(w.data(), classes_, features_ + 1);
        scores = xaug_ * W.transpose();
    } else {
        const int H = spec_.hidden;
        ConstRowMap W1(w.data(), H, features_ + 1);
        ConstRowMap W2(w.data() + H * (features_ + 1), classes_, H + 1);
        Eigen::MatrixXd Z = (xaug_ * W1.transpose()).array().tanh();
        scores = Z * W2.leftCols(H).transpose();
        scores.rowwise() += W2.col(H).transpose();
    }
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        scores.row(i).maxCoeff(&best);
        if (static_cast<int>(best) == labels_[static_cast<std::size_t>(i)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

double Model::empirical_smoothness(int pairs, double scale, Rng& rng) const {
    double worst = 0.0;
    ParamVector x(dim_), y(dim_);
    for (int p = 0; p < pairs; ++p) {
        for (int i = 0; i < dim_; ++i) x[i] = scale * rng.normal();
        for (int i = 0; i < dim_; ++i) y[i] = scale * rng.normal();
        const double dist = (x - y).norm();
        if (dist == 0.0) continue;
        const double ratio = (global_gradient(x) - global_gradient(y)).norm() / dist;
        worst = std::max(worst, ratio);
    }
    return worst;
}

GdTrajectory centralized_gd(const std::function<double(const ParamVector&)>& value,
                            const std::function<ParamVector(const ParamVector&)>& grad,
                            ParamVector w0, int steps, double beta) {
    GdTrajectory out;
    out.w.reserve(static_cast<std::size_t>(steps) + 1);
    out.loss.reserve(static_cast<std::size_t>(steps) + 1);
    out.w.push_back(std::move(w0));
    out.loss.push_back(value(out.w.back()));
    for (int k = 0; k < steps; ++k) {
        ParamVector next = out.w.back() - beta * grad(out.w.back());
        out.w.push_back(std::move(next));
        out.loss.push_back(value(out.w.back()));
    }
    return out;
}

GdTrajectory centralized_gd(const Model& model, ParamVector w0, int steps, double beta) {
    return centralized_gd([&](const ParamVector& w) { return model.global_loss(w); },
                          [&](const ParamVector& w) { return model.global_gradient(w); },
                          std::move(w0), steps, beta);
}

double reference_optimum(const Model& model, const ParamVector& w0, int budget) {
    ParamVector w = w0;
    const double beta = 1.0 / model.spec().eta;
    for (int k = 0; k < budget; ++k) w -= beta * model.global_gradient(w);
    return model.global_loss(w);
}

}  // namespace hfl
