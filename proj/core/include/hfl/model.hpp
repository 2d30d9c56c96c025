#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "hfl/data.hpp"

namespace hfl {

using ParamVector = Eigen::VectorXd;

struct LossSpec {
    enum class Kind { SvmL2, Mlp };
    Kind kind = Kind::SvmL2;
    double mu = 0.1;   // strong-convexity constant; exact L2 coefficient for the SVM
    double eta = 10.0; // smoothness constant; beta = 1/eta
    int hidden = 32;   // Mlp only
    double reg = 0.1;  // Mlp L2 coefficient
};

// Loss/gradient machinery over the distributed subset of a dataset. Rows are
// regrouped so each leaf's samples are contiguous; all leaf operations are
// zero-copy block views. The SVM is one-vs-all squared hinge, averaged over
// samples and classes, plus (mu/2)|w|^2, which is exactly mu-strongly convex.
class Model {
public:
    Model(const Dataset& ds, const std::vector<std::vector<std::int64_t>>& assignment,
          const LossSpec& spec);

    int dim() const { return dim_; }
    int leaves() const { return static_cast<int>(offsets_.size()) - 1; }
    std::uint64_t data_count(int leaf) const {
        return static_cast<std::uint64_t>(offsets_[static_cast<std::size_t>(leaf) + 1] -
                                          offsets_[static_cast<std::size_t>(leaf)]);
    }
    std::uint64_t total_data() const { return static_cast<std::uint64_t>(xaug_.rows()); }
    const LossSpec& spec() const { return spec_; }

    // f_n: mean per-sample loss over the leaf's block plus the regularizer
    double leaf_loss(const ParamVector& w, int leaf) const;
    ParamVector leaf_gradient(const ParamVector& w, int leaf) const;

    // F: mean over all distributed samples plus the regularizer; equals the
    // data-weighted mean of leaf losses
    double global_loss(const ParamVector& w) const;
    ParamVector global_gradient(const ParamVector& w) const;

    double accuracy(const ParamVector& w) const;  // top-1 over the distributed set

    // max over random pairs of |grad(x)-grad(y)| / |x-y|; probe for the
    // configured smoothness constant
    double empirical_smoothness(int pairs, double scale, Rng& rng) const;

private:
    double block_loss(const ParamVector& w, std::int64_t begin, std::int64_t end) const;
    ParamVector block_gradient(const ParamVector& w, std::int64_t begin,
                               std::int64_t end) const;

    LossSpec spec_;
    FeatureMatrix xaug_;      // D x (F+1), bias column appended, leaf-grouped
    std::vector<int> labels_; // D, leaf-grouped
    std::vector<std::int64_t> offsets_;  // leaves + 1
    int classes_ = 0;
    int features_ = 0;  // F (without bias)
    int dim_ = 0;       // M
};

struct GdTrajectory {
    std::vector<ParamVector> w;  // w[0] = start, size steps + 1
    std::vector<double> loss;    // loss[k] = F(w[k])
};

// w[k+1] = w[k] - beta * grad(w[k])
GdTrajectory centralized_gd(const std::function<double(const ParamVector&)>& value,
                            const std::function<ParamVector(const ParamVector&)>& grad,
                            ParamVector w0, int steps, double beta);

GdTrajectory centralized_gd(const Model& model, ParamVector w0, int steps, double beta);

// F(w*) stand-in: final loss of a long centralized run (10x the experiment
// budget by convention).
double reference_optimum(const Model& model, const ParamVector& w0, int budget);

}  // namespace hfl
