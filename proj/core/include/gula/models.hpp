// models.hpp — target posteriors: per-agent energy, full and stochastic
// gradients, data shards, and the three concrete models (1D Gaussian,
// binary logistic regression, softmax cross-entropy).
//
// Every agent's energy carries a 1/n share of the prior so that the shard
// energies sum back to the full posterior energy.
#pragma once

#include "gula/rng.hpp"

#include <Eigen/Core>

#include <span>
#include <utility>
#include <vector>

namespace gula {

enum class PriorKind { gaussian, laplace };

struct Prior {
    PriorKind kind = PriorKind::gaussian;
    double location = 0.0;  // mean (gaussian) or loc (laplace)
    double scale = 1.0;     // std (gaussian) or scale (laplace)
};

enum class ModelKind { gaussian1d, logistic, softmax };

struct ModelSpec {
    ModelKind kind = ModelKind::gaussian1d;
    int d_w = 1;       // parameter dimension
    int n_agents = 1;  // shard count (prior split factor)
    Prior prior;

    // gaussian1d only
    double sigma_theta = 1.0;
    double sigma_x = 5.0;

    // classification only; d_in counts the already-augmented bias feature
    int d_in = 0;
    int n_classes = 0;

    static ModelSpec gaussian1d(int n_agents, double sigma_theta, double sigma_x);
    static ModelSpec logistic(int n_agents, int d_in, Prior prior);
    static ModelSpec softmax(int n_agents, int d_in, int n_classes, Prior prior);
};

// One agent's slice of the data. For gaussian1d, inputs is M x 1 and labels
// are unused. Classification labels are class indices (binary: 0/1).
struct DataShard {
    Eigen::MatrixXd inputs;  // M x d_in, row per point
    std::vector<int> labels;
    int owner = 0;

    Eigen::Index count() const { return inputs.rows(); }
};

struct GradientResult {
    Eigen::VectorXd grad;
    std::vector<int> minibatch_indices;  // empty for the full gradient
};

// Scalar shard energy E_i(w) up to an additive constant: the negative data
// log-likelihood plus a 1/n share of the negative log-prior.
double energy(const ModelSpec& model, const DataShard& shard, const Eigen::VectorXd& w);

// grad E_i(w) over the whole shard. Throws NonFiniteGradient on overflow.
GradientResult energy_grad_full(const ModelSpec& model, const DataShard& shard,
                                const Eigen::VectorXd& w);

// Minibatch gradient: m = max(1, round(f*M)) indices drawn uniformly without
// replacement, data term rescaled by M/m. f = 1 reproduces the full gradient
// bit for bit (natural index order, no randomness consumed).
GradientResult energy_grad_stochastic(const ModelSpec& model, const DataShard& shard,
                                      const Eigen::VectorXd& w, double f, RngStream& rng);

// Same stochastic gradient at a new point, reusing a previously drawn batch
// (local computations 2..T of a cycle).
GradientResult grad_with_reused_batch(const ModelSpec& model, const DataShard& shard,
                                      const Eigen::VectorXd& w, std::span<const int> indices);

// Exact conjugate posterior N(mu_p, sigma_p^2) of the 1D Gaussian model
// given the pooled data.
std::pair<double, double> analytic_posterior_gaussian1d(double sigma_theta, double sigma_x,
                                                        std::span<const double> data);

// Posterior-predictive class labels: the predictive probability is averaged
// over the given parameter samples, then thresholded (binary, 0.5) or
// arg-maxed (softmax); ties resolve to the lower class index.
std::vector<int> predict(const ModelSpec& model, std::span<const Eigen::VectorXd> samples,
                         const Eigen::MatrixXd& inputs);

// Chain initialization: standard normal (gaussian1d, logistic) or
// Laplace(0,1) (softmax) entries.
Eigen::VectorXd init_params(const ModelSpec& model, RngStream& rng);

}  // namespace gula
