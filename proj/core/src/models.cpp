#include "gula/models.hpp"

#include "gula/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gula {

namespace {

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double stable_softplus(double z) {
    // log(1 + e^z) without overflow for |z| beyond ~700
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

// (1/n) x negative log-prior, w-dependent part only.
double prior_energy(const ModelSpec& model, const Eigen::VectorXd& w) {
    const double share = 1.0 / model.n_agents;
    double acc = 0.0;
    if (model.prior.kind == PriorKind::gaussian) {
        const double inv_var = 1.0 / (model.prior.scale * model.prior.scale);
        for (Eigen::Index c = 0; c < w.size(); ++c) {
            const double d = w[c] - model.prior.location;
            acc += 0.5 * d * d * inv_var;
        }
    } else {
        for (Eigen::Index c = 0; c < w.size(); ++c)
            acc += std::abs(w[c] - model.prior.location) / model.prior.scale;
    }
    return share * acc;
}

void add_prior_grad(const ModelSpec& model, const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
    const double share = 1.0 / model.n_agents;
    if (model.prior.kind == PriorKind::gaussian) {
        const double inv_var = 1.0 / (model.prior.scale * model.prior.scale);
        for (Eigen::Index c = 0; c < w.size(); ++c)
            grad[c] += share * (w[c] - model.prior.location) * inv_var;
    } else {
        for (Eigen::Index c = 0; c < w.size(); ++c) {
            const double d = w[c] - model.prior.location;
            const double sign = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            grad[c] += share * sign / model.prior.scale;
        }
    }
}

void check_dims(const ModelSpec& model, const DataShard& shard, const Eigen::VectorXd& w) {
    if (w.size() != model.d_w)
        throw DimensionMismatch("parameter vector has dimension " + std::to_string(w.size()) +
                                ", model expects " + std::to_string(model.d_w));
    if (model.kind != ModelKind::gaussian1d && shard.inputs.cols() != model.d_in)
        throw DimensionMismatch("shard feature dimension " + std::to_string(shard.inputs.cols()) +
                                ", model expects " + std::to_string(model.d_in));
}

// Negative data log-likelihood over the given shard rows, scaled; the scale
// is the 1/f_i unbiasing factor for minibatches (exactly 1.0 for the full
// shard).
void add_data_grad(const ModelSpec& model, const DataShard& shard, const Eigen::VectorXd& w,
                   std::span<const int> indices, double scale, Eigen::VectorXd& grad) {
    switch (model.kind) {
        case ModelKind::gaussian1d: {
            const double inv_var = 1.0 / (model.sigma_x * model.sigma_x);
            double acc = 0.0;
            for (int idx : indices) acc += (w[0] - shard.inputs(idx, 0)) * inv_var;
            grad[0] += scale * acc;
            break;
        }
        case ModelKind::logistic: {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.d_w);
            for (int idx : indices) {
                const double z = w.dot(shard.inputs.row(idx));
                const double resid = stable_sigmoid(z) - static_cast<double>(shard.labels[idx]);
                acc += resid * shard.inputs.row(idx).transpose();
            }
            grad += scale * acc;
            break;
        }
        case ModelKind::softmax: {
            // w reshaped row-major as (n_classes x d_in): w[c*d_in + f]
            const int classes = model.n_classes;
            const int d_in = model.d_in;
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>
                weight(w.data(), classes, d_in);
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.d_w);
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                acc_mat(acc.data(), classes, d_in);
            Eigen::VectorXd logits(classes);
            for (int idx : indices) {
                const auto x = shard.inputs.row(idx);
                logits.noalias() = weight * x.transpose();
                const double top = logits.maxCoeff();
                Eigen::VectorXd p = (logits.array() - top).exp();
                p /= p.sum();
                p[shard.labels[idx]] -= 1.0;
                acc_mat.noalias() += p * x;
            }
            grad += scale * acc;
            break;
        }
    }
}

double data_energy(const ModelSpec& model, const DataShard& shard, const Eigen::VectorXd& w) {
    double acc = 0.0;
    switch (model.kind) {
        case ModelKind::gaussian1d: {
            const double inv_var = 1.0 / (model.sigma_x * model.sigma_x);
            for (Eigen::Index r = 0; r < shard.count(); ++r) {
                const double d = shard.inputs(r, 0) - w[0];
                acc += 0.5 * d * d * inv_var;
            }
            break;
        }
        case ModelKind::logistic: {
            for (Eigen::Index r = 0; r < shard.count(); ++r) {
                const double z = w.dot(shard.inputs.row(r));
                acc += stable_softplus(z) - shard.labels[r] * z;
            }
            break;
        }
        case ModelKind::softmax: {
            const int classes = model.n_classes;
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>
                weight(w.data(), classes, model.d_in);
            Eigen::VectorXd logits(classes);
            for (Eigen::Index r = 0; r < shard.count(); ++r) {
                logits.noalias() = weight * shard.inputs.row(r).transpose();
                const double top = logits.maxCoeff();
                const double lse = top + std::log((logits.array() - top).exp().sum());
                acc += lse - logits[shard.labels[r]];
            }
            break;
        }
    }
    return acc;
}

GradientResult grad_over_indices(const ModelSpec& model, const DataShard& shard,
                                 const Eigen::VectorXd& w, std::vector<int> indices,
                                 double scale) {
    GradientResult result;
    result.grad = Eigen::VectorXd::Zero(model.d_w);
    add_prior_grad(model, w, result.grad);
    add_data_grad(model, shard, w, indices, scale, result.grad);
    if (!result.grad.allFinite())
        throw NonFiniteGradient("non-finite gradient for agent " + std::to_string(shard.owner));
    result.minibatch_indices = std::move(indices);
    return result;
}

}  // namespace

ModelSpec ModelSpec::gaussian1d(int n_agents, double sigma_theta, double sigma_x) {
    ModelSpec m;
    m.kind = ModelKind::gaussian1d;
    m.d_w = 1;
    m.n_agents = n_agents;
    m.sigma_theta = sigma_theta;
    m.sigma_x = sigma_x;
    m.prior = Prior{PriorKind::gaussian, 0.0, sigma_theta};
    return m;
}

ModelSpec ModelSpec::logistic(int n_agents, int d_in, Prior prior) {
    ModelSpec m;
    m.kind = ModelKind::logistic;
    m.d_in = d_in;
    m.d_w = d_in;
    m.n_agents = n_agents;
    m.prior = prior;
    return m;
}

ModelSpec ModelSpec::softmax(int n_agents, int d_in, int n_classes, Prior prior) {
    ModelSpec m;
    m.kind = ModelKind::softmax;
    m.d_in = d_in;
    m.n_classes = n_classes;
    m.d_w = n_classes * d_in;
    m.n_agents = n_agents;
    m.prior = prior;
    return m;
}

double energy(const ModelSpec& model, const DataShard& shard, const Eigen::VectorXd& w) {
    check_dims(model, shard, w);
    return prior_energy(model, w) + data_energy(model, shard, w);
}

GradientResult energy_grad_full(const ModelSpec& model, const DataShard& shard,
                                const Eigen::VectorXd& w) {
    check_dims(model, shard, w);
    std::vector<int> all(shard.count());
    std::iota(all.begin(), all.end(), 0);
    GradientResult r = grad_over_indices(model, shard, w, std::move(all), 1.0);
    r.minibatch_indices.clear();  // full gradient: no batch to reuse
    return r;
}

GradientResult energy_grad_stochastic(const ModelSpec& model, const DataShard& shard,
                                      const Eigen::VectorXd& w, double f, RngStream& rng) {
    check_dims(model, shard, w);
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("f", "minibatch fraction must be in (0, 1]");
    const int total = static_cast<int>(shard.count());
    const int batch = std::max(1, static_cast<int>(std::llround(f * total)));
    std::vector<int> indices;
    if (batch >= total) {
        indices.resize(total);
        std::iota(indices.begin(), indices.end(), 0);  // f = 1: full shard, natural order
    } else {
        std::vector<int> pool(total);
        std::iota(pool.begin(), pool.end(), 0);
        for (int k = 0; k < batch; ++k) {
            const int pick = k + static_cast<int>(rng.uniform_below(
                                 static_cast<uint64_t>(total - k)));
            std::swap(pool[k], pool[pick]);
        }
        indices.assign(pool.begin(), pool.begin() + batch);
    }
    const double scale = static_cast<double>(total) / static_cast<double>(indices.size());
    return grad_over_indices(model, shard, w, std::move(indices), scale);
}

GradientResult grad_with_reused_batch(const ModelSpec& model, const DataShard& shard,
                                      const Eigen::VectorXd& w, std::span<const int> indices) {
    check_dims(model, shard, w);
    for (int idx : indices)
        if (idx < 0 || idx >= shard.count())
            throw IndexOutOfRange("minibatch index " + std::to_string(idx) +
                                  " out of range for shard of " +
                                  std::to_string(shard.count()));
    const double scale = static_cast<double>(shard.count()) / static_cast<double>(indices.size());
    return grad_over_indices(model, shard, w, std::vector<int>(indices.begin(), indices.end()),
                             scale);
}

std::pair<double, double> analytic_posterior_gaussian1d(double sigma_theta, double sigma_x,
                                                        std::span<const double> data) {
    const double n = static_cast<double>(data.size());
    double sum = 0.0;
    for (double x : data) sum += x;
    const double mu = sum / (sigma_x * sigma_x / (sigma_theta * sigma_theta) + n);
    const double var = 1.0 / (1.0 / (sigma_theta * sigma_theta) + n / (sigma_x * sigma_x));
    return {mu, var};
}

std::vector<int> predict(const ModelSpec& model, std::span<const Eigen::VectorXd> samples,
                         const Eigen::MatrixXd& inputs) {
    if (samples.empty()) throw DimensionMismatch("predict: need at least one posterior sample");
    if (inputs.cols() != model.d_in)
        throw DimensionMismatch("predict: input dimension " + std::to_string(inputs.cols()) +
                                ", model expects " + std::to_string(model.d_in));
    for (const auto& w : samples)
        if (w.size() != model.d_w)
            throw DimensionMismatch("predict: sample dimension mismatch");

    std::vector<int> labels(inputs.rows());
    if (model.kind == ModelKind::logistic) {
        for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
            double p = 0.0;
            for (const auto& w : samples) p += stable_sigmoid(w.dot(inputs.row(r)));
            p /= static_cast<double>(samples.size());
            labels[r] = p > 0.5 ? 1 : 0;
        }
        return labels;
    }
    if (model.kind == ModelKind::softmax) {
        const int classes = model.n_classes;
        Eigen::VectorXd logits(classes);
        Eigen::VectorXd mean_p(classes);
        for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
            mean_p.setZero();
            for (const auto& w : samples) {
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>
                    weight(w.data(), classes, model.d_in);
                logits.noalias() = weight * inputs.row(r).transpose();
                const double top = logits.maxCoeff();
                Eigen::VectorXd p = (logits.array() - top).exp();
                mean_p += p / p.sum();
            }
            int best = 0;
            for (int c = 1; c < classes; ++c)
                if (mean_p[c] > mean_p[best]) best = c;  // ties keep the lower index
            labels[r] = best;
        }
        return labels;
    }
    throw DimensionMismatch("predict: not defined for the 1D Gaussian model");
}

Eigen::VectorXd init_params(const ModelSpec& model, RngStream& rng) {
    Eigen::VectorXd w(model.d_w);
    if (model.kind == ModelKind::softmax) {
        for (Eigen::Index c = 0; c < w.size(); ++c) w[c] = rng.laplace(0.0, 1.0);
    } else {
        for (Eigen::Index c = 0; c < w.size(); ++c) w[c] = rng.normal();
    }
    return w;
}

}  // namespace gula
