#include "gula/metrics.hpp"

#include "gula/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gula {

double consensus_error_sq(const SwarmState& state) {
    const int n = state.size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(state.dim());
    for (const auto& agent : state.agents) mean += agent.w;
    mean /= static_cast<double>(n);
    double acc = 0.0;
    for (const auto& agent : state.agents) acc += (agent.w - mean).squaredNorm();
    return acc;
}

double kl_gaussian_from_moments(double mu_s, double var_s, double mu_p, double var_p) {
    const double kl = 0.5 * std::log(var_p / var_s) +
                      (var_s + (mu_s - mu_p) * (mu_s - mu_p)) / (2.0 * var_p) - 0.5;
    return kl < 0.0 ? 0.0 : kl;
}

double kl_gaussian_vs_analytic(std::span<const double> samples, double mu_p, double var_p) {
    if (samples.size() < 2) throw DegenerateSamples("need at least 2 samples for a variance");
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    if (!(var > 0.0)) throw DegenerateSamples("zero sample variance");
    return kl_gaussian_from_moments(mean, var, mu_p, var_p);
}

double kl_standard_error(double mu_s, double var_s, double mu_p, double var_p, int64_t count) {
    const double c = static_cast<double>(count);
    const double d_mu = (mu_s - mu_p) / var_p;                    // dKL/dmu_s
    const double d_var = 0.5 / var_p - 0.5 / var_s;               // dKL/dvar_s
    const double var_mu = var_s / c;
    const double var_var = 2.0 * var_s * var_s / (c - 1.0);
    const double delta_sq = d_mu * d_mu * var_mu + d_var * d_var * var_var;
    const double second_order = 2.0 / (c * c);  // ~Var(chi2_2 / 2c) near the target
    return std::sqrt(delta_sq + second_order);
}

std::vector<double> accuracy(const ModelSpec& model,
                             const std::vector<std::vector<Eigen::VectorXd>>& samples_per_agent,
                             const Eigen::MatrixXd& inputs, const std::vector<int>& labels) {
    if (inputs.rows() == 0) throw DimensionMismatch("accuracy: empty test set");
    if (static_cast<Eigen::Index>(labels.size()) != inputs.rows())
        throw DimensionMismatch("accuracy: labels/inputs row mismatch");
    std::vector<double> out;
    out.reserve(samples_per_agent.size());
    for (const auto& samples : samples_per_agent) {
        const std::vector<int> pred = predict(model, samples, inputs);
        int64_t correct = 0;
        for (size_t r = 0; r < labels.size(); ++r)
            if (pred[r] == labels[r]) ++correct;
        out.push_back(static_cast<double>(correct) / static_cast<double>(labels.size()));
    }
    return out;
}

DecayFit fit_decay_rate(std::span<const std::pair<int64_t, double>> series, int64_t burn_in) {
    std::vector<double> xs, ys;
    for (const auto& [k, v] : series) {
        if (k < burn_in) continue;
        if (!(v > 0.0))
            throw NonPositiveValues("decay fit needs positive values, got " + std::to_string(v) +
                                    " at k=" + std::to_string(k));
        xs.push_back(std::log(static_cast<double>(k) + 1.0));
        ys.push_back(std::log(v));
    }
    if (xs.size() < 20)
        throw InsufficientData("decay fit needs >= 20 post-burn-in points, got " +
                               std::to_string(xs.size()));

    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;  // log v = intercept + slope log(k+1)

    DecayFit fit;
    fit.exponent = -slope;
    fit.amplitude = std::exp(my - slope * mx);
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double pred = my + slope * (xs[i] - mx);
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - my) * (ys[i] - my);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

double estimate_lipschitz(const ModelSpec& model, const std::vector<DataShard>& shards,
                          int probes, double radius, RngStream& rng) {
    if (probes < 100) throw ValidationError("lipschitz.probes", "need at least 100 probes");
    const auto draw_in_ball = [&](Eigen::Index d) {
        Eigen::VectorXd v = rng.normal_vector(d);
        const double norm = v.norm();
        const double r = radius * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(d));
        return Eigen::VectorXd((r / norm) * v);
    };
    double best = 0.0;
    for (const auto& shard : shards) {
        for (int p = 0; p < probes; ++p) {
            const Eigen::VectorXd w1 = draw_in_ball(model.d_w);
            const Eigen::VectorXd w2 = draw_in_ball(model.d_w);
            const double dist = (w1 - w2).norm();
            if (dist < 1e-12) continue;
            const Eigen::VectorXd g1 = energy_grad_full(model, shard, w1).grad;
            const Eigen::VectorXd g2 = energy_grad_full(model, shard, w2).grad;
            best = std::max(best, (g1 - g2).norm() / dist);
        }
    }
    return best;
}

// --- run records ------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_trial_csv(const RunRecord& record, const std::string& path) {
    bool has_kl = false, has_acc = false;
    for (const auto& row : record.series) {
        if (std::isfinite(row.kl)) has_kl = true;
        if (!row.accuracy.empty()) has_acc = true;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "cycle,consensus_error_sq";
    if (has_kl) out << ",kl";
    if (has_acc)
        for (int i = 0; i < record.n_agents; ++i) out << ",acc_agent_" << i;
    out << "\n";
    for (const auto& row : record.series) {
        out << row.cycle << ',' << format_double(row.consensus_error_sq);
        if (has_kl) out << ',' << format_double(row.kl);
        if (has_acc)
            for (int i = 0; i < record.n_agents; ++i)
                out << ',' << format_double(i < static_cast<int>(row.accuracy.size())
                                                ? row.accuracy[i]
                                                : std::numeric_limits<double>::quiet_NaN());
        out << "\n";
    }
}

TrialCsv read_trial_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    TrialCsv csv;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (line_no == 1) {
            csv.columns = cells;
            continue;
        }
        std::vector<double> values;
        values.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                values.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw MalformedRow("not a number: '" + c + "'", line_no);
            }
        }
        if (values.size() != csv.columns.size())
            throw MalformedRow("row width differs from header", line_no);
        csv.rows.push_back(std::move(values));
    }
    return csv;
}

std::vector<std::pair<int64_t, double>> TrialCsv::series(const std::string& column) const {
    const auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end()) throw ParseError("no column named " + column);
    const size_t idx = static_cast<size_t>(it - columns.begin());
    std::vector<std::pair<int64_t, double>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (std::isnan(row[idx])) continue;
        out.emplace_back(static_cast<int64_t>(row[0]), row[idx]);
    }
    return out;
}

}  // namespace gula
