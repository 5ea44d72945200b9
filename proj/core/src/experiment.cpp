#include "gula/experiment.hpp"

#include "gula/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

namespace gula {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::vector<DataShard> split_toy_data(const std::vector<double>& data, int n_agents) {
    std::vector<DataShard> shards;
    const int total = static_cast<int>(data.size());
    const int base = total / n_agents;
    const int extra = total % n_agents;
    int offset = 0;
    for (int a = 0; a < n_agents; ++a) {
        const int count = base + (a < extra ? 1 : 0);
        DataShard shard;
        shard.owner = a;
        shard.inputs.resize(count, 1);
        for (int r = 0; r < count; ++r) shard.inputs(r, 0) = data[offset + r];
        offset += count;
        shards.push_back(std::move(shard));
    }
    return shards;
}

json condition_report_json(const ConditionReport& r) {
    json j;
    j["a"] = r.a;
    j["T_upper"] = r.t_upper;
    j["n"] = r.n;
    j["lipschitz_estimate"] = r.lipschitz;            // probe lower bound on max_i L_i
    j["lipschitz_bar_bound"] = r.lipschitz_bar;       // n * L, bound for the summed gradient
    j["p_m"] = r.p_m;
    j["lambda"] = r.lambda;
    j["cond1"] = {{"holds", r.cond1}, {"lhs_aT", r.cond1_lhs}, {"rhs", r.cond1_rhs}};
    j["cond2"] = {{"holds", r.cond2},
                  {"lambda_bar", r.lambda_bar},
                  {"theta_star", r.theta_star}};
    if (r.cond3_evaluable)
        j["cond3"] = {{"holds", r.cond3}, {"rhs", r.cond3_rhs}, {"rho_u", r.rho_u}};
    else
        j["cond3"] = "not evaluable";
    j["max_feasible_a"] = r.max_feasible_a;
    return j;
}

std::optional<DecayFit> try_fit(const RunRecord& record, bool use_kl, int64_t total_cycles) {
    std::vector<std::pair<int64_t, double>> series;
    for (const auto& row : record.series) {
        const double v = use_kl ? row.kl : row.consensus_error_sq;
        if (!std::isfinite(v)) continue;
        series.emplace_back(row.cycle - 1, v);  // 0-based tick
    }
    try {
        return fit_decay_rate(series, total_cycles / 10);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

json fit_json(const std::optional<DecayFit>& fit) {
    if (!fit) return nullptr;
    return json{{"exponent", fit->exponent},
                {"amplitude", fit->amplitude},
                {"r_squared", fit->r_squared}};
}

double final_metric(const RunRecord& record) {
    if (record.series.empty()) return std::numeric_limits<double>::quiet_NaN();
    const CycleMetrics& last = record.series.back();
    if (!last.accuracy.empty()) {
        double acc = 0.0;
        for (double a : last.accuracy) acc += a;
        return acc / static_cast<double>(last.accuracy.size());
    }
    return last.kl;
}

}  // namespace

PreparedExperiment prepare_experiment(const RunConfig& config) {
    PreparedExperiment prep{
        build_graph(config.graph.kind, config.graph.n, config.graph.edge_file),
        {}, {}, {}, std::nullopt, {}, {}, 0, 0, 0.0};
    prep.dist = activation_probabilities(prep.graph);
    const int n = prep.graph.size();

    switch (config.model_kind) {
        case ModelKind::gaussian1d: {
            RngStream data_rng(derive_seed(config.master_seed, StreamTag::data));
            prep.toy_theta_truth = config.toy.sigma_theta * data_rng.normal();
            std::vector<double> data(config.toy.n_data);
            for (auto& x : data) x = prep.toy_theta_truth + config.toy.sigma_x * data_rng.normal();
            prep.model = ModelSpec::gaussian1d(n, config.toy.sigma_theta, config.toy.sigma_x);
            prep.shards = split_toy_data(data, n);
            prep.analytic_posterior =
                analytic_posterior_gaussian1d(config.toy.sigma_theta, config.toy.sigma_x, data);
            break;
        }
        case ModelKind::logistic: {
            IngestResult ing = ingest_gamma_telescope(config.data.path, n,
                                                      config.data.test_fraction,
                                                      config.master_seed);
            prep.model = ModelSpec::logistic(n, ing.d_features, config.prior);
            prep.shards = std::move(ing.shards);
            prep.test_inputs = std::move(ing.test_inputs);
            prep.test_labels = std::move(ing.test_labels);
            prep.dropped_remainder = ing.dropped_remainder;
            break;
        }
        case ModelKind::softmax: {
            IngestResult ing = ingest_mhealth(config.data.dir, n, config.data.subsample_per_agent,
                                              config.master_seed);
            prep.model = ModelSpec::softmax(n, ing.d_features, ing.n_classes, config.prior);
            prep.shards = std::move(ing.shards);
            prep.test_inputs = std::move(ing.test_inputs);
            prep.test_labels = std::move(ing.test_labels);
            prep.dropped_unlabeled = ing.dropped_unlabeled;
            break;
        }
    }
    return prep;
}

TrialContext make_trial_context(const RunConfig& config, const PreparedExperiment& prep) {
    TrialContext ctx;
    ctx.graph = &prep.graph;
    ctx.dist = prep.dist;
    ctx.model = prep.model;
    ctx.shards = prep.shards;
    ctx.hp = config.hyper;
    ctx.cycles = config.cycles;
    ctx.chains = config.chains;
    ctx.cadence = config.metric_cadence;
    ctx.analytic_posterior = prep.analytic_posterior;
    if (prep.test_inputs.rows() > 0) {
        ctx.test_inputs = &prep.test_inputs;
        ctx.test_labels = &prep.test_labels;
    }
    ctx.master_seed = config.master_seed;
    return ctx;
}

ConditionReport evaluate_conditions(const RunConfig& config, const PreparedExperiment& prep) {
    RngStream probe_rng(derive_seed(config.master_seed, StreamTag::probe));
    const double lipschitz = estimate_lipschitz(prep.model, prep.shards, config.lipschitz.probes,
                                                config.lipschitz.radius, probe_rng);
    const SpectralConstants sc = spectral_constants(prep.graph, config.hyper.beta);
    HyperParams hp = config.hyper;
    if (!config.t_sweep.empty()) {
        hp.t_mode = TMode::fixed;
        hp.t_fixed = *std::max_element(config.t_sweep.begin(), config.t_sweep.end());
    }
    return check_conditions(hp, sc, lipschitz, prep.graph.size(), config.rho_u);
}

namespace {

ArmResult run_arm(const RunConfig& arm_config, const PreparedExperiment& prep,
                  const std::string& label) {
    ArmResult arm;
    arm.label = label;
    arm.conditions = evaluate_conditions(arm_config, prep);

    TrialContext ctx = make_trial_context(arm_config, prep);
    arm.records.resize(arm_config.trials);

    const unsigned hw = std::thread::hardware_concurrency();
    const int budget = arm_config.workers > 0 ? arm_config.workers
                                              : static_cast<int>(hw ? hw : 1);
    const int pool = std::max(1, std::min(budget, arm_config.trials));
    // leftover workers go to chain-level parallelism inside each trial
    ctx.workers = std::max(1, budget / pool);
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::string first_error;
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (int t = 0; t < pool; ++t) {
        threads.emplace_back([&] {
            for (int idx = next.fetch_add(1); idx < arm_config.trials;
                 idx = next.fetch_add(1)) {
                try {
                    arm.records[idx] = run_trial(ctx, idx);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (first_error.empty()) first_error = e.what();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (!first_error.empty()) throw std::runtime_error("trial failure: " + first_error);

    double sum = 0.0, sum_sq = 0.0;
    int finished = 0;
    for (const auto& record : arm.records) {
        if (record.stats.diverged) {
            arm.any_diverged = true;
            continue;
        }
        const double metric = final_metric(record);
        if (!std::isfinite(metric)) continue;
        sum += metric;
        sum_sq += metric * metric;
        ++finished;
    }
    if (finished > 0) {
        arm.final_metric_mean = sum / finished;
        arm.final_metric_sd =
            finished > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / finished) /
                                                       (finished - 1)))
                         : 0.0;
    }
    return arm;
}

void write_arm_outputs(const RunConfig& arm_config, const ArmResult& arm,
                       const PreparedExperiment& prep, const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& record : arm.records)
        write_trial_csv(record, dir + "/trial_" + std::to_string(record.trial_index) + ".csv");

    json meta;
    meta["config"] = json::parse(config_to_json(arm_config));
    meta["seeds"] = {{"master", arm_config.master_seed}};
    json trial_seeds = json::array();
    for (const auto& record : arm.records) trial_seeds.push_back(record.trial_seed);
    meta["seeds"]["trials"] = trial_seeds;
    meta["conditions"] = condition_report_json(arm.conditions);
    if (prep.analytic_posterior) {
        meta["analytic_posterior"] = {{"mu_p", prep.analytic_posterior->first},
                                      {"sigma_p_sq", prep.analytic_posterior->second},
                                      {"theta_truth", prep.toy_theta_truth}};
        meta["kl_aggregation"] = "per-agent across chains, then averaged over agents";
    }
    meta["ingest"] = {{"dropped_remainder", prep.dropped_remainder},
                      {"dropped_unlabeled", prep.dropped_unlabeled},
                      {"test_rows", prep.test_inputs.rows()}};
    json rates = json::array();
    json divergences = json::array();
    for (const auto& record : arm.records) {
        rates.push_back({{"trial", record.trial_index},
                         {"consensus", fit_json(try_fit(record, false, arm_config.cycles))},
                         {"kl", fit_json(try_fit(record, true, arm_config.cycles))}});
        if (record.stats.diverged)
            divergences.push_back({{"trial", record.trial_index},
                                   {"cycle", record.stats.diverged_cycle},
                                   {"chain", record.stats.diverged_chain}});
    }
    meta["rates"] = rates;
    meta["divergences"] = divergences;
    meta["summary"] = {{"final_metric_mean", arm.final_metric_mean},
                       {"final_metric_sd", arm.final_metric_sd}};
    std::ofstream out(dir + "/run.json");
    out << meta.dump(2) << '\n';
}

}  // namespace

int run_experiment(const RunConfig& config) {
    const PreparedExperiment prep = prepare_experiment(config);

    std::vector<RunConfig> arm_configs;
    std::vector<std::string> labels;
    if (config.t_sweep.empty()) {
        arm_configs.push_back(config);
        labels.push_back(config.hyper.t_mode == TMode::dynamic
                             ? "T_dynamic"
                             : "T" + std::to_string(config.hyper.t_fixed));
    } else {
        for (int t : config.t_sweep) {
            RunConfig arm = config;
            arm.t_sweep.clear();
            arm.hyper.t_mode = TMode::fixed;
            arm.hyper.t_fixed = t;
            arm_configs.push_back(std::move(arm));
            labels.push_back("T" + std::to_string(t));
        }
    }

    const bool classification = prep.test_inputs.rows() > 0;
    int exit_code = 0;
    for (size_t a = 0; a < arm_configs.size(); ++a) {
        const ArmResult arm = run_arm(arm_configs[a], prep, labels[a]);
        const std::string dir = config.out_dir + "/" + labels[a];
        write_arm_outputs(arm_configs[a], arm, prep, dir);
        std::printf("[gula] %s %s: final %s %.6g +- %.6g over %d trial(s)%s\n",
                    experiment_name(config.experiment), labels[a].c_str(),
                    classification ? "accuracy" : "KL", arm.final_metric_mean,
                    arm.final_metric_sd, config.trials,
                    arm.any_diverged ? "  [DIVERGED TRIALS]" : "");
        if (arm.any_diverged) exit_code = 1;
    }
    return exit_code;
}

ConditionReport check_conditions_verb(const RunConfig& config, bool print) {
    const PreparedExperiment prep = prepare_experiment(config);
    const ConditionReport report = evaluate_conditions(config, prep);
    if (print) std::printf("%s\n", condition_report_json(report).dump(2).c_str());
    return report;
}

int fit_rates_dir(const std::string& results_dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(results_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trial_", 0) == 0 && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::fprintf(stderr, "no trial_*.csv files under %s\n", results_dir.c_str());
        return 1;
    }

    json out = json::array();
    for (const auto& file : files) {
        const TrialCsv csv = read_trial_csv(file.string());
        json entry;
        entry["file"] = file.filename().string();
        const int64_t max_cycle =
            csv.rows.empty() ? 0 : static_cast<int64_t>(csv.rows.back()[0]);
        for (const std::string column : {"consensus_error_sq", "kl"}) {
            if (std::find(csv.columns.begin(), csv.columns.end(), column) == csv.columns.end())
                continue;
            auto series = csv.series(column);
            for (auto& [k, v] : series) k -= 1;  // cycle column is 1-based
            try {
                const DecayFit fit = fit_decay_rate(series, max_cycle / 10);
                entry[column] = fit_json(fit);
                std::printf("%s %s: exponent %.4f amplitude %.4g r^2 %.4f\n",
                            file.filename().string().c_str(), column.c_str(), fit.exponent,
                            fit.amplitude, fit.r_squared);
            } catch (const std::exception& e) {
                entry[column] = {{"error", e.what()}};
                std::printf("%s %s: fit unavailable (%s)\n", file.filename().string().c_str(),
                            column.c_str(), e.what());
            }
        }
        out.push_back(std::move(entry));
    }
    std::ofstream rates(results_dir + "/rates.json");
    rates << out.dump(2) << '\n';
    return 0;
}

}  // namespace gula
