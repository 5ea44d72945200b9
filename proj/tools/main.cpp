// gula — gossip-based asynchronous Langevin sampling over graphs.
//
// Verbs:
//   run <config>              execute an experiment, write CSV + JSON outputs
//   check-conditions <config> numeric report of the convergence conditions
//   fit-rates <results-dir>   power-law decay fits for recorded metric series
//   ingest                    preprocess a UCI dataset into shard CSVs

#include "gula/config.hpp"
#include "gula/experiment.hpp"
#include "gula/ingest.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"gossip-based asynchronous Langevin sampling simulator"};
    app.require_subcommand(1);

    std::string config_path, results_dir, out_dir;
    int workers = -1;

    CLI::App* run = app.add_subcommand("run", "execute an experiment from a config file");
    run->add_option("config", config_path, "JSON config file")->required();
    run->add_option("--workers", workers, "trial worker threads (0 = hardware)");
    run->add_option("--out", out_dir, "output directory (overrides config)");

    CLI::App* check =
        app.add_subcommand("check-conditions", "evaluate the convergence conditions");
    check->add_option("config", config_path, "JSON config file")->required();

    CLI::App* fit = app.add_subcommand("fit-rates", "fit decay rates for recorded runs");
    fit->add_option("results-dir", results_dir, "directory holding trial_*.csv files")
        ->required();

    std::string dataset, data_path, ingest_out;
    int n_shards = 6, subsample = 0;
    double test_fraction = 0.2;
    uint64_t ingest_seed = 1;
    CLI::App* ingest = app.add_subcommand("ingest", "preprocess a UCI dataset into shards");
    ingest->add_option("--dataset", dataset, "gamma_telescope or mhealth")->required();
    ingest->add_option("--path", data_path, "dataset file (gamma) or directory (mhealth)")
        ->required();
    ingest->add_option("--out", ingest_out, "output directory")->required();
    ingest->add_option("--n-shards", n_shards, "number of agent shards");
    ingest->add_option("--test-fraction", test_fraction, "gamma telescope holdout fraction");
    ingest->add_option("--subsample", subsample, "mhealth rows kept per shard (0 = all)");
    ingest->add_option("--seed", ingest_seed, "shuffle seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            gula::RunConfig config = gula::load_config(config_path);
            if (workers >= 0) config.workers = workers;
            if (!out_dir.empty()) config.out_dir = out_dir;
            if (const char* env_out = std::getenv("GULA_OUT_DIR")) config.out_dir = env_out;
            return gula::run_experiment(config);
        }
        if (check->parsed()) {
            gula::check_conditions_verb(gula::load_config(config_path), /*print=*/true);
            return 0;
        }
        if (fit->parsed()) return gula::fit_rates_dir(results_dir);
        if (ingest->parsed()) {
            gula::IngestResult result;
            if (dataset == "gamma_telescope")
                result = gula::ingest_gamma_telescope(data_path, n_shards, test_fraction,
                                                      ingest_seed);
            else if (dataset == "mhealth")
                result = gula::ingest_mhealth(data_path, n_shards, subsample, ingest_seed);
            else {
                std::fprintf(stderr, "unknown dataset '%s'\n", dataset.c_str());
                return 2;
            }
            gula::write_ingest_output(result, ingest_out);
            std::printf("wrote %zu shards + test set to %s\n", result.shards.size(),
                        ingest_out.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
