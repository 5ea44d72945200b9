#include "gula/config.hpp"

#include "gula/errors.hpp"
#include "gula/experiment.hpp"
#include "gula/ingest.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace gula;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// 10 comma-separated features and a g/h class per row
void write_gamma_csv(const fs::path& path, int rows, uint64_t seed) {
    RngStream rng(seed);
    std::ofstream out(path);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < 10; ++c) out << rng.normal() << ',';
        out << (rng.uniform() < 0.5 ? 'g' : 'h') << '\n';
    }
}

void write_mhealth_subject(const fs::path& dir, int subject, int rows, uint64_t seed) {
    RngStream rng(seed);
    std::ofstream out(dir / ("mHealth_subject" + std::to_string(subject) + ".log"));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < 23; ++c) out << rng.normal() << '\t';
        out << rng.uniform_below(13) << '\n';  // labels 0..12, 0 means unlabeled
    }
}

}  // namespace

TEST_CASE("presets carry the published settings") {
    const RunConfig toy = preset_config(ExperimentKind::gaussian_toy);
    CHECK(toy.graph.kind == GraphKind::ring);
    CHECK(toy.graph.n == 5);
    CHECK(toy.hyper.a == 1e-4);
    CHECK(toy.hyper.delta_alpha == 0.01);
    CHECK(toy.hyper.minibatch_fraction == 0.1);
    CHECK(toy.chains == 5000);
    CHECK(toy.cycles == 10000);
    CHECK(toy.t_sweep == std::vector<int>{1, 3, 5});

    const RunConfig gamma = preset_config(ExperimentKind::gamma_telescope);
    CHECK(gamma.graph.n == 6);
    CHECK(gamma.hyper.a == 1e-5);
    CHECK(gamma.hyper.delta_alpha == 0.5);
    CHECK(gamma.cycles == 150);
    CHECK(gamma.trials == 10);
    CHECK(gamma.prior.scale == 20.0);

    const RunConfig mh = preset_config(ExperimentKind::mhealth);
    CHECK(mh.hyper.beta == 0.8);
    CHECK(mh.data.subsample_per_agent == 100);
}

TEST_CASE("config loading: overrides, validation, unknown fields") {
    const fs::path dir = temp_dir("gula_config_test");

    write_file(dir / "ok.json", R"({
      "experiment": "gaussian_toy",
      "cycles": 123,
      "chains": 7,
      "t_sweep": [],
      "hyper": {"T": 2, "delta_alpha": 0.25}
    })");
    const RunConfig c = load_config((dir / "ok.json").string());
    CHECK(c.cycles == 123);
    CHECK(c.chains == 7);
    CHECK(c.t_sweep.empty());
    CHECK(c.hyper.t_fixed == 2);
    CHECK(c.hyper.delta_alpha == 0.25);
    CHECK(c.hyper.a == 1e-4);  // preset default survives

    write_file(dir / "missing.json", R"({"cycles": 5})");
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ValidationError);

    write_file(dir / "unknown.json", R"({"experiment": "gaussian_toy", "cyclez": 5})");
    CHECK_THROWS_AS(load_config((dir / "unknown.json").string()), ValidationError);

    write_file(dir / "badmode.json",
               R"({"experiment": "gaussian_toy", "hyper": {"t_mode": "sometimes"}})");
    try {
        load_config((dir / "badmode.json").string());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field == "hyper.t_mode");
    }

    write_file(dir / "badbeta.json",
               R"({"experiment": "gaussian_toy", "hyper": {"beta": 1.5}})");
    CHECK_THROWS_AS(load_config((dir / "badbeta.json").string()), ValidationError);

    write_file(dir / "garbage.json", "not json at all {");
    CHECK_THROWS_AS(load_config((dir / "garbage.json").string()), ParseError);

    // resolved config (with defaults) round-trips through its own JSON dump
    write_file(dir / "resolved.json", config_to_json(c));
    const RunConfig back = load_config((dir / "resolved.json").string());
    CHECK(back.cycles == c.cycles);
    CHECK(back.hyper.minibatch_fraction == c.hyper.minibatch_fraction);
    CHECK(back.master_seed == c.master_seed);
    fs::remove_all(dir);
}

TEST_CASE("gamma telescope ingestion: partition, sizing, determinism") {
    const fs::path dir = temp_dir("gula_gamma_test");
    write_gamma_csv(dir / "g.csv", 40, 9);

    const IngestResult a = ingest_gamma_telescope((dir / "g.csv").string(), 6, 0.2, 44);
    CHECK(a.d_features == 11);
    CHECK(a.test_inputs.rows() == 8);   // round(0.2 * 40)
    REQUIRE(a.shards.size() == 6);
    for (const auto& s : a.shards) CHECK(s.count() == 5);  // (40-8)/6
    CHECK(a.dropped_remainder == 2);

    // bias feature appended everywhere
    for (const auto& s : a.shards)
        for (Eigen::Index r = 0; r < s.count(); ++r) CHECK(s.inputs(r, 10) == 1.0);

    // partition: no training row reappears in the test set or another shard
    std::set<double> keys;  // first feature is a fresh normal draw per row: unique
    int total = 0;
    auto add_rows = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            keys.insert(m(r, 0));
            ++total;
        }
    };
    add_rows(a.test_inputs);
    for (const auto& s : a.shards) add_rows(s.inputs);
    CHECK(static_cast<int>(keys.size()) == total);

    const IngestResult b = ingest_gamma_telescope((dir / "g.csv").string(), 6, 0.2, 44);
    CHECK((a.shards[2].inputs.array() == b.shards[2].inputs.array()).all());
    CHECK(a.test_labels == b.test_labels);

    write_file(dir / "bad.csv", "1,2,3\n");
    CHECK_THROWS_AS(ingest_gamma_telescope((dir / "bad.csv").string(), 6, 0.2, 1), MalformedRow);
    fs::remove_all(dir);
}

TEST_CASE("gamma telescope labels: g maps to 1") {
    const fs::path dir = temp_dir("gula_gamma_labels");
    std::ofstream out(dir / "g.csv");
    out << "1,2,3,4,5,6,7,8,9,10,g\n";
    out << "1,2,3,4,5,6,7,8,9,10,h\n";
    out << "1,2,3,4,5,6,7,8,9,10,g\n";
    out << "1,2,3,4,5,6,7,8,9,10,g\n";
    out.close();
    // 4 rows: 1 test row, 3 shards of one row each, nothing dropped
    const IngestResult r = ingest_gamma_telescope((dir / "g.csv").string(), 3, 0.25, 3);
    int ones = 0, zeros = 0;
    for (int label : r.test_labels) (label == 1 ? ones : zeros)++;
    for (const auto& s : r.shards)
        for (int label : s.labels) (label == 1 ? ones : zeros)++;
    CHECK(ones == 3);
    CHECK(zeros == 1);
    fs::remove_all(dir);
}

TEST_CASE("mhealth ingestion: labels, subsampling, missing subjects") {
    const fs::path dir = temp_dir("gula_mhealth_test");
    for (int subject : {1, 2, 3, 4, 5, 6, 10})
        write_mhealth_subject(dir, subject, 60, 100 + subject);

    const IngestResult r = ingest_mhealth(dir.string(), 6, 5, 77);
    CHECK(r.d_features == 24);
    CHECK(r.n_classes == 12);
    REQUIRE(r.shards.size() == 6);
    for (const auto& s : r.shards) {
        CHECK(s.count() == 5);  // subsampled
        for (int label : s.labels) {
            CHECK(label >= 0);
            CHECK(label <= 11);
        }
        for (Eigen::Index row = 0; row < s.count(); ++row) CHECK(s.inputs(row, 23) == 1.0);
    }
    CHECK(r.dropped_unlabeled > 0);  // seeded label-0 rows existed
    for (int label : r.test_labels) {
        CHECK(label >= 0);
        CHECK(label <= 11);
    }

    const IngestResult full = ingest_mhealth(dir.string(), 6, 0, 77);
    for (const auto& s : full.shards) CHECK(s.count() > 5);

    fs::remove(dir / "mHealth_subject3.log");
    CHECK_THROWS_AS(ingest_mhealth(dir.string(), 6, 0, 77), MissingSubjectFile);
    fs::remove_all(dir);
}

TEST_CASE("run_experiment: outputs, cadence, determinism, sweep arms") {
    const fs::path dir = temp_dir("gula_run_test");
    RunConfig config = preset_config(ExperimentKind::gaussian_toy);
    config.cycles = 60;
    config.chains = 5;
    config.trials = 2;
    config.metric_cadence = 3;
    config.t_sweep = {1, 2};
    config.workers = 2;
    config.master_seed = 4242;
    config.out_dir = (dir / "a").string();
    CHECK(run_experiment(config) == 0);

    for (const std::string arm : {"T1", "T2"}) {
        for (int trial : {0, 1}) {
            const fs::path csv = dir / "a" / arm / ("trial_" + std::to_string(trial) + ".csv");
            REQUIRE(fs::exists(csv));
            const TrialCsv parsed = read_trial_csv(csv.string());
            CHECK(parsed.rows.size() == 20);  // cycles / cadence
        }
        REQUIRE(fs::exists(dir / "a" / arm / "run.json"));
    }

    config.out_dir = (dir / "b").string();
    CHECK(run_experiment(config) == 0);
    for (const std::string arm : {"T1", "T2"})
        for (int trial : {0, 1}) {
            const std::string name = arm + "/trial_" + std::to_string(trial) + ".csv";
            CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
        }
    fs::remove_all(dir);
}

TEST_CASE("custom graphs load from edge list files through the config") {
    const fs::path dir = temp_dir("gula_custom_graph");
    write_file(dir / "edges.txt", "4\n0 1\n1 2\n2 3\n3 0\n");
    RunConfig config = preset_config(ExperimentKind::gaussian_toy);
    config.graph.kind = GraphKind::custom;
    config.graph.n = 4;
    config.graph.edge_file = (dir / "edges.txt").string();
    config.cycles = 10;
    config.chains = 2;
    config.t_sweep.clear();
    config.validate();

    const PreparedExperiment prep = prepare_experiment(config);
    CHECK(prep.graph.size() == 4);
    CHECK(prep.graph.degree(0) == 2);
    fs::remove_all(dir);
}

TEST_CASE("logistic pipeline learns a separable synthetic problem") {
    // gamma-telescope-shaped data with a planted linear rule: the full run
    // path (ingest -> shards -> gossip ULA -> per-agent accuracy) must beat
    // the base rate by a wide margin
    const fs::path dir = temp_dir("gula_synth_logistic");
    {
        RngStream rng(8);
        std::ofstream out(dir / "synth.csv");
        for (int r = 0; r < 1200; ++r) {
            double score = 0.0;
            std::vector<double> feats(10);
            for (int c = 0; c < 10; ++c) {
                feats[c] = rng.normal();
                score += (c < 3 ? 1.0 : 0.0) * feats[c];
            }
            for (double f : feats) out << f << ',';
            out << (score + 0.2 * rng.normal() > 0.0 ? 'g' : 'h') << '\n';
        }
    }

    RunConfig config = preset_config(ExperimentKind::gamma_telescope);
    config.data.path = (dir / "synth.csv").string();
    config.hyper.a = 1e-4;  // small synthetic set: larger steps converge in time
    config.cycles = 150;
    config.trials = 1;
    config.t_sweep.clear();
    config.hyper.t_fixed = 5;
    config.master_seed = 31337;

    const PreparedExperiment prep = prepare_experiment(config);
    REQUIRE(prep.test_inputs.rows() == 240);
    const RunRecord record = run_trial(make_trial_context(config, prep), 0);
    REQUIRE_FALSE(record.stats.diverged);
    REQUIRE(record.series.size() == 150);

    double final_acc = 0.0;
    for (double a : record.series.back().accuracy) final_acc += a;
    final_acc /= record.series.back().accuracy.size();
    CHECK(final_acc > 0.8);

    double first_acc = 0.0;
    for (double a : record.series.front().accuracy) first_acc += a;
    first_acc /= record.series.front().accuracy.size();
    CHECK(final_acc > first_acc);
    fs::remove_all(dir);
}

TEST_CASE("exit status is nonzero exactly when a trial diverges") {
    const fs::path dir = temp_dir("gula_exit_codes");
    RunConfig config = preset_config(ExperimentKind::gaussian_toy);
    config.cycles = 200;
    config.chains = 2;
    config.trials = 1;
    config.t_sweep.clear();
    config.out_dir = (dir / "ok").string();
    CHECK(run_experiment(config) == 0);

    config.hyper.a = 1e9;  // blows up within a few cycles
    config.out_dir = (dir / "boom").string();
    CHECK(run_experiment(config) == 1);
    fs::remove_all(dir);
}

TEST_CASE("condition verb runs on the toy preset") {
    RunConfig config = preset_config(ExperimentKind::gaussian_toy);
    config.lipschitz.probes = 200;
    const ConditionReport report = check_conditions_verb(config, /*print=*/false);
    CHECK(report.cond1);
    CHECK(report.cond2);
    CHECK_FALSE(report.cond3_evaluable);
    CHECK(report.lipschitz == doctest::Approx(0.6).epsilon(0.05));
}
