#include "gula/ingest.hpp"

#include "gula/errors.hpp"
#include "gula/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gula {

namespace {

// Seeded Fisher-Yates; std::shuffle is implementation-defined, this is not.
template <typename T>
void shuffle_rows(std::vector<T>& rows, RngStream& rng) {
    for (size_t k = rows.size(); k > 1; --k) {
        const size_t pick = rng.uniform_below(k);
        std::swap(rows[k - 1], rows[pick]);
    }
}

struct RawRow {
    std::vector<double> features;
    int label = 0;
};

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

Eigen::MatrixXd pack_inputs(const std::vector<RawRow>& rows, size_t begin, size_t end) {
    const Eigen::Index d = static_cast<Eigen::Index>(rows[begin].features.size());
    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(end - begin), d);
    for (size_t r = begin; r < end; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
            inputs(static_cast<Eigen::Index>(r - begin), c) = rows[r].features[c];
    return inputs;
}

std::vector<int> pack_labels(const std::vector<RawRow>& rows, size_t begin, size_t end) {
    std::vector<int> labels;
    labels.reserve(end - begin);
    for (size_t r = begin; r < end; ++r) labels.push_back(rows[r].label);
    return labels;
}

}  // namespace

IngestResult ingest_gamma_telescope(const std::string& csv_path, int n_shards,
                                    double test_fraction, uint64_t seed) {
    std::ifstream in(csv_path);
    if (!in) throw ParseError("cannot open dataset: " + csv_path);

    std::vector<RawRow> rows;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        std::stringstream cells(line);
        std::string cell;
        RawRow row;
        while (std::getline(cells, cell, ',')) {
            if (cells.peek() == EOF && (cell == "g" || cell == "h")) {
                row.label = cell == "g" ? 1 : 0;
                break;
            }
            try {
                row.features.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw MalformedRow("not a number: '" + cell + "'", line_no);
            }
        }
        if (row.features.size() != 10)
            throw MalformedRow("expected 10 features and a g/h class", line_no);
        row.features.push_back(1.0);  // bias feature
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty dataset: " + csv_path);

    RngStream rng(derive_seed(seed, StreamTag::ingest));
    shuffle_rows(rows, rng);

    const size_t total = rows.size();
    const size_t n_test = static_cast<size_t>(std::llround(test_fraction * total));
    const size_t n_train = total - n_test;
    const size_t shard_size = n_train / static_cast<size_t>(n_shards);
    if (shard_size == 0) throw ParseError("dataset too small to shard");

    IngestResult result;
    result.d_features = 11;
    result.n_classes = 2;
    result.test_inputs = pack_inputs(rows, 0, n_test);
    result.test_labels = pack_labels(rows, 0, n_test);
    for (int s = 0; s < n_shards; ++s) {
        const size_t begin = n_test + s * shard_size;
        DataShard shard;
        shard.owner = s;
        shard.inputs = pack_inputs(rows, begin, begin + shard_size);
        shard.labels = pack_labels(rows, begin, begin + shard_size);
        result.shards.push_back(std::move(shard));
    }
    result.dropped_remainder = static_cast<int>(n_train - shard_size * n_shards);
    return result;
}

IngestResult ingest_mhealth(const std::string& dir, int n_shards, int subsample_per_agent,
                            uint64_t seed) {
    const auto load_subject = [&](int subject) {
        const std::string path = dir + "/mHealth_subject" + std::to_string(subject) + ".log";
        std::ifstream in(path);
        if (!in) throw MissingSubjectFile("missing subject file: " + path);
        std::vector<RawRow> rows;
        std::string line;
        int64_t line_no = 0;
        int dropped = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::stringstream cells(line);
            RawRow row;
            double value;
            while (cells >> value) row.features.push_back(value);
            if (row.features.size() != 24)
                throw MalformedRow("expected 23 sensor columns plus a label", line_no);
            const int raw_label = static_cast<int>(std::llround(row.features.back()));
            row.features.back() = 1.0;  // label column becomes the bias feature
            if (raw_label == 0) {
                ++dropped;
                continue;
            }
            if (raw_label < 1 || raw_label > 12)
                throw MalformedRow("label " + std::to_string(raw_label) + " outside 1..12",
                                   line_no);
            row.label = raw_label - 1;
            rows.push_back(std::move(row));
        }
        return std::pair<std::vector<RawRow>, int>(std::move(rows), dropped);
    };

    IngestResult result;
    result.d_features = 24;
    result.n_classes = 12;
    for (int s = 0; s < n_shards; ++s) {
        auto [rows, dropped] = load_subject(s + 1);
        result.dropped_unlabeled += dropped;
        if (rows.empty()) throw ParseError("subject " + std::to_string(s + 1) + " has no labeled rows");
        if (subsample_per_agent > 0 && static_cast<size_t>(subsample_per_agent) < rows.size()) {
            RngStream rng(derive_seed(seed, StreamTag::ingest, static_cast<uint64_t>(s)));
            shuffle_rows(rows, rng);
            rows.resize(static_cast<size_t>(subsample_per_agent));
        }
        DataShard shard;
        shard.owner = s;
        shard.inputs = pack_inputs(rows, 0, rows.size());
        shard.labels = pack_labels(rows, 0, rows.size());
        result.shards.push_back(std::move(shard));
    }
    auto [test_rows, dropped] = load_subject(10);
    result.dropped_unlabeled += dropped;
    if (test_rows.empty()) throw ParseError("test subject has no labeled rows");
    result.test_inputs = pack_inputs(test_rows, 0, test_rows.size());
    result.test_labels = pack_labels(test_rows, 0, test_rows.size());
    return result;
}

void write_ingest_output(const IngestResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const auto write_csv = [](const std::string& path, const Eigen::MatrixXd& inputs,
                              const std::vector<int>& labels) {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
            for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.17g", inputs(r, c));
                out << buf << ',';
            }
            out << labels[static_cast<size_t>(r)] << '\n';
        }
    };

    for (const auto& shard : result.shards)
        write_csv(out_dir + "/shard_" + std::to_string(shard.owner) + ".csv", shard.inputs,
                  shard.labels);
    write_csv(out_dir + "/test.csv", result.test_inputs, result.test_labels);

    nlohmann::ordered_json manifest;
    manifest["shards"] = result.shards.size();
    nlohmann::ordered_json sizes = nlohmann::ordered_json::array();
    for (const auto& shard : result.shards) sizes.push_back(shard.count());
    manifest["shard_sizes"] = sizes;
    manifest["test_rows"] = result.test_inputs.rows();
    manifest["d_features"] = result.d_features;
    manifest["n_classes"] = result.n_classes;
    manifest["dropped_remainder"] = result.dropped_remainder;
    manifest["dropped_unlabeled"] = result.dropped_unlabeled;
    std::ofstream out(out_dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
}

}  // namespace gula
