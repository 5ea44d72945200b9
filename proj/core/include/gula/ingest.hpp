// ingest.hpp — UCI dataset ingestion into per-agent shards plus a test set.
// Inputs are user-supplied files (never downloaded here); every row gets a
// trailing constant-1 bias feature.
#pragma once

#include "gula/models.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gula {

struct IngestResult {
    std::vector<DataShard> shards;
    Eigen::MatrixXd test_inputs;
    std::vector<int> test_labels;
    int d_features = 0;  // after bias augmentation
    int n_classes = 2;
    int dropped_remainder = 0;  // rows dropped to equalize shard sizes
    int dropped_unlabeled = 0;  // label-0 rows removed (mhealth)
};

// MAGIC gamma telescope CSV: 10 numeric features and a g/h class letter per
// row; g -> 1, h -> 0. Seeded uniform shuffle, test_fraction held out, the
// rest split into n_shards equal parts (remainder dropped and counted).
IngestResult ingest_gamma_telescope(const std::string& csv_path, int n_shards,
                                    double test_fraction, uint64_t seed);

// mHealth per-subject logs (mHealth_subject<k>.log): 23 sensor columns plus
// an activity label. Unlabeled rows (label 0) are removed everywhere; labels
// 1..12 map to 0..11. Subjects 1..n_shards become the shards, subject 10 the
// test set. subsample_per_agent > 0 keeps a seeded subset of each shard.
IngestResult ingest_mhealth(const std::string& dir, int n_shards, int subsample_per_agent,
                            uint64_t seed);

// Materializes shards and test set as CSV files (label last) plus a small
// manifest, for the `ingest` CLI verb.
void write_ingest_output(const IngestResult& result, const std::string& out_dir);

}  // namespace gula
