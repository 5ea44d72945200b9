#include "gula/config.hpp"

#include "gula/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace gula {

using json = nlohmann::ordered_json;

namespace {

template <typename T>
void take(const json& obj, const std::string& scope, const char* key, T& into) {
    if (!obj.contains(key)) return;
    try {
        obj.at(key).get_to(into);
    } catch (const json::exception& e) {
        throw ValidationError(scope + key, e.what());
    }
}

void reject_unknown(const json& obj, const std::string& scope,
                    const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items())
        if (!known.count(key)) throw ValidationError(scope + key, "unknown field");
}

ExperimentKind parse_experiment(const std::string& name) {
    if (name == "gaussian_toy") return ExperimentKind::gaussian_toy;
    if (name == "gamma_telescope") return ExperimentKind::gamma_telescope;
    if (name == "mhealth") return ExperimentKind::mhealth;
    if (name == "custom") return ExperimentKind::custom;
    throw ValidationError("experiment", "unknown experiment '" + name + "'");
}

GraphKind parse_graph_kind(const std::string& name) {
    if (name == "ring") return GraphKind::ring;
    if (name == "complete") return GraphKind::complete;
    if (name == "custom") return GraphKind::custom;
    throw ValidationError("graph.kind", "unknown graph kind '" + name + "'");
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "gaussian1d") return ModelKind::gaussian1d;
    if (name == "logistic") return ModelKind::logistic;
    if (name == "softmax") return ModelKind::softmax;
    throw ValidationError("model_kind", "unknown model kind '" + name + "'");
}

}  // namespace

const char* experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::gaussian_toy: return "gaussian_toy";
        case ExperimentKind::gamma_telescope: return "gamma_telescope";
        case ExperimentKind::mhealth: return "mhealth";
        case ExperimentKind::custom: return "custom";
    }
    return "?";
}

RunConfig preset_config(ExperimentKind kind) {
    RunConfig c;
    c.experiment = kind;
    switch (kind) {
        case ExperimentKind::gaussian_toy:
            c.model_kind = ModelKind::gaussian1d;
            c.graph = {GraphKind::ring, 5, {}};
            c.hyper.a = 1e-4;
            c.hyper.delta_alpha = 0.01;
            c.hyper.beta = 0.5;
            c.hyper.t_mode = TMode::fixed;
            c.hyper.t_fixed = 1;
            c.hyper.minibatch_fraction = 0.1;
            c.cycles = 10000;
            c.trials = 1;
            c.chains = 5000;
            c.t_sweep = {1, 3, 5};
            c.toy = {1.0, 5.0, 50};
            c.out_dir = "out/gaussian_toy";
            break;
        case ExperimentKind::gamma_telescope:
            c.model_kind = ModelKind::logistic;
            c.graph = {GraphKind::ring, 6, {}};
            c.hyper.a = 1e-5;
            c.hyper.delta_alpha = 0.5;
            c.hyper.beta = 0.5;
            c.hyper.t_mode = TMode::fixed;
            c.hyper.t_fixed = 5;
            c.hyper.minibatch_fraction = 0.1;
            c.cycles = 150;
            c.trials = 10;
            c.chains = 1;
            c.data.path = "data/magic04.data";
            c.data.test_fraction = 0.2;
            c.prior = {PriorKind::gaussian, 0.0, 20.0};
            c.out_dir = "out/gamma_telescope";
            break;
        case ExperimentKind::mhealth:
            c.model_kind = ModelKind::softmax;
            c.graph = {GraphKind::ring, 6, {}};
            c.hyper.a = 1e-5;
            c.hyper.delta_alpha = 0.5;
            c.hyper.beta = 0.8;
            c.hyper.t_mode = TMode::fixed;
            c.hyper.t_fixed = 5;
            c.hyper.minibatch_fraction = 0.1;  // 10 of the 100 per-agent points
            c.cycles = 150;
            c.trials = 10;
            c.chains = 1;
            c.metric_cadence = 5;
            c.data.dir = "data/mhealth";
            c.data.subsample_per_agent = 100;
            c.prior = {PriorKind::gaussian, 0.0, 20.0};
            c.out_dir = "out/mhealth";
            break;
        case ExperimentKind::custom:
            break;
    }
    return c;
}

void RunConfig::validate() const {
    if (cycles < 1) throw ValidationError("cycles", "must be >= 1");
    if (trials < 1) throw ValidationError("trials", "must be >= 1");
    if (chains < 1) throw ValidationError("chains", "must be >= 1");
    if (metric_cadence < 1) throw ValidationError("metric_cadence", "must be >= 1");
    if (graph.n < 2) throw ValidationError("graph.n", "need at least 2 agents");
    if (graph.kind == GraphKind::custom && graph.edge_file.empty())
        throw ValidationError("graph.edge_file", "required for custom graphs");
    hyper.validate();
    for (int t : t_sweep)
        if (t < 1) throw ValidationError("t_sweep", "entries must be >= 1");
    if (experiment == ExperimentKind::gamma_telescope ||
        (experiment == ExperimentKind::custom && model_kind == ModelKind::logistic)) {
        if (data.path.empty()) throw ValidationError("data.path", "required for this experiment");
        if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0))
            throw ValidationError("data.test_fraction", "must lie in (0, 1)");
    }
    if (experiment == ExperimentKind::mhealth ||
        (experiment == ExperimentKind::custom && model_kind == ModelKind::softmax)) {
        if (data.dir.empty()) throw ValidationError("data.dir", "required for this experiment");
        if (data.subsample_per_agent < 0)
            throw ValidationError("data.subsample_per_agent", "must be >= 0");
    }
    if (experiment == ExperimentKind::gaussian_toy || model_kind == ModelKind::gaussian1d) {
        if (toy.n_data < 1) throw ValidationError("toy.n_data", "must be >= 1");
        if (!(toy.sigma_theta > 0.0)) throw ValidationError("toy.sigma_theta", "must be > 0");
        if (!(toy.sigma_x > 0.0)) throw ValidationError("toy.sigma_x", "must be > 0");
    }
    if (!(prior.scale > 0.0)) throw ValidationError("prior.std", "must be > 0");
    if (lipschitz.probes < 100) throw ValidationError("lipschitz.probes", "must be >= 100");
    if (!(lipschitz.radius > 0.0)) throw ValidationError("lipschitz.radius", "must be > 0");
    if (workers < 0) throw ValidationError("workers", "must be >= 0");
    if (rho_u && !(*rho_u > 0.0)) throw ValidationError("rho_u", "must be > 0 when given");
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config parse failure: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("config root must be a JSON object");
    if (!doc.contains("experiment"))
        throw ValidationError("experiment", "missing required field");

    reject_unknown(doc, "",
                   {"experiment", "model_kind", "graph", "hyper", "cycles", "trials", "chains",
                    "metric_cadence", "master_seed", "t_sweep", "toy", "data", "prior", "rho_u",
                    "lipschitz", "out_dir", "workers"});

    RunConfig c = preset_config(parse_experiment(doc.at("experiment").get<std::string>()));

    if (doc.contains("model_kind"))
        c.model_kind = parse_model_kind(doc.at("model_kind").get<std::string>());

    if (doc.contains("graph")) {
        const json& g = doc.at("graph");
        reject_unknown(g, "graph.", {"kind", "n", "edge_file"});
        if (g.contains("kind")) c.graph.kind = parse_graph_kind(g.at("kind").get<std::string>());
        take(g, "graph.", "n", c.graph.n);
        take(g, "graph.", "edge_file", c.graph.edge_file);
    }
    if (doc.contains("hyper")) {
        const json& h = doc.at("hyper");
        reject_unknown(h, "hyper.",
                       {"a", "delta_alpha", "beta", "t_mode", "T", "T_min", "T_max", "f",
                        "overlap_mode"});
        take(h, "hyper.", "a", c.hyper.a);
        take(h, "hyper.", "delta_alpha", c.hyper.delta_alpha);
        take(h, "hyper.", "beta", c.hyper.beta);
        if (h.contains("t_mode")) {
            const std::string mode = h.at("t_mode").get<std::string>();
            if (mode == "static")
                c.hyper.t_mode = TMode::fixed;
            else if (mode == "dynamic")
                c.hyper.t_mode = TMode::dynamic;
            else
                throw ValidationError("hyper.t_mode", "expected 'static' or 'dynamic'");
        }
        take(h, "hyper.", "T", c.hyper.t_fixed);
        take(h, "hyper.", "T_min", c.hyper.t_min);
        take(h, "hyper.", "T_max", c.hyper.t_max);
        take(h, "hyper.", "f", c.hyper.minibatch_fraction);
        if (h.contains("overlap_mode")) {
            const std::string mode = h.at("overlap_mode").get<std::string>();
            if (mode == "sequential")
                c.hyper.overlap = OverlapMode::sequential;
            else if (mode == "overlapping")
                c.hyper.overlap = OverlapMode::overlapping;
            else
                throw ValidationError("hyper.overlap_mode",
                                      "expected 'sequential' or 'overlapping'");
        }
    }
    take(doc, "", "cycles", c.cycles);
    take(doc, "", "trials", c.trials);
    take(doc, "", "chains", c.chains);
    take(doc, "", "metric_cadence", c.metric_cadence);
    take(doc, "", "master_seed", c.master_seed);
    if (doc.contains("t_sweep")) {
        c.t_sweep.clear();
        take(doc, "", "t_sweep", c.t_sweep);
    }
    if (doc.contains("toy")) {
        const json& t = doc.at("toy");
        reject_unknown(t, "toy.", {"sigma_theta", "sigma_x", "n_data"});
        take(t, "toy.", "sigma_theta", c.toy.sigma_theta);
        take(t, "toy.", "sigma_x", c.toy.sigma_x);
        take(t, "toy.", "n_data", c.toy.n_data);
    }
    if (doc.contains("data")) {
        const json& d = doc.at("data");
        reject_unknown(d, "data.", {"path", "dir", "test_fraction", "subsample_per_agent"});
        take(d, "data.", "path", c.data.path);
        take(d, "data.", "dir", c.data.dir);
        take(d, "data.", "test_fraction", c.data.test_fraction);
        take(d, "data.", "subsample_per_agent", c.data.subsample_per_agent);
    }
    if (doc.contains("prior")) {
        const json& p = doc.at("prior");
        reject_unknown(p, "prior.", {"kind", "mean", "std", "loc", "scale"});
        if (p.contains("kind")) {
            const std::string kind = p.at("kind").get<std::string>();
            if (kind == "gaussian")
                c.prior.kind = PriorKind::gaussian;
            else if (kind == "laplace")
                c.prior.kind = PriorKind::laplace;
            else
                throw ValidationError("prior.kind", "expected 'gaussian' or 'laplace'");
        }
        take(p, "prior.", "mean", c.prior.location);
        take(p, "prior.", "loc", c.prior.location);
        take(p, "prior.", "std", c.prior.scale);
        take(p, "prior.", "scale", c.prior.scale);
    }
    if (doc.contains("rho_u") && !doc.at("rho_u").is_null()) {
        double value = 0.0;
        take(doc, "", "rho_u", value);
        c.rho_u = value;
    }
    if (doc.contains("lipschitz")) {
        const json& l = doc.at("lipschitz");
        reject_unknown(l, "lipschitz.", {"probes", "radius"});
        take(l, "lipschitz.", "probes", c.lipschitz.probes);
        take(l, "lipschitz.", "radius", c.lipschitz.radius);
    }
    take(doc, "", "out_dir", c.out_dir);
    take(doc, "", "workers", c.workers);

    c.validate();
    return c;
}

std::string config_to_json(const RunConfig& c) {
    json doc;
    doc["experiment"] = experiment_name(c.experiment);
    switch (c.model_kind) {
        case ModelKind::gaussian1d: doc["model_kind"] = "gaussian1d"; break;
        case ModelKind::logistic: doc["model_kind"] = "logistic"; break;
        case ModelKind::softmax: doc["model_kind"] = "softmax"; break;
    }
    doc["graph"] = {{"kind", c.graph.kind == GraphKind::ring      ? "ring"
                             : c.graph.kind == GraphKind::complete ? "complete"
                                                                   : "custom"},
                    {"n", c.graph.n},
                    {"edge_file", c.graph.edge_file}};
    doc["hyper"] = {{"a", c.hyper.a},
                    {"delta_alpha", c.hyper.delta_alpha},
                    {"beta", c.hyper.beta},
                    {"t_mode", c.hyper.t_mode == TMode::fixed ? "static" : "dynamic"},
                    {"T", c.hyper.t_fixed},
                    {"T_min", c.hyper.t_min},
                    {"T_max", c.hyper.t_max},
                    {"f", c.hyper.minibatch_fraction},
                    {"overlap_mode", c.hyper.overlap == OverlapMode::sequential
                                         ? "sequential"
                                         : "overlapping"}};
    doc["cycles"] = c.cycles;
    doc["trials"] = c.trials;
    doc["chains"] = c.chains;
    doc["metric_cadence"] = c.metric_cadence;
    doc["master_seed"] = c.master_seed;
    doc["t_sweep"] = c.t_sweep;
    doc["toy"] = {{"sigma_theta", c.toy.sigma_theta},
                  {"sigma_x", c.toy.sigma_x},
                  {"n_data", c.toy.n_data}};
    doc["data"] = {{"path", c.data.path},
                   {"dir", c.data.dir},
                   {"test_fraction", c.data.test_fraction},
                   {"subsample_per_agent", c.data.subsample_per_agent}};
    if (c.prior.kind == PriorKind::gaussian)
        doc["prior"] = {{"kind", "gaussian"}, {"mean", c.prior.location},
                        {"std", c.prior.scale}};
    else
        doc["prior"] = {{"kind", "laplace"}, {"loc", c.prior.location},
                        {"scale", c.prior.scale}};
    if (c.rho_u)
        doc["rho_u"] = *c.rho_u;
    else
        doc["rho_u"] = nullptr;
    doc["lipschitz"] = {{"probes", c.lipschitz.probes}, {"radius", c.lipschitz.radius}};
    doc["out_dir"] = c.out_dir;
    doc["workers"] = c.workers;
    return doc.dump(2);
}

}  // namespace gula
