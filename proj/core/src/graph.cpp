#include "gula/graph.hpp"

#include "gula/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace gula {

namespace {

void check_connected(int n, const std::vector<std::vector<int>>& neighbors) {
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        for (int u : neighbors[v]) {
            if (!seen[u]) {
                seen[u] = true;
                ++reached;
                frontier.push(u);
            }
        }
    }
    if (reached != n)
        throw DisconnectedGraph("graph is disconnected: reached " + std::to_string(reached) +
                                " of " + std::to_string(n) + " agents");
}

}  // namespace

Graph Graph::from_edges(int n, std::vector<std::pair<int, int>> edges) {
    if (n < 2) throw InvalidAdjacency("need at least 2 agents, got " + std::to_string(n));
    std::set<std::pair<int, int>> unique;
    for (auto [i, j] : edges) {
        if (i < 0 || j < 0 || i >= n || j >= n)
            throw InvalidAdjacency("edge (" + std::to_string(i) + "," + std::to_string(j) +
                                   ") out of range for n=" + std::to_string(n));
        if (i == j)
            throw InvalidAdjacency("self-loop at agent " + std::to_string(i));
        unique.emplace(std::min(i, j), std::max(i, j));
    }
    std::vector<std::vector<int>> neighbors(n);
    std::vector<std::pair<int, int>> sorted_edges(unique.begin(), unique.end());
    for (auto [i, j] : sorted_edges) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
    }
    for (auto& list : neighbors) std::sort(list.begin(), list.end());
    check_connected(n, neighbors);
    return Graph(n, std::move(neighbors), std::move(sorted_edges));
}

Graph Graph::ring(int n) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(n);
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return from_edges(n, std::move(edges));
}

Graph Graph::complete(int n) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return from_edges(n, std::move(edges));
}

Graph Graph::from_adjacency(const std::vector<std::vector<bool>>& adjacency) {
    const int n = static_cast<int>(adjacency.size());
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(adjacency[i].size()) != n)
            throw InvalidAdjacency("adjacency row " + std::to_string(i) + " is not length n");
        if (adjacency[i][i]) throw InvalidAdjacency("self-loop at agent " + std::to_string(i));
        for (int j = i + 1; j < n; ++j) {
            if (adjacency[i][j] != adjacency[j][i])
                throw InvalidAdjacency("adjacency not symmetric at (" + std::to_string(i) + "," +
                                       std::to_string(j) + ")");
            if (adjacency[i][j]) edges.emplace_back(i, j);
        }
    }
    return from_edges(n, std::move(edges));
}

Graph Graph::from_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open edge list file: " + path);
    std::string line;
    int64_t line_no = 0;
    int n = -1;
    std::vector<std::pair<int, int>> edges;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream row(line);
        if (n < 0) {
            if (!(row >> n)) throw MalformedRow("expected agent count", line_no);
            continue;
        }
        int i, j;
        if (!(row >> i)) continue;  // blank line
        if (!(row >> j)) throw MalformedRow("expected \"i j\" pair", line_no);
        edges.emplace_back(i, j);
    }
    if (n < 0) throw ParseError("empty edge list file: " + path);
    return from_edges(n, std::move(edges));
}

bool Graph::has_edge(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_) return false;
    const auto& list = neighbors_[i];
    return std::binary_search(list.begin(), list.end(), j);
}

Graph build_graph(GraphKind kind, int n, const std::string& edge_file) {
    switch (kind) {
        case GraphKind::ring: return Graph::ring(n);
        case GraphKind::complete: return Graph::complete(n);
        case GraphKind::custom: return Graph::from_edge_list_file(edge_file);
    }
    throw std::logic_error("unknown graph kind");
}

double GossipPairDistribution::min_activation() const {
    return *std::min_element(activation_prob.begin(), activation_prob.end());
}

GossipPairDistribution activation_probabilities(const Graph& g) {
    const int n = g.size();
    GossipPairDistribution dist;
    dist.pairs = g.edges();
    dist.pair_prob.reserve(dist.pairs.size());
    for (auto [i, j] : dist.pairs) {
        // agent i wakes and picks j, or j wakes and picks i
        dist.pair_prob.push_back((1.0 / n) * (1.0 / g.degree(i) + 1.0 / g.degree(j)));
    }
    dist.activation_prob.resize(n);
    for (int i = 0; i < n; ++i) {
        double neighbor_term = 0.0;
        for (int j : g.neighbors(i)) neighbor_term += 1.0 / g.degree(j);
        dist.activation_prob[i] = (1.0 / n) * (1.0 + neighbor_term);
    }

    double pair_sum = 0.0;
    for (double p : dist.pair_prob) pair_sum += p;
    double act_sum = 0.0;
    for (double p : dist.activation_prob) act_sum += p;
    if (std::abs(pair_sum - 1.0) > 1e-12 || std::abs(act_sum - 2.0) > 1e-12)
        throw std::logic_error("gossip law normalization failure");
    const double p_m = dist.min_activation();
    if (!(p_m > 0.0) || p_m > 2.0 / n + 1e-12)
        throw std::logic_error("activation probability outside (0, 2/n]");
    return dist;
}

Eigen::MatrixXd gossip_laplacian(int i, int j, int n) {
    if (i < 0 || j < 0 || i >= n || j >= n)
        throw IndexOutOfRange("gossip_laplacian: pair (" + std::to_string(i) + "," +
                              std::to_string(j) + ") out of range for n=" + std::to_string(n));
    if (i == j) throw IndexOutOfRange("gossip_laplacian: pair must be distinct agents");
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    lap(i, i) = 1.0;
    lap(j, j) = 1.0;
    lap(i, j) = -1.0;
    lap(j, i) = -1.0;
    return lap;
}

SpectralConstants spectral_constants(const Graph& g, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw ValidationError("beta", "fusion coefficient must lie in [0, 1]");
    const int n = g.size();
    const GossipPairDistribution dist = activation_probabilities(g);

    Eigen::MatrixXd expected_sq = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd expected_lap = Eigen::MatrixXd::Zero(n, n);
    for (size_t e = 0; e < dist.pairs.size(); ++e) {
        const auto [i, j] = dist.pairs[e];
        const Eigen::MatrixXd lap = gossip_laplacian(i, j, n);
        const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n) - beta * lap;
        expected_sq += dist.pair_prob[e] * (w * w);  // w symmetric, so w*w == w^T w
        expected_lap += dist.pair_prob[e] * lap;
    }

    // Deflate the consensus eigenvector (eigenvalue exactly 1 of E[W^T W]):
    // subtracting J/n zeroes it and leaves the orthogonal spectrum untouched.
    const Eigen::MatrixXd deflated =
        expected_sq - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(deflated);
    double contraction = es.eigenvalues().maxCoeff();
    if (contraction < 0.0 && contraction > -1e-9) contraction = 0.0;
    if (contraction > 1.0 && contraction < 1.0 + 1e-9) contraction = 1.0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> el(expected_lap);
    // eigenvalues ascending; second largest is index n-2
    const double lambda_bar_l = el.eigenvalues()(n - 2);

    SpectralConstants sc;
    sc.lambda_contraction = contraction;
    sc.lambda_bar_L = lambda_bar_l;
    sc.p_m = dist.min_activation();
    return sc;
}

}  // namespace gula
