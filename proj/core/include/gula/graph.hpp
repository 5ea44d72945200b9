// graph.hpp — communication topology, the gossip pair law it induces, and
// the spectral constants used by the convergence conditions.
#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace gula {

// Undirected connected graph over agents 0..n-1. Immutable once built;
// safe to share read-only across trial workers.
class Graph {
public:
    static Graph ring(int n);
    static Graph complete(int n);
    // Custom topology from an explicit edge set. Validates symmetry is
    // implied (edges are unordered), rejects self-loops and out-of-range
    // indices, and requires connectivity (BFS).
    static Graph from_edges(int n, std::vector<std::pair<int, int>> edges);
    // Dense boolean adjacency; must be symmetric with a zero diagonal.
    static Graph from_adjacency(const std::vector<std::vector<bool>>& adjacency);
    // Plain-text edge list: first line "n", then one "i j" pair per line,
    // 0-indexed, whitespace-separated.
    static Graph from_edge_list_file(const std::string& path);

    int size() const { return n_; }
    int degree(int i) const { return static_cast<int>(neighbors_[i].size()); }
    const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
    bool has_edge(int i, int j) const;
    // Unordered edges with i < j, lexicographically sorted.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

private:
    Graph(int n, std::vector<std::vector<int>> neighbors, std::vector<std::pair<int, int>> edges)
        : n_(n), neighbors_(std::move(neighbors)), edges_(std::move(edges)) {}

    int n_ = 0;
    std::vector<std::vector<int>> neighbors_;  // sorted per agent
    std::vector<std::pair<int, int>> edges_;
};

enum class GraphKind { ring, complete, custom };

// Factory used by config loading; custom kind reads the edge list file.
Graph build_graph(GraphKind kind, int n, const std::string& edge_file = {});

// Law of the two-stage gossip draw: a uniformly random agent wakes and picks
// a uniformly random neighbor. pair_prob[e] is the probability that edge e is
// the active pair of a cycle; activation_prob[i] is the chance agent i takes
// part in a given cycle.
struct GossipPairDistribution {
    std::vector<std::pair<int, int>> pairs;  // == graph edges, i < j
    std::vector<double> pair_prob;           // sums to 1
    std::vector<double> activation_prob;     // p_i, sums to 2
    double min_activation() const;           // p_m
};

GossipPairDistribution activation_probabilities(const Graph& g);

// Laplacian of the two-agent gossip event: +1 at (i,i),(j,j), -1 off-diagonal.
Eigen::MatrixXd gossip_laplacian(int i, int j, int n);

// Constants of the expected one-cycle fusion map.
//   lambda_contraction: second-largest eigenvalue of E[W_k^T W_k] with
//     W_k = I - beta * L_pair, pair drawn from the gossip law. The consensus
//     eigenvector (all-ones, eigenvalue 1) is deflated explicitly so a
//     numerical tie cannot be misread as the contraction factor.
//   lambda_bar_L: second-largest eigenvalue of E[L_k], reported alongside.
// Eigenvalues are computed on the n x n block; the Kronecker factor over the
// parameter dimension duplicates spectrum and is omitted.
struct SpectralConstants {
    double lambda_contraction = 1.0;
    double lambda_bar_L = 0.0;
    double p_m = 0.0;
};

SpectralConstants spectral_constants(const Graph& g, double beta);

}  // namespace gula
