#include "gula/graph.hpp"

#include "gula/errors.hpp"
#include "gula/rng.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

using namespace gula;

TEST_CASE("ring graph: every agent has exactly two neighbors") {
    const Graph g = Graph::ring(5);
    REQUIRE(g.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(g.degree(i) == 2);
    CHECK(g.edges().size() == 5);
}

TEST_CASE("complete graph on two agents is the single edge") {
    const Graph g = Graph::complete(2);
    CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 1}});
    CHECK(g.neighbors(0) == std::vector<int>{1});
    CHECK(g.neighbors(1) == std::vector<int>{0});
}

TEST_CASE("custom path graph is connected with degrees 1,2,1") {
    const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}});
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(1) == 2);
    CHECK(g.degree(2) == 1);
    CHECK(g.has_edge(0, 1));
    CHECK_FALSE(g.has_edge(0, 2));
}

TEST_CASE("invalid graphs are rejected at construction") {
    CHECK_THROWS_AS(Graph::from_edges(4, {{0, 1}, {2, 3}}), DisconnectedGraph);
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 0}, {0, 1}, {1, 2}}), InvalidAdjacency);
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 5}}), InvalidAdjacency);
    CHECK_THROWS_AS(Graph::from_edges(1, {}), InvalidAdjacency);
    CHECK_THROWS_AS(Graph::from_adjacency({{false, true}, {false, false}}), InvalidAdjacency);
    CHECK_THROWS_AS(Graph::from_adjacency({{true, true}, {true, false}}), InvalidAdjacency);
}

TEST_CASE("edge list file round trip") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "gula_edges_test.txt";
    {
        std::ofstream out(path);
        out << "3\n0 1\n1 2\n";
    }
    const Graph g = Graph::from_edge_list_file(path.string());
    CHECK(g.size() == 3);
    CHECK(g.degree(1) == 2);
    fs::remove(path);

    CHECK_THROWS_AS(Graph::from_edge_list_file("/nonexistent/nowhere.txt"), ParseError);
}

TEST_CASE("activation probabilities for ring, complete and star") {
    const auto ring = activation_probabilities(Graph::ring(5));
    for (double p : ring.activation_prob) CHECK(p == doctest::Approx(0.4).epsilon(1e-12));

    const auto complete4 = activation_probabilities(Graph::complete(4));
    for (double p : complete4.activation_prob) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));

    // star with center 0: the center takes part in every cycle
    const auto star = activation_probabilities(Graph::from_edges(3, {{0, 1}, {0, 2}}));
    CHECK(star.activation_prob[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(star.activation_prob[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(star.activation_prob[2] == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(star.pairs.size() == 2);
    CHECK(star.pair_prob[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(star.pair_prob[1] == doctest::Approx(0.5).epsilon(1e-12));

    double pair_sum = 0.0, act_sum = 0.0;
    for (double p : ring.pair_prob) pair_sum += p;
    for (double p : ring.activation_prob) act_sum += p;
    CHECK(pair_sum == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(act_sum == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("two-stage monte carlo draw matches the pair law within 3 sigma") {
    const Graph g = Graph::ring(5);
    const auto dist = activation_probabilities(g);
    RngStream rng(2024);
    const int draws = 1000000;
    std::map<std::pair<int, int>, int> counts;
    for (int d = 0; d < draws; ++d) {
        const int waker = static_cast<int>(rng.uniform_below(g.size()));
        const auto& nbrs = g.neighbors(waker);
        const int partner = nbrs[rng.uniform_below(nbrs.size())];
        counts[{std::min(waker, partner), std::max(waker, partner)}]++;
    }
    for (size_t e = 0; e < dist.pairs.size(); ++e) {
        const double p = dist.pair_prob[e];
        const double freq = counts[dist.pairs[e]] / static_cast<double>(draws);
        const double sigma = std::sqrt(p * (1.0 - p) / draws);
        CHECK(std::abs(freq - p) < 3.0 * sigma);
    }
}

TEST_CASE("gossip laplacian: values, untouched agents, spectrum") {
    const Eigen::MatrixXd l2 = gossip_laplacian(0, 1, 2);
    CHECK(l2(0, 0) == 1.0);
    CHECK(l2(1, 1) == 1.0);
    CHECK(l2(0, 1) == -1.0);
    CHECK(l2(1, 0) == -1.0);

    const Eigen::MatrixXd l3 = gossip_laplacian(0, 2, 3);
    CHECK(l3.row(1).isZero(0.0));
    CHECK(l3.col(1).isZero(0.0));

    // eigenvalues {2, 0, ..., 0}; L 1 = 0; x^T L x = (x_i - x_j)^2
    const Eigen::MatrixXd lap = gossip_laplacian(1, 3, 5);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    CHECK(es.eigenvalues()(4) == doctest::Approx(2.0).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) CHECK(std::abs(es.eigenvalues()(i)) < 1e-12);
    CHECK((lap * Eigen::VectorXd::Ones(5)).norm() < 1e-14);

    RngStream rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd x = rng.normal_vector(5);
        CHECK(x.dot(lap * x) ==
              doctest::Approx((x[1] - x[3]) * (x[1] - x[3])).epsilon(1e-12));
    }

    CHECK_THROWS_AS(gossip_laplacian(0, 0, 3), IndexOutOfRange);
    CHECK_THROWS_AS(gossip_laplacian(0, 7, 3), IndexOutOfRange);
}

TEST_CASE("spectral constants: closed forms and contraction bounds") {
    // complete n=2, beta=0.5: one fusion reaches consensus, contraction 0
    const SpectralConstants two = spectral_constants(Graph::complete(2), 0.5);
    CHECK(std::abs(two.lambda_contraction) < 1e-12);

    // ring n=5, beta=0.5: E[(I - 0.5 L_e)^2] = I - (1/10) L_ring, so the
    // contraction factor is 1 - (1/10)(2 - 2 cos(2 pi / 5))
    const SpectralConstants ring = spectral_constants(Graph::ring(5), 0.5);
    const double expected = 1.0 - 0.1 * (2.0 - 2.0 * std::cos(2.0 * M_PI / 5.0));
    CHECK(ring.lambda_contraction == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ring.lambda_contraction > 0.0);
    CHECK(ring.lambda_contraction < 1.0);
    CHECK(ring.p_m == doctest::Approx(0.4).epsilon(1e-12));

    // beta = 0: no fusion, no contraction
    const SpectralConstants none = spectral_constants(Graph::ring(5), 0.0);
    CHECK(none.lambda_contraction == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("contraction below one for assorted connected graphs") {
    std::vector<Graph> graphs;
    for (int n = 4; n <= 8; ++n) graphs.push_back(Graph::ring(n));
    for (int n = 3; n <= 5; ++n) graphs.push_back(Graph::complete(n));
    graphs.push_back(Graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}}));          // star
    graphs.push_back(Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}));  // path
    for (const auto& g : graphs)
        for (double beta : {0.2, 0.5, 0.8}) {
            const SpectralConstants sc = spectral_constants(g, beta);
            CHECK(sc.lambda_contraction < 1.0);
            CHECK(sc.lambda_contraction >= 0.0);
        }
}
