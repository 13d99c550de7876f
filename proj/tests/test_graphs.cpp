#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "phi3/graphs.hpp"

using namespace phi3;

namespace {

GraphRecord relabel(const GraphRecord& g, std::mt19937& rng) {
    std::vector<int> perm(g.n);
    for (int i = 0; i < g.n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    GraphRecord h;
    h.n = g.n;
    h.provenance = g.provenance;
    for (auto [u, v] : g.edges) h.edges.emplace_back(perm[u], perm[v]);
    std::shuffle(h.edges.begin(), h.edges.end(), rng);
    return h;
}

GraphRecord fish() {
    GraphRecord g;
    g.n = 2;
    g.edges = {{0, 1}, {0, 1}};
    return g;
}

}  // namespace

TEST_CASE("small enumeration matches the hand count") {
    auto two = enumerate_admissible(2);
    REQUIRE(two.size() == 1);
    CHECK(two[0].n == 2);
    CHECK(two[0].L() == 2);
    CHECK(graph_key(two[0]) == graph_key(fish()));

    auto four = enumerate_admissible(4);
    CHECK(four.size() == 6);
    std::map<std::pair<int, int>, int> profile;  // (N, L) -> count
    for (const auto& g : four) profile[{g.n, g.L()}] += 1;
    CHECK(profile[{2, 2}] == 1);  // double edge
    CHECK(profile[{3, 3}] == 1);  // triangle
    CHECK(profile[{4, 4}] == 1);  // square
    CHECK(profile[{4, 5}] == 3);  // the three one-loop-heavier shapes
    for (const auto& g : four) {
        for (auto [u, v] : g.edges) CHECK(u != v);  // no self-loops, ever
        CHECK(g.n >= 2);                            // no single-vertex graphs
        CHECK_FALSE((g.n == 2 && g.L() == 3));      // no triple edge from this grammar
    }
}

TEST_CASE("divergence degrees") {
    auto rep3 = degree_of_divergence(fish(), 3);
    CHECK(rep3.rho == 1);
    CHECK(rep3.needs_renorm);
    CHECK(rep3.ambiguity_dim == 5);  // constants plus the four weight-one directions

    auto rep2 = degree_of_divergence(fish(), 2);
    CHECK(rep2.rho == 0);
    CHECK(rep2.needs_renorm);
    CHECK(rep2.ambiguity_dim == 1);

    GraphRecord path;  // tree-shaped remnant: L = N - 1 is always convergent
    path.n = 3;
    path.edges = {{0, 1}, {1, 2}};
    CHECK(degree_of_divergence(path, 3).rho == -4);
    CHECK_FALSE(degree_of_divergence(path, 3).needs_renorm);
}

TEST_CASE("valency lemmas hold on the full enumeration") {
    auto all = enumerate_admissible(10);
    CHECK(all.size() > 50);
    for (const auto& g : all) {
        CHECK(verify_valency_lemmas(g));
        for (int v : g.valencies()) {
            CHECK(v >= 2);
            CHECK(v <= 4);
        }
    }
    // the enumeration is downward closed: smaller caps give prefixes
    auto small = enumerate_admissible(6);
    std::set<std::string> all_keys;
    for (const auto& g : all) all_keys.insert(graph_key(g));
    for (const auto& g : small) CHECK(all_keys.count(graph_key(g)) == 1);
}

TEST_CASE("nine-vertex fourteen-edge extremal profile") {
    GraphRecord g;
    g.n = 9;
    g.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0},  // hexagon
               {0, 6}, {1, 6}, {2, 7}, {3, 7}, {4, 8}, {5, 8},  // valency-2 hats
               {0, 3}, {1, 4}};                                 // chords
    REQUIRE(g.L() == 14);
    CHECK(verify_valency_lemmas(g));
    CHECK(12 * (g.L() + 1) > 19 * g.n);  // L saturates: L+1 would break 19N/12
}

TEST_CASE("ratio sequences") {
    auto [r2_0, r4_0] = ratio_sequences(0);
    CHECK(r2_0 == Rational(1));
    CHECK(r4_0 == Rational(1, 4));
    auto [r2_5, r4_5] = ratio_sequences(5);
    CHECK(r2_5 == Rational(33, 95));
    Rational prev2 = r2_0, prev4 = r4_0;
    for (int n = 1; n <= 20; ++n) {
        auto [r2, r4] = ratio_sequences(n);
        CHECK(r2 < prev2);
        CHECK(r4 > prev4);
        CHECK(r2 > Rational(1, 3));
        CHECK(r4 < Rational(1, 2));
        prev2 = r2;
        prev4 = r4;
    }
    CHECK(prev2 - Rational(1, 3) < Rational(1, 100000));
    CHECK(Rational(1, 2) - prev4 < Rational(1, 100000));
}

TEST_CASE("finiteness certificate") {
    auto c3 = finiteness_certificate(3);
    REQUIRE(c3.subcritical);
    CHECK(c3.n_threshold == 20);
    REQUIRE(c3.divergent.size() == 4);
    std::multiset<int> rhos;
    for (const auto& rep : c3.divergent) {
        rhos.insert(rep.rho);
        CHECK(rep.graph.n <= 4);
        CHECK(rep.needs_renorm);
    }
    CHECK(rhos == std::multiset<int>({0, 0, 0, 1}));
    bool has_fish = false;
    for (const auto& rep : c3.divergent)
        if (graph_key(rep.graph) == graph_key(fish())) has_fish = (rep.rho == 1);
    CHECK(has_fish);

    auto c2 = finiteness_certificate(2);
    REQUIRE(c2.subcritical);
    CHECK(c2.n_threshold == 5);
    REQUIRE(c2.divergent.size() == 1);
    CHECK(c2.divergent[0].rho == 0);
    CHECK(graph_key(c2.divergent[0].graph) == graph_key(fish()));

    auto c1 = finiteness_certificate(1);
    CHECK(c1.subcritical);
    CHECK(c1.divergent.empty());

    CHECK_FALSE(finiteness_certificate(4).subcritical);
    CHECK_FALSE(finiteness_certificate(5).subcritical);
}

TEST_CASE("divergent list is stable under a larger enumeration") {
    auto cert = finiteness_certificate(3);
    std::set<std::string> cert_keys;
    for (const auto& rep : cert.divergent) cert_keys.insert(graph_key(rep.graph));
    std::set<std::string> refiltered;
    for (const auto& g : enumerate_admissible(8))
        if (degree_of_divergence(g, 3).needs_renorm) refiltered.insert(graph_key(g));
    CHECK(refiltered == cert_keys);
}

TEST_CASE("pointwise degree bound") {
    for (const auto& g : enumerate_admissible(8)) {
        for (int d = 1; d <= 3; ++d) {
            int rho = degree_of_divergence(g, d).rho;
            CHECK(12 * rho <= g.n * (7 * d - 24) + 12 * (d + 2));
        }
    }
}

TEST_CASE("canonical key agrees with the isomorphism oracle") {
    auto graphs = enumerate_admissible(6);
    REQUIRE(graphs.size() >= 10);
    std::mt19937 rng(20260823);
    for (size_t i = 0; i < graphs.size(); ++i) {
        // keys are invariant under relabeling; the oracle confirms isomorphy
        for (int rep = 0; rep < 3; ++rep) {
            GraphRecord shuffled = relabel(graphs[i], rng);
            CHECK(graph_key(shuffled) == graph_key(graphs[i]));
            CHECK(graph_isomorphic_oracle(shuffled, graphs[i]));
        }
        // deduplicated entries are pairwise non-isomorphic
        for (size_t j = i + 1; j < graphs.size(); ++j) {
            CHECK_FALSE(graph_isomorphic_oracle(graphs[i], graphs[j]));
            CHECK(graph_key(graphs[i]) != graph_key(graphs[j]));
        }
    }
}

TEST_CASE("provenance reconstructs an algebra term") {
    for (const auto& rep : finiteness_certificate(3).divergent) {
        const std::string& prov = rep.graph.provenance;
        REQUIRE_FALSE(prov.empty());
        int internal = static_cast<int>(std::count(prov.begin(), prov.end(), '('));
        int leaves = static_cast<int>(std::count(prov.begin(), prov.end(), '*'));
        CHECK(internal + leaves / 2 == rep.graph.n);
        Term t = provenance_term(prov);
        Grading gr = grading(t);
        CHECK(gr.l == internal);
        CHECK(gr.k == leaves);
    }
    CHECK_THROWS_AS(provenance_term("(*"), std::invalid_argument);
}

TEST_CASE("report emission") {
    auto cert = finiteness_certificate(3);
    std::string csv = graphs_to_csv(cert.divergent);
    CHECK(csv.find("n,l,val2,val3,val4,rho") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + four rows
    std::string dot = graph_to_dot(cert.divergent[0].graph, "fish");
    CHECK(dot.find("graph fish {") == 0);
    CHECK(dot.find("--") != std::string::npos);
}

TEST_CASE("resource cap is enforced") {
    CHECK_THROWS_AS(enumerate_admissible(10, 10), std::runtime_error);
    CHECK_THROWS_AS(enumerate_admissible(1), std::invalid_argument);
}
