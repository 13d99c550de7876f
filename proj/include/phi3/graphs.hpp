#pragma once

#include <string>
#include <vector>

#include "phi3/term.hpp"

namespace phi3 {

// Undirected multigraph produced by collapsing leaves of a ternary tree.
// `provenance` records the originating tree (nested parentheses, '*' = leaf)
// and the leaf matching, e.g. "(**)|0-1" for the double edge on two vertices.
struct GraphRecord {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // unordered pairs, no self-loops
    std::string provenance;

    int L() const { return static_cast<int>(edges.size()); }
    std::vector<int> valencies() const;
};

// Canonical isomorphism-invariant key (root-free vertex relabeling).
std::string graph_key(const GraphRecord& g);

// Exhaustive permutation backtracker; intended as an oracle for small n.
bool graph_isomorphic_oracle(const GraphRecord& a, const GraphRecord& b);

// All admissible graphs with at most n_max vertices: ternary trees (root with
// 2-3 children, other internal nodes with 1-3) whose leaves are matched in
// pairs, each pair merged into a new valency-2 vertex.  Deduplicated by
// canonical key.  Throws std::runtime_error when more than `cap` candidate
// graphs are generated.
std::vector<GraphRecord> enumerate_admissible(int n_max, long long cap = 5'000'000);

struct DivergenceReport {
    GraphRecord graph;
    int rho = 0;
    bool needs_renorm = false;
    long long ambiguity_dim = 0;
};

// rho = L*d - (N-1)*(d+2); ambiguity dimension over the (N-1)*(d+2)
// transverse directions when rho >= 0.
DivergenceReport degree_of_divergence(const GraphRecord& g, int d);

// valency-2 count >= ceil(N/3), valency-4 count <= floor(N/2), L <= 19N/12.
bool verify_valency_lemmas(const GraphRecord& g);

// Exact ratio sequences from the valency-lemma proofs:
// r2(n) = (2^n+1)/(3*2^n-1) decreasing to 1/3,
// r4(n) = (3^{n+1}-1)/(2*3^{n+1}+2) increasing to 1/2.
std::pair<Rational, Rational> ratio_sequences(int n);

struct FinitenessCertificate {
    bool subcritical = false;       // false: no finite divergent list exists
    int n_threshold = 0;            // least N beyond which the bound is negative
    std::vector<DivergenceReport> divergent;
};

// For d with 7d/12 - 2 < 0 returns the vertex threshold from the bound
// rho <= N(7d/12 - 2) + d + 2 together with the complete divergent list.
FinitenessCertificate finiteness_certificate(int d);

// Rebuilds the originating term (nested integrations of ternary products)
// from a provenance string.
Term provenance_term(const std::string& provenance);

std::string graphs_to_csv(const std::vector<DivergenceReport>& reports);
std::string graph_to_dot(const GraphRecord& g, const std::string& name = "admissible");

}  // namespace phi3
