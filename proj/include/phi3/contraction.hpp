#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "phi3/term.hpp"

namespace phi3 {

// Renormalization constant attached to a pair of vertices (replacing a
// divergent multi-edge between them).  u -> v follows the propagator
// orientation when a P-edge was absorbed; otherwise u <= v.
struct SymbolEdge {
    std::string name;
    int u = 0, v = 0;
};

// Result of Wick-contracting a term: a multigraph over interaction vertices.
// Vertices 0..n_roots-1 are the external roots (tensor slots); the remaining
// vertices are integration points.  p_edges are directed propagator edges
// (parent -> integrated child), q_edges are undirected covariance edges
// (u == v encodes the covariance on the diagonal while it is still
// convergent); legs[v] counts uncontracted field factors at v and smooth[v]
// holds commuting smooth prefactors, including renormalization constants.
struct ContractedTerm {
    int n_roots = 1;
    std::vector<int> legs;
    std::vector<std::vector<std::string>> smooth;
    std::vector<std::pair<int, int>> p_edges;
    std::vector<std::pair<int, int>> q_edges;
    std::vector<SymbolEdge> symbol_edges;

    int n_vertices() const { return static_cast<int>(legs.size()); }
    int total_legs() const;
};

struct ContractionContext {
    int d = 3;  // spatial dimension, fixes which loop subgraphs are divergent
};

using CSum = std::vector<std::pair<Rational, ContractedTerm>>;

// Canonical string encoding; equal iff the terms are isomorphic by a root-
// preserving vertex relabeling.
std::string canonical_key(const ContractedTerm& t);
CSum collect(CSum raw);
bool csum_equal(const CSum& a, const CSum& b);
CSum csum_add(const CSum& a, const CSum& b);
CSum csum_scale(const Rational& c, CSum s);

// Graph skeleton of a term, no contractions performed.
ContractedTerm lift(const Term& t);

// Wick contraction: sum over all sets of disjoint leg pairs (any two legs,
// same or different vertices); divergent loop subgraphs are replaced by
// renormalization symbols for the configured dimension.
CSum gamma_cdotQ(const Term& t, const ContractionContext& ctx = {});
CSum gamma_cdotQ(const TermSum& s, const ContractionContext& ctx = {});

// Deformed product of two single-root contracted sums: roots are merged and
// all cross-pairings between the two sides are summed.  Commutative,
// associative, unital.
CSum cdotQ_product(const CSum& a, const CSum& b, const ContractionContext& ctx = {});

// Plain pointwise product (merge at the root, no new pairings).
CSum pointwise_product(const CSum& a, const CSum& b);

// Formal tensor word with one root per factor.
struct TensorWord {
    std::vector<Term> factors;
};

// Multi-root contraction: factors keep distinct roots and only legs of
// distinct factors may be paired.
CSum gamma_bulletQ(const TensorWord& w, const ContractionContext& ctx = {});
// Same cross-only pairing applied to already-contracted factors.
CSum bullet_cross(const std::vector<CSum>& factors, const ContractionContext& ctx = {});

// Drops every summand that still carries uncontracted legs (evaluation at
// vanishing background field).
CSum evaluate_at_zero(const CSum& s);

// Swaps the two root slots of a 2-root sum.
CSum swap_roots(const CSum& s);

// Correlation of two solution slots: order k -> sum over j of
// cross-contracted Gamma(F_j) (x) Gamma(F_{k-j}).  Coefficients carry the
// expansion signs; the coupling power is the map key.
std::map<int, CSum> two_point_correlation(int K, const ContractionContext& ctx = {});

// Counterterm operators M_n, represented through their action on Phi.
// Each term of M[n] has exactly one leg (the operand slot).
struct RenormalizedEquation {
    std::map<int, CSum> M;
};
RenormalizedEquation renormalized_equation(int J, const ContractionContext& ctx = {});

// Polynomial in smooth labels: monomial = multiset of labels (empty = 1).
using SmoothPoly = std::vector<std::pair<Rational, std::vector<std::string>>>;

// Simultaneous substitution of renormalization symbols by smooth-label
// polynomials.  Throws std::invalid_argument for a symbol name that is
// neither a recognized renormalization constant nor present in the input.
CSum apply_renorm_shift(const CSum& s, const std::map<std::string, SmoothPoly>& shifts);
std::map<int, CSum> apply_renorm_shift(const std::map<int, CSum>& series,
                                       const std::map<std::string, SmoothPoly>& shifts);

std::string to_string(const ContractedTerm& t);
std::string to_string(const CSum& s);
nlohmann::json cterm_to_json(const ContractedTerm& t);
nlohmann::json csum_to_json(const CSum& s);
std::string csum_to_dot(const CSum& s, const std::string& name = "contracted");

}  // namespace phi3
