#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace phi3 {

using Rational = boost::multiprecision::cpp_rational;

// Nodes of the decorated-tree algebra.  Prod children are kept sorted
// (multiset), Integ wraps a single child in the smoothed propagator.
enum class NodeKind { Phi, One, Smooth, Prod, Integ };

struct Term {
    NodeKind kind = NodeKind::One;
    std::string label;           // Smooth only
    std::vector<Term> children;  // Prod (>= 2 after canonicalization), Integ (exactly 1)

    static Term phi();
    static Term one();
    static Term smooth(std::string lbl);
    static Term prod(std::vector<Term> factors);
    static Term integ(Term child);

    bool operator==(const Term& o) const;
};

// Total order on terms; canonical terms with compare()==0 are equal.
int compare(const Term& a, const Term& b);
bool term_less(const Term& a, const Term& b);

// Flattens nested products, absorbs One factors, sorts multisets.
// Malformed arities (Integ without exactly one child, Smooth/Phi/One with
// children) throw std::invalid_argument.
Term canonicalize(const Term& t);

struct Grading {
    int l = 0;  // number of Integ nodes
    int k = 0;  // number of Phi leaves
    bool operator==(const Grading&) const = default;
};
Grading grading(const Term& t);

enum class Parity { Even, Odd, Mixed };
Parity phi_parity(const Term& t);

// Linear combination of canonical terms: sorted by term, no zero coefficients,
// no duplicate terms.
using TermSum = std::vector<std::pair<Rational, Term>>;

TermSum collect(TermSum raw);                    // canonicalize + merge + drop zeros
TermSum sum_add(const TermSum& a, const TermSum& b);
TermSum sum_scale(const Rational& c, TermSum s);
Parity phi_parity(const TermSum& s);

// Coefficients of the formal power series in the coupling constant,
// order j -> linear combination of terms.
struct FormalSeries {
    std::map<int, TermSum> orders;
    bool operator==(const FormalSeries&) const = default;
};

// Perturbative expansion of the mild solution up to and including order J:
//   F_0 = Phi,   F_j = - sum_{j1+j2+j3=j-1} Integ(Prod{F_j1, F_j2, F_j3}).
FormalSeries expand_solution(int J);

std::string to_string(const Term& t);
std::string to_string(const TermSum& s);

nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);
nlohmann::json term_to_json(const Term& t);
Term term_from_json(const nlohmann::json& j);
nlohmann::json sum_to_json(const TermSum& s);
TermSum sum_from_json(const nlohmann::json& j);
nlohmann::json series_to_json(const FormalSeries& f);
FormalSeries series_from_json(const nlohmann::json& j);

}  // namespace phi3
