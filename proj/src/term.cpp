#include "phi3/term.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace phi3 {

Term Term::phi() { return Term{NodeKind::Phi, {}, {}}; }
Term Term::one() { return Term{NodeKind::One, {}, {}}; }
Term Term::smooth(std::string lbl) { return Term{NodeKind::Smooth, std::move(lbl), {}}; }
Term Term::prod(std::vector<Term> factors) { return Term{NodeKind::Prod, {}, std::move(factors)}; }
Term Term::integ(Term child) { return Term{NodeKind::Integ, {}, {std::move(child)}}; }

bool Term::operator==(const Term& o) const { return compare(*this, o) == 0; }

static int kind_rank(NodeKind k) {
    switch (k) {
        case NodeKind::One: return 0;
        case NodeKind::Phi: return 1;
        case NodeKind::Smooth: return 2;
        case NodeKind::Integ: return 3;
        case NodeKind::Prod: return 4;
    }
    return 5;
}

int compare(const Term& a, const Term& b) {
    if (int d = kind_rank(a.kind) - kind_rank(b.kind); d != 0) return d < 0 ? -1 : 1;
    if (int d = a.label.compare(b.label); d != 0) return d < 0 ? -1 : 1;
    if (a.children.size() != b.children.size())
        return a.children.size() < b.children.size() ? -1 : 1;
    for (size_t i = 0; i < a.children.size(); ++i)
        if (int d = compare(a.children[i], b.children[i]); d != 0) return d;
    return 0;
}

bool term_less(const Term& a, const Term& b) { return compare(a, b) < 0; }

Term canonicalize(const Term& t) {
    switch (t.kind) {
        case NodeKind::Phi:
        case NodeKind::One:
        case NodeKind::Smooth:
            if (!t.children.empty()) throw std::invalid_argument("leaf node with children");
            return t;
        case NodeKind::Integ: {
            if (t.children.size() != 1) throw std::invalid_argument("Integ arity != 1");
            return Term::integ(canonicalize(t.children[0]));
        }
        case NodeKind::Prod: {
            std::vector<Term> flat;
            for (const Term& c : t.children) {
                Term cc = canonicalize(c);
                if (cc.kind == NodeKind::One) continue;  // unit absorbed
                if (cc.kind == NodeKind::Prod)
                    flat.insert(flat.end(), cc.children.begin(), cc.children.end());
                else
                    flat.push_back(std::move(cc));
            }
            if (flat.empty()) return Term::one();
            if (flat.size() == 1) return flat[0];
            std::sort(flat.begin(), flat.end(), term_less);
            return Term::prod(std::move(flat));
        }
    }
    throw std::invalid_argument("unknown node kind");
}

Grading grading(const Term& t) {
    Grading g;
    if (t.kind == NodeKind::Integ) g.l = 1;
    if (t.kind == NodeKind::Phi) g.k = 1;
    for (const Term& c : t.children) {
        Grading gc = grading(c);
        g.l += gc.l;
        g.k += gc.k;
    }
    return g;
}

Parity phi_parity(const Term& t) { return grading(t).k % 2 == 0 ? Parity::Even : Parity::Odd; }

TermSum collect(TermSum raw) {
    for (auto& [c, t] : raw) t = canonicalize(t);
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) { return term_less(a.second, b.second); });
    TermSum out;
    for (auto& [c, t] : raw) {
        if (!out.empty() && compare(out.back().second, t) == 0)
            out.back().first += c;
        else
            out.emplace_back(c, std::move(t));
    }
    std::erase_if(out, [](const auto& p) { return p.first == 0; });
    return out;
}

TermSum sum_add(const TermSum& a, const TermSum& b) {
    TermSum r = a;
    r.insert(r.end(), b.begin(), b.end());
    return collect(std::move(r));
}

TermSum sum_scale(const Rational& c, TermSum s) {
    if (c == 0) return {};
    for (auto& [x, t] : s) x *= c;
    return s;
}

Parity phi_parity(const TermSum& s) {
    bool even = false, odd = false;
    for (const auto& [c, t] : s)
        (phi_parity(t) == Parity::Even ? even : odd) = true;
    if (even && odd) return Parity::Mixed;
    return odd ? Parity::Odd : Parity::Even;
}

FormalSeries expand_solution(int J) {
    if (J < 0) throw std::invalid_argument("negative order");
    FormalSeries f;
    f.orders[0] = {{Rational(1), Term::phi()}};
    for (int j = 1; j <= J; ++j) {
        TermSum acc;
        for (int j1 = 0; j1 <= j - 1; ++j1)
            for (int j2 = 0; j2 + j1 <= j - 1; ++j2) {
                int j3 = j - 1 - j1 - j2;
                for (const auto& [c1, t1] : f.orders[j1])
                    for (const auto& [c2, t2] : f.orders[j2])
                        for (const auto& [c3, t3] : f.orders[j3])
                            acc.emplace_back(-c1 * c2 * c3,
                                             Term::integ(Term::prod({t1, t2, t3})));
            }
        f.orders[j] = collect(std::move(acc));
    }
    return f;
}

std::string to_string(const Term& t) {
    switch (t.kind) {
        case NodeKind::Phi: return "Phi";
        case NodeKind::One: return "1";
        case NodeKind::Smooth: return t.label;
        case NodeKind::Integ: return "P*(" + to_string(t.children[0]) + ")";
        case NodeKind::Prod: {
            std::string s;
            for (size_t i = 0; i < t.children.size(); ++i) {
                if (i) s += "*";
                s += to_string(t.children[i]);
            }
            return s;
        }
    }
    return "?";
}

std::string to_string(const TermSum& s) {
    if (s.empty()) return "0";
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        const auto& [c, t] = s[i];
        std::string cs = c.str();
        if (i == 0) {
            out += (cs == "1") ? "" : (cs == "-1" ? "-" : cs + " ");
        } else if (c > 0) {
            out += (cs == "1") ? " + " : " + " + cs + " ";
        } else {
            std::string mag = Rational(-c).str();
            out += (mag == "1") ? " - " : " - " + mag + " ";
        }
        out += to_string(t);
    }
    return out;
}

nlohmann::json rational_to_json(const Rational& r) {
    return {{"num", boost::multiprecision::numerator(r).str()},
            {"den", boost::multiprecision::denominator(r).str()}};
}

Rational rational_from_json(const nlohmann::json& j) {
    using boost::multiprecision::cpp_int;
    cpp_int num(j.at("num").get<std::string>());
    cpp_int den(j.at("den").get<std::string>());
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rational(num, den);
}

nlohmann::json term_to_json(const Term& t) {
    nlohmann::json j;
    switch (t.kind) {
        case NodeKind::Phi: j["tag"] = "phi"; break;
        case NodeKind::One: j["tag"] = "one"; break;
        case NodeKind::Smooth:
            j["tag"] = "smooth";
            j["label"] = t.label;
            break;
        case NodeKind::Integ:
            j["tag"] = "integ";
            j["child"] = term_to_json(t.children[0]);
            break;
        case NodeKind::Prod: {
            j["tag"] = "prod";
            auto arr = nlohmann::json::array();
            for (const Term& c : t.children) arr.push_back(term_to_json(c));
            j["children"] = arr;
            break;
        }
    }
    return j;
}

Term term_from_json(const nlohmann::json& j) {
    const std::string tag = j.at("tag").get<std::string>();
    if (tag == "phi") return Term::phi();
    if (tag == "one") return Term::one();
    if (tag == "smooth") return Term::smooth(j.at("label").get<std::string>());
    if (tag == "integ") return Term::integ(term_from_json(j.at("child")));
    if (tag == "prod") {
        std::vector<Term> cs;
        for (const auto& c : j.at("children")) cs.push_back(term_from_json(c));
        return Term::prod(std::move(cs));
    }
    throw std::invalid_argument("unknown term tag: " + tag);
}

nlohmann::json sum_to_json(const TermSum& s) {
    auto arr = nlohmann::json::array();
    for (const auto& [c, t] : s)
        arr.push_back({{"coeff", rational_to_json(c)}, {"term", term_to_json(t)}});
    return arr;
}

TermSum sum_from_json(const nlohmann::json& j) {
    TermSum s;
    for (const auto& e : j)
        s.emplace_back(rational_from_json(e.at("coeff")), term_from_json(e.at("term")));
    return collect(std::move(s));
}

nlohmann::json series_to_json(const FormalSeries& f) {
    auto arr = nlohmann::json::array();
    for (const auto& [order, sum] : f.orders)
        arr.push_back({{"order", order}, {"terms", sum_to_json(sum)}});
    return arr;
}

FormalSeries series_from_json(const nlohmann::json& j) {
    FormalSeries f;
    for (const auto& e : j) f.orders[e.at("order").get<int>()] = sum_from_json(e.at("terms"));
    return f;
}

}  // namespace phi3
