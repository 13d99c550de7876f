#include "phi3/contraction.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace phi3 {

int ContractedTerm::total_legs() const { return std::accumulate(legs.begin(), legs.end(), 0); }

namespace {

std::pair<int, int> norm_pair(int a, int b) { return a <= b ? std::make_pair(a, b) : std::make_pair(b, a); }

// Superficial divergence degree of a Q^m P^l multi-edge between two distinct
// vertices: each covariance line scales like d-2, each propagator like d,
// against one integrated vertex of parabolic codimension d+2.
int rho_pair(int m, int l, int d) { return m * (d - 2) + l * d - (d + 2); }

std::string pair_symbol_name(int m, int l) {
    if (m == 2 && l == 1) return "C2";
    if (m == 2 && l == 0) return "Qhat2";
    return "Q" + std::to_string(m) + "P" + std::to_string(l);
}

bool is_symbol_name(const std::string& s) {
    if (s == "C" || s == "C2" || s == "Qhat2") return true;
    return s.size() > 1 && s[0] == 'Q' && s.find('P') != std::string::npos;
}

// Inverse of pair_symbol_name.
std::pair<int, int> decode_symbol(const std::string& s) {
    if (s == "C2") return {2, 1};
    if (s == "Qhat2") return {2, 0};
    size_t p = s.find('P');
    return {std::stoi(s.substr(1, p - 1)), std::stoi(s.substr(p + 1))};
}

// Replaces divergent loop subgraphs (for the configured dimension) by
// renormalization symbols: Q-self-loops by the tadpole constant C, divergent
// Q^m P^l multi-edges by pair symbols.
void normalize_divergences(ContractedTerm& t, const ContractionContext& ctx) {
    const int d = ctx.d;
    if (d - 2 >= 0) {
        std::vector<std::pair<int, int>> kept;
        for (auto [u, v] : t.q_edges) {
            if (u == v)
                t.smooth[u].push_back("C");
            else
                kept.emplace_back(u, v);
        }
        t.q_edges = std::move(kept);
    }
    // combined q/p multiplicities per unordered pair, folding in previously
    // replaced multi-edges so repeated products reach the same normal form
    std::map<std::pair<int, int>, std::pair<int, int>> mult;  // pair -> (q, p)
    std::map<std::pair<int, int>, std::pair<int, int>> orient; // pair -> directed rep
    for (auto [u, v] : t.q_edges)
        if (u != v) mult[norm_pair(u, v)].first++;
    for (auto [u, v] : t.p_edges) {
        mult[norm_pair(u, v)].second++;
        orient[norm_pair(u, v)] = {u, v};
    }
    std::map<std::pair<int, int>, std::pair<int, int>> sym_mult;
    for (const auto& e : t.symbol_edges) {
        auto [m, l] = decode_symbol(e.name);
        auto pr = norm_pair(e.u, e.v);
        mult[pr].first += m;
        mult[pr].second += l;
        sym_mult[pr].first += m;
        sym_mult[pr].second += l;
        if (l > 0) orient[pr] = {e.u, e.v};
    }
    t.symbol_edges.clear();
    for (const auto& [pr, ml] : mult) {
        auto [m, l] = ml;
        bool divergent = m >= 1 && m + l >= 2 && rho_pair(m, l, d) >= 0;
        auto [pu, pv] = orient.count(pr) ? orient[pr] : pr;
        if (divergent) {
            std::erase_if(t.q_edges, [&](auto e) { return norm_pair(e.first, e.second) == pr; });
            std::erase_if(t.p_edges, [&](auto e) { return norm_pair(e.first, e.second) == pr; });
            t.symbol_edges.push_back({pair_symbol_name(m, l), pu, pv});
        } else if (auto it = sym_mult.find(pr); it != sym_mult.end()) {
            // previously replaced multi-edge no longer divergent: restore it
            for (int i = 0; i < it->second.first; ++i) t.q_edges.push_back(pr);
            for (int i = 0; i < it->second.second; ++i) t.p_edges.emplace_back(pu, pv);
        }
    }
    for (auto& s : t.smooth) std::sort(s.begin(), s.end());
    for (auto& [u, v] : t.q_edges) std::tie(u, v) = norm_pair(u, v);
}

std::string encode(const ContractedTerm& t, const std::vector<int>& perm) {
    std::ostringstream os;
    os << "R" << t.n_roots << ";V" << t.n_vertices() << ";";
    std::vector<int> inv(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
    for (int v = 0; v < t.n_vertices(); ++v) {
        int o = inv[v];
        os << "v" << t.legs[o] << "(";
        auto labels = t.smooth[o];
        std::sort(labels.begin(), labels.end());
        for (const auto& s : labels) os << s << ",";
        os << ");";
    }
    auto emit = [&os](const char* tag, std::vector<std::string> items) {
        std::sort(items.begin(), items.end());
        for (const auto& it : items) os << tag << it << ";";
    };
    std::vector<std::string> ps, qs, ss;
    for (auto [u, v] : t.p_edges)
        ps.push_back(std::to_string(perm[u]) + ">" + std::to_string(perm[v]));
    for (auto [u, v] : t.q_edges) {
        auto [a, b] = norm_pair(perm[u], perm[v]);
        qs.push_back(std::to_string(a) + "~" + std::to_string(b));
    }
    for (const auto& e : t.symbol_edges)
        ss.push_back(e.name + ":" + std::to_string(perm[e.u]) + ">" + std::to_string(perm[e.v]));
    emit("P", ps);
    emit("Q", qs);
    emit("S", ss);
    return os.str();
}

}  // namespace

std::string canonical_key(const ContractedTerm& t) {
    const int n = t.n_vertices();
    const int r = t.n_roots;
    // initial signatures, refined by neighbor multisets
    std::vector<std::string> sig(n);
    for (int v = 0; v < n; ++v) {
        sig[v] = (v < r ? "root" + std::to_string(v) : "i") + "|" + std::to_string(t.legs[v]) + "|";
        auto labels = t.smooth[v];
        std::sort(labels.begin(), labels.end());
        for (const auto& s : labels) sig[v] += s + ",";
    }
    for (int round = 0; round < 2; ++round) {
        std::vector<std::vector<std::string>> nb(n);
        for (auto [u, v] : t.p_edges) {
            nb[u].push_back("p>" + sig[v]);
            nb[v].push_back("p<" + sig[u]);
        }
        for (auto [u, v] : t.q_edges) {
            nb[u].push_back("q" + sig[v]);
            nb[v].push_back("q" + sig[u]);
        }
        for (const auto& e : t.symbol_edges) {
            nb[e.u].push_back("s>" + e.name + sig[e.v]);
            nb[e.v].push_back("s<" + e.name + sig[e.u]);
        }
        for (int v = 0; v < n; ++v) {
            std::sort(nb[v].begin(), nb[v].end());
            std::string s = sig[v] + "{";
            for (const auto& x : nb[v]) s += x + ";";
            sig[v] = std::move(s) + "}";
        }
    }
    // group internal vertices into classes of equal signature
    std::map<std::string, std::vector<int>> classes;
    for (int v = r; v < n; ++v) classes[sig[v]].push_back(v);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::string best;
    long long count = 1;
    for (const auto& [s, vs] : classes) {
        for (size_t i = 2; i <= vs.size(); ++i) count *= static_cast<long long>(i);
        if (count > 2'000'000) throw std::runtime_error("contracted term too symmetric to canonicalize");
    }
    // assign target labels r..n-1 in class order, permuting within classes
    std::function<void(std::map<std::string, std::vector<int>>::iterator, int)> rec =
        [&](auto it, int next) {
            if (it == classes.end()) {
                std::string e = encode(t, perm);
                if (best.empty() || e < best) best = std::move(e);
                return;
            }
            std::vector<int> vs = it->second;
            std::sort(vs.begin(), vs.end());
            auto nx = std::next(it);
            do {
                for (size_t i = 0; i < vs.size(); ++i) perm[vs[i]] = next + static_cast<int>(i);
                rec(nx, next + static_cast<int>(vs.size()));
            } while (std::next_permutation(vs.begin(), vs.end()));
        };
    rec(classes.begin(), r);
    return best;
}

CSum collect(CSum raw) {
    std::map<std::string, std::pair<Rational, ContractedTerm>> acc;
    for (auto& [c, t] : raw) {
        std::string k = canonical_key(t);
        auto it = acc.find(k);
        if (it == acc.end())
            acc.emplace(std::move(k), std::make_pair(c, std::move(t)));
        else
            it->second.first += c;
    }
    CSum out;
    for (auto& [k, ct] : acc)
        if (ct.first != 0) out.emplace_back(std::move(ct.first), std::move(ct.second));
    return out;
}

bool csum_equal(const CSum& a, const CSum& b) {
    auto keyed = [](const CSum& s) {
        std::map<std::string, Rational> m;
        for (const auto& [c, t] : s) m[canonical_key(t)] += c;
        std::erase_if(m, [](const auto& p) { return p.second == 0; });
        return m;
    };
    return keyed(a) == keyed(b);
}

CSum csum_add(const CSum& a, const CSum& b) {
    CSum r = a;
    r.insert(r.end(), b.begin(), b.end());
    return collect(std::move(r));
}

CSum csum_scale(const Rational& c, CSum s) {
    if (c == 0) return {};
    for (auto& [x, t] : s) x *= c;
    return s;
}

namespace {

void add_vertex(ContractedTerm& t) {
    t.legs.push_back(0);
    t.smooth.emplace_back();
}

void lift_into(const Term& t, ContractedTerm& g, int at) {
    switch (t.kind) {
        case NodeKind::Phi: g.legs[at]++; break;
        case NodeKind::One: break;
        case NodeKind::Smooth: g.smooth[at].push_back(t.label); break;
        case NodeKind::Prod:
            for (const Term& c : t.children) lift_into(c, g, at);
            break;
        case NodeKind::Integ: {
            add_vertex(g);
            int w = g.n_vertices() - 1;
            g.p_edges.emplace_back(at, w);
            lift_into(t.children[0], g, w);
            break;
        }
    }
}

// Appends src (single root) to dst, identifying src's root with root_target.
// Returns the vertex map applied to src.
std::vector<int> append_graph(ContractedTerm& dst, const ContractedTerm& src, int root_target) {
    std::vector<int> map(src.n_vertices());
    map[0] = root_target;
    for (int v = 1; v < src.n_vertices(); ++v) {
        add_vertex(dst);
        map[v] = dst.n_vertices() - 1;
    }
    for (int v = 0; v < src.n_vertices(); ++v) {
        dst.legs[map[v]] += src.legs[v];
        dst.smooth[map[v]].insert(dst.smooth[map[v]].end(), src.smooth[v].begin(),
                                  src.smooth[v].end());
    }
    for (auto [u, v] : src.p_edges) dst.p_edges.emplace_back(map[u], map[v]);
    for (auto [u, v] : src.q_edges) dst.q_edges.emplace_back(map[u], map[v]);
    for (const auto& e : src.symbol_edges) dst.symbol_edges.push_back({e.name, map[e.u], map[e.v]});
    return map;
}

// Leg slots of a contracted term: (vertex, group) with one entry per leg.
struct Slot {
    int vertex;
    int group;
};

std::vector<Slot> slots_of(const ContractedTerm& t, int group) {
    std::vector<Slot> s;
    for (int v = 0; v < t.n_vertices(); ++v)
        for (int i = 0; i < t.legs[v]; ++i) s.push_back({v, group});
    return s;
}

// Enumerates all sets of disjoint slot pairs (each slot used at most once);
// pairs must satisfy allow(group_a, group_b).
void enumerate_matchings(const std::vector<Slot>& slots,
                         const std::function<bool(int, int)>& allow,
                         const std::function<void(const std::vector<std::pair<int, int>>&)>& emit) {
    std::vector<char> used(slots.size(), 0);
    std::vector<std::pair<int, int>> pairs;
    std::function<void(size_t)> rec = [&](size_t i) {
        while (i < slots.size() && used[i]) ++i;
        if (i == slots.size()) {
            emit(pairs);
            return;
        }
        used[i] = 1;
        rec(i + 1);  // slot i stays an uncontracted leg
        for (size_t j = i + 1; j < slots.size(); ++j) {
            if (used[j] || !allow(slots[i].group, slots[j].group)) continue;
            used[j] = 1;
            pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
            rec(i + 1);
            pairs.pop_back();
            used[j] = 0;
        }
        used[i] = 0;
    };
    rec(0);
}

CSum contract_all(const ContractedTerm& base, const Rational& coeff,
                  const std::vector<Slot>& slots, const std::function<bool(int, int)>& allow,
                  const ContractionContext& ctx) {
    CSum out;
    enumerate_matchings(slots, allow, [&](const std::vector<std::pair<int, int>>& pairs) {
        ContractedTerm t = base;
        for (auto [i, j] : pairs) {
            t.legs[slots[i].vertex]--;
            t.legs[slots[j].vertex]--;
            t.q_edges.push_back(norm_pair(slots[i].vertex, slots[j].vertex));
        }
        normalize_divergences(t, ctx);
        out.emplace_back(coeff, std::move(t));
    });
    return out;
}

}  // namespace

ContractedTerm lift(const Term& t) {
    ContractedTerm g;
    g.n_roots = 1;
    add_vertex(g);
    lift_into(canonicalize(t), g, 0);
    return g;
}

CSum gamma_cdotQ(const Term& t, const ContractionContext& ctx) {
    ContractedTerm base = lift(t);
    auto slots = slots_of(base, 0);
    return collect(contract_all(base, Rational(1), slots, [](int, int) { return true; }, ctx));
}

CSum gamma_cdotQ(const TermSum& s, const ContractionContext& ctx) {
    CSum out;
    for (const auto& [c, t] : s) {
        CSum g = csum_scale(c, gamma_cdotQ(t, ctx));
        out.insert(out.end(), g.begin(), g.end());
    }
    return collect(std::move(out));
}

CSum cdotQ_product(const CSum& a, const CSum& b, const ContractionContext& ctx) {
    CSum out;
    for (const auto& [ca, ta] : a)
        for (const auto& [cb, tb] : b) {
            if (ta.n_roots != 1 || tb.n_roots != 1)
                throw std::invalid_argument("deformed product needs single-root factors");
            ContractedTerm merged = ta;
            ContractedTerm tb2 = tb;
            auto slots = slots_of(ta, 0);
            auto map = append_graph(merged, tb2, 0);
            for (int v = 0; v < tb2.n_vertices(); ++v)
                for (int i = 0; i < tb2.legs[v]; ++i) slots.push_back({map[v], 1});
            CSum part = contract_all(merged, ca * cb, slots,
                                     [](int g1, int g2) { return g1 != g2; }, ctx);
            out.insert(out.end(), part.begin(), part.end());
        }
    return collect(std::move(out));
}

CSum pointwise_product(const CSum& a, const CSum& b) {
    CSum out;
    for (const auto& [ca, ta] : a)
        for (const auto& [cb, tb] : b) {
            if (ta.n_roots != 1 || tb.n_roots != 1)
                throw std::invalid_argument("pointwise product needs single-root factors");
            ContractedTerm merged = ta;
            append_graph(merged, tb, 0);
            out.emplace_back(ca * cb, std::move(merged));
        }
    return collect(std::move(out));
}

CSum bullet_cross(const std::vector<CSum>& factors, const ContractionContext& ctx) {
    if (factors.empty()) throw std::invalid_argument("empty tensor word");
    // iterate over the choice of one summand per factor
    CSum out;
    std::vector<size_t> idx(factors.size(), 0);
    for (const auto& f : factors)
        if (f.empty()) return {};
    while (true) {
        ContractedTerm merged;
        merged.n_roots = static_cast<int>(factors.size());
        for (size_t i = 0; i < factors.size(); ++i) add_vertex(merged);
        Rational coeff(1);
        std::vector<Slot> slots;
        for (size_t i = 0; i < factors.size(); ++i) {
            const auto& [c, t] = factors[i][idx[i]];
            if (t.n_roots != 1)
                throw std::invalid_argument("tensor factors must be single-root");
            coeff *= c;
            auto map = append_graph(merged, t, static_cast<int>(i));
            for (int v = 0; v < t.n_vertices(); ++v)
                for (int k = 0; k < t.legs[v]; ++k) slots.push_back({map[v], static_cast<int>(i)});
        }
        CSum part = contract_all(merged, coeff, slots,
                                 [](int g1, int g2) { return g1 != g2; }, ctx);
        out.insert(out.end(), part.begin(), part.end());
        size_t i = 0;
        while (i < factors.size() && ++idx[i] == factors[i].size()) idx[i++] = 0;
        if (i == factors.size()) break;
    }
    return collect(std::move(out));
}

CSum gamma_bulletQ(const TensorWord& w, const ContractionContext& ctx) {
    std::vector<CSum> lifted;
    for (const Term& t : w.factors) lifted.push_back({{Rational(1), lift(t)}});
    return bullet_cross(lifted, ctx);
}

CSum evaluate_at_zero(const CSum& s) {
    CSum out;
    for (const auto& [c, t] : s)
        if (t.total_legs() == 0) out.emplace_back(c, t);
    return collect(std::move(out));
}

CSum swap_roots(const CSum& s) {
    CSum out;
    for (auto [c, t] : s) {
        if (t.n_roots != 2) throw std::invalid_argument("swap_roots needs 2-root terms");
        std::swap(t.legs[0], t.legs[1]);
        std::swap(t.smooth[0], t.smooth[1]);
        auto swap01 = [](int v) { return v == 0 ? 1 : (v == 1 ? 0 : v); };
        for (auto& [u, v] : t.p_edges) { u = swap01(u); v = swap01(v); }
        for (auto& [u, v] : t.q_edges) { u = swap01(u); v = swap01(v); }
        for (auto& e : t.symbol_edges) { e.u = swap01(e.u); e.v = swap01(e.v); }
        out.emplace_back(c, std::move(t));
    }
    return collect(std::move(out));
}

std::map<int, CSum> two_point_correlation(int K, const ContractionContext& ctx) {
    FormalSeries f = expand_solution(K);
    std::vector<CSum> gam(K + 1);
    for (int j = 0; j <= K; ++j) gam[j] = gamma_cdotQ(f.orders[j], ctx);
    std::map<int, CSum> out;
    for (int k = 0; k <= K; ++k) {
        CSum acc;
        for (int j = 0; j <= k; ++j) {
            CSum part = bullet_cross({gam[j], gam[k - j]}, ctx);
            acc.insert(acc.end(), part.begin(), part.end());
        }
        out[k] = collect(std::move(acc));
    }
    return out;
}

namespace {

// Removes an outermost propagator edge at the root (the root must carry
// nothing but a single outgoing P-edge).
CSum strip_integ(const CSum& s) {
    CSum out;
    for (const auto& [c, t] : s) {
        int child = -1, outgoing = 0;
        for (auto [u, v] : t.p_edges)
            if (u == 0) { child = v; ++outgoing; }
        bool bare = t.legs[0] == 0 && t.smooth[0].empty() && outgoing == 1;
        for (auto [u, v] : t.q_edges)
            if (u == 0 || v == 0) bare = false;
        for (const auto& e : t.symbol_edges)
            if (e.u == 0 || e.v == 0) bare = false;
        for (auto [u, v] : t.p_edges)
            if (v == 0) bare = false;
        if (!bare) throw std::invalid_argument("term is not an outer propagator convolution");
        std::vector<int> map(t.n_vertices(), -1);
        map[child] = 0;
        int next = 1;
        for (int v = 1; v < t.n_vertices(); ++v)
            if (v != child) map[v] = next++;
        ContractedTerm r;
        r.n_roots = 1;
        for (int v = 0; v < t.n_vertices() - 1; ++v) add_vertex(r);
        for (int v = 1; v < t.n_vertices(); ++v) {
            r.legs[map[v]] = t.legs[v];
            r.smooth[map[v]] = t.smooth[v];
        }
        for (auto [u, v] : t.p_edges)
            if (u != 0) r.p_edges.emplace_back(map[u], map[v]);
        for (auto [u, v] : t.q_edges) r.q_edges.emplace_back(map[u], map[v]);
        for (const auto& e : t.symbol_edges) r.symbol_edges.push_back({e.name, map[e.u], map[e.v]});
        out.emplace_back(c, std::move(r));
    }
    return collect(std::move(out));
}

// Operand slot of a counterterm summand (its action on Phi): the root when
// it carries a leg (multiplication operator with polynomial coefficient),
// otherwise the unique single-legged vertex (nonlocal kernel).  The remaining
// legs must be even: M_n(phi) has vanishing odd functional derivatives at 0.
int operand_vertex(const ContractedTerm& t) {
    int slot = -1;
    if (t.legs[0] >= 1) {
        slot = 0;
    } else {
        for (int v = 1; v < t.n_vertices(); ++v)
            if (t.legs[v] == 1) {
                if (slot >= 0) throw std::invalid_argument("ambiguous counterterm operand");
                slot = v;
            }
    }
    if (slot < 0 || (t.total_legs() - 1) % 2 != 0)
        throw std::invalid_argument("counterterm outside the multiplication ansatz");
    return slot;
}

// Applies a counterterm operator, given through its action on Phi, to a
// contracted sum (merging the argument's root into the operand slot).
CSum apply_operator(const CSum& m_phi, const CSum& g) {
    CSum out;
    for (const auto& [cm, tm] : m_phi) {
        int slot = operand_vertex(tm);
        for (const auto& [cg, tg] : g) {
            ContractedTerm merged = tm;
            merged.legs[slot] -= 1;
            append_graph(merged, tg, slot);
            out.emplace_back(cm * cg, std::move(merged));
        }
    }
    return collect(std::move(out));
}

}  // namespace

RenormalizedEquation renormalized_equation(int J, const ContractionContext& ctx) {
    if (J < 1) throw std::invalid_argument("need at least one order");
    FormalSeries f = expand_solution(J);
    std::vector<CSum> gam(J + 1);
    for (int j = 0; j <= J; ++j) gam[j] = gamma_cdotQ(f.orders[j], ctx);
    RenormalizedEquation eq;
    for (int n = 1; n <= J; ++n) {
        // With the counterterm entering as ... - P-conv(M Psi):
        // M_n Phi = -strip(Gamma(F_n)) - sum_{j1+j2+j3=n-1} prod Gamma(F_ji)
        //           - sum_{k<n} M_k Gamma(F_{n-k})   (pointwise products)
        CSum acc = csum_scale(Rational(-1), strip_integ(gam[n]));
        for (int j1 = 0; j1 <= n - 1; ++j1)
            for (int j2 = 0; j1 + j2 <= n - 1; ++j2) {
                int j3 = n - 1 - j1 - j2;
                CSum p = pointwise_product(pointwise_product(gam[j1], gam[j2]), gam[j3]);
                acc = csum_add(acc, csum_scale(Rational(-1), p));
            }
        for (int k = 1; k <= n - 1; ++k)
            acc = csum_add(acc, csum_scale(Rational(-1), apply_operator(eq.M[k], gam[n - k])));
        for (const auto& [c, t] : acc) {
            try {
                operand_vertex(t);
            } catch (const std::invalid_argument&) {
                throw std::runtime_error(
                    "renormalized equation: residual not a counterterm operator at order " +
                    std::to_string(n));
            }
        }
        eq.M[n] = std::move(acc);
    }
    return eq;
}

CSum apply_renorm_shift(const CSum& s, const std::map<std::string, SmoothPoly>& shifts) {
    for (const auto& [name, poly] : shifts) {
        (void)poly;
        bool known = is_symbol_name(name);
        if (!known)
            for (const auto& [c, t] : s)
                for (const auto& labels : t.smooth)
                    for (const auto& l : labels)
                        if (l == name) known = true;
        if (!known) throw std::invalid_argument("unknown symbol name: " + name);
    }
    CSum out;
    for (const auto& [c0, t0] : s) {
        for (const auto& e : t0.symbol_edges)
            if (shifts.count(e.name))
                throw std::invalid_argument("cannot shift a bilocal symbol: " + e.name);
        // collect shifted occurrences, strip them from the term
        ContractedTerm base = t0;
        std::vector<int> occ_vertex;
        std::vector<const SmoothPoly*> occ_poly;
        for (int v = 0; v < base.n_vertices(); ++v) {
            std::vector<std::string> kept;
            for (const auto& l : base.smooth[v]) {
                auto it = shifts.find(l);
                if (it == shifts.end()) {
                    kept.push_back(l);
                } else {
                    occ_vertex.push_back(v);
                    occ_poly.push_back(&it->second);
                }
            }
            base.smooth[v] = std::move(kept);
        }
        // expand the product over replacement choices
        std::vector<std::pair<Rational, ContractedTerm>> partial{{c0, base}};
        for (size_t i = 0; i < occ_vertex.size(); ++i) {
            std::vector<std::pair<Rational, ContractedTerm>> next;
            for (const auto& [c, t] : partial)
                for (const auto& [cm, mono] : *occ_poly[i]) {
                    ContractedTerm t2 = t;
                    t2.smooth[occ_vertex[i]].insert(t2.smooth[occ_vertex[i]].end(), mono.begin(),
                                                    mono.end());
                    next.emplace_back(c * cm, std::move(t2));
                }
            partial = std::move(next);
        }
        out.insert(out.end(), partial.begin(), partial.end());
    }
    return collect(std::move(out));
}

std::map<int, CSum> apply_renorm_shift(const std::map<int, CSum>& series,
                                       const std::map<std::string, SmoothPoly>& shifts) {
    std::map<int, CSum> out;
    for (const auto& [k, s] : series) out[k] = apply_renorm_shift(s, shifts);
    return out;
}

std::string to_string(const ContractedTerm& t) {
    std::ostringstream os;
    for (int v = 0; v < t.n_vertices(); ++v) {
        if (v) os << " ";
        os << (v < t.n_roots ? "x" : "y") << v << "[";
        bool first = true;
        if (t.legs[v]) {
            os << "Phi";
            if (t.legs[v] > 1) os << "^" << t.legs[v];
            first = false;
        }
        for (const auto& s : t.smooth[v]) {
            if (!first) os << " ";
            os << s;
            first = false;
        }
        if (first) os << "1";
        os << "]";
    }
    for (auto [u, v] : t.p_edges) os << " P(" << u << "->" << v << ")";
    for (auto [u, v] : t.q_edges) os << " Q(" << u << "," << v << ")";
    for (const auto& e : t.symbol_edges) os << " " << e.name << "(" << e.u << "->" << e.v << ")";
    return os.str();
}

std::string to_string(const CSum& s) {
    if (s.empty()) return "0";
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "\n";
        out += s[i].first.str() + " * { " + to_string(s[i].second) + " }";
    }
    return out;
}

nlohmann::json cterm_to_json(const ContractedTerm& t) {
    nlohmann::json j;
    j["n_roots"] = t.n_roots;
    j["legs"] = t.legs;
    j["smooth"] = t.smooth;
    auto edges = [](const std::vector<std::pair<int, int>>& es) {
        auto arr = nlohmann::json::array();
        for (auto [u, v] : es) arr.push_back({u, v});
        return arr;
    };
    j["p_edges"] = edges(t.p_edges);
    j["q_edges"] = edges(t.q_edges);
    auto syms = nlohmann::json::array();
    for (const auto& e : t.symbol_edges)
        syms.push_back({{"name", e.name}, {"u", e.u}, {"v", e.v}});
    j["symbols"] = syms;
    return j;
}

nlohmann::json csum_to_json(const CSum& s) {
    auto arr = nlohmann::json::array();
    for (const auto& [c, t] : s)
        arr.push_back({{"coeff", rational_to_json(c)}, {"graph", cterm_to_json(t)}});
    return arr;
}

std::string csum_to_dot(const CSum& s, const std::string& name) {
    std::ostringstream os;
    os << "digraph " << name << " {\n";
    int tid = 0;
    for (const auto& [c, t] : s) {
        os << "  subgraph cluster_" << tid << " {\n";
        os << "    label=\"" << c.str() << "\";\n";
        for (int v = 0; v < t.n_vertices(); ++v) {
            os << "    t" << tid << "v" << v << " [label=\"";
            if (v < t.n_roots) os << "x" << v;
            if (t.legs[v]) os << " Phi^" << t.legs[v];
            for (const auto& l : t.smooth[v]) os << " " << l;
            os << "\"" << (v < t.n_roots ? ",shape=box" : "") << "];\n";
        }
        for (auto [u, v] : t.p_edges)
            os << "    t" << tid << "v" << u << " -> t" << tid << "v" << v << ";\n";
        for (auto [u, v] : t.q_edges)
            os << "    t" << tid << "v" << u << " -> t" << tid << "v" << v
               << " [dir=none,style=dashed,label=\"Q\"];\n";
        for (const auto& e : t.symbol_edges)
            os << "    t" << tid << "v" << e.u << " -> t" << tid << "v" << e.v
               << " [style=dotted,label=\"" << e.name << "\"];\n";
        os << "  }\n";
        ++tid;
    }
    os << "}\n";
    return os.str();
}

}  // namespace phi3
