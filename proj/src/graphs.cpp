#include "phi3/graphs.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "phi3/scaling.hpp"

namespace phi3 {

std::vector<int> GraphRecord::valencies() const {
    std::vector<int> val(n, 0);
    for (auto [u, v] : edges) {
        val.at(u) += 1;
        val.at(v) += 1;
    }
    return val;
}

namespace {

using MultMatrix = std::vector<std::vector<int>>;

MultMatrix multiplicity_matrix(const GraphRecord& g) {
    MultMatrix m(g.n, std::vector<int>(g.n, 0));
    for (auto [u, v] : g.edges) {
        if (u == v) throw std::invalid_argument("self-loops are not admissible");
        m[u][v] += 1;
        m[v][u] += 1;
    }
    return m;
}

// Iterated color refinement; final colors are isomorphism-invariant.
std::vector<int> refine_colors(const MultMatrix& m) {
    const int n = static_cast<int>(m.size());
    std::vector<int> color(n, 0);
    for (int round = 0; round < n; ++round) {
        std::vector<std::string> sig(n);
        for (int v = 0; v < n; ++v) {
            std::vector<std::pair<int, int>> nb;  // (neighbor color, multiplicity)
            for (int u = 0; u < n; ++u)
                if (m[v][u] > 0) nb.emplace_back(color[u], m[v][u]);
            std::sort(nb.begin(), nb.end());
            std::ostringstream os;
            os << color[v] << ':';
            for (auto [c, k] : nb) os << c << 'x' << k << ',';
            sig[v] = os.str();
        }
        std::vector<std::string> sorted = sig;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<int> next(n);
        for (int v = 0; v < n; ++v)
            next[v] = static_cast<int>(
                std::lower_bound(sorted.begin(), sorted.end(), sig[v]) - sorted.begin());
        if (next == color) break;
        color = next;
    }
    return color;
}

struct CanonSearch {
    const MultMatrix& m;
    int n;
    std::vector<int> class_of_pos;         // color required at each position
    std::vector<std::vector<int>> members; // vertices per color
    std::vector<char> used;
    std::vector<int> perm;
    std::vector<int> cur, best;
    bool have = false;

    explicit CanonSearch(const MultMatrix& mm, const std::vector<int>& color)
        : m(mm), n(static_cast<int>(mm.size())), used(n, 0) {
        int ncolors = color.empty() ? 0 : *std::max_element(color.begin(), color.end()) + 1;
        members.resize(ncolors);
        for (int v = 0; v < n; ++v) members[color[v]].push_back(v);
        for (int c = 0; c < ncolors; ++c)
            for (size_t k = 0; k < members[c].size(); ++k) class_of_pos.push_back(c);
    }

    void dfs(int i, bool prefix_equal) {
        if (i == n) {
            if (!have || cur < best) {
                best = cur;
                have = true;
            }
            return;
        }
        const size_t offset = cur.size();
        for (int v : members[class_of_pos[i]]) {
            if (used[v]) continue;
            bool eq = prefix_equal, greater = false;
            for (int j = 0; j < i; ++j) {
                int e = m[v][perm[j]];
                cur.push_back(e);
                if (have && eq) {
                    int b = best[offset + j];
                    if (e > b) { greater = true; break; }
                    if (e < b) eq = false;
                }
            }
            if (!greater) {
                used[v] = 1;
                perm.push_back(v);
                dfs(i + 1, have ? eq : true);
                perm.pop_back();
                used[v] = 0;
            }
            cur.resize(offset);
        }
    }
};

}  // namespace

std::string graph_key(const GraphRecord& g) {
    if (g.n == 0) return "0|";
    MultMatrix m = multiplicity_matrix(g);
    std::vector<int> color = refine_colors(m);
    CanonSearch search(m, color);
    search.dfs(0, true);
    std::ostringstream os;
    os << g.n << '|';
    // class sizes are part of the invariant
    for (const auto& cls : search.members) os << cls.size() << ',';
    os << '|';
    for (int e : search.best) os << e;
    return os.str();
}

bool graph_isomorphic_oracle(const GraphRecord& a, const GraphRecord& b) {
    if (a.n != b.n || a.edges.size() != b.edges.size()) return false;
    MultMatrix ma = multiplicity_matrix(a), mb = multiplicity_matrix(b);
    std::vector<int> va, vb;
    for (int i = 0; i < a.n; ++i) {
        va.push_back(std::accumulate(ma[i].begin(), ma[i].end(), 0));
        vb.push_back(std::accumulate(mb[i].begin(), mb[i].end(), 0));
    }
    {
        auto sa = va, sb = vb;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (sa != sb) return false;
    }
    std::vector<int> map_ab(a.n, -1);
    std::vector<char> used(b.n, 0);
    std::function<bool(int)> match = [&](int v) {
        if (v == a.n) return true;
        for (int w = 0; w < b.n; ++w) {
            if (used[w] || va[v] != vb[w]) continue;
            bool ok = true;
            for (int u = 0; u < v; ++u)
                if (ma[v][u] != mb[w][map_ab[u]]) { ok = false; break; }
            if (!ok) continue;
            map_ab[v] = w;
            used[w] = 1;
            if (match(v + 1)) return true;
            used[w] = 0;
            map_ab[v] = -1;
        }
        return false;
    };
    return match(0);
}

// --- enumeration -------------------------------------------------------

namespace {

// Canonical string encodings of rooted subtrees with exactly `internal`
// internal nodes (each with 1..3 children) and `leaves` leaves.  A leaf is
// "*", an internal node "("+children+")" with children sorted descending.
using TreeSet = std::vector<std::string>;

void gen_children(int slots, int internal, int leaves, const std::string& bound,
                  std::vector<std::string>& acc,
                  const std::function<const TreeSet&(int, int)>& pool,
                  const std::function<void(const std::vector<std::string>&)>& emit);

const TreeSet& subtrees(int internal, int leaves) {
    static std::map<std::pair<int, int>, TreeSet> memo;
    auto key = std::make_pair(internal, leaves);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    TreeSet out;
    if (internal == 0) {
        if (leaves == 1) out.push_back("*");
    } else if (leaves >= 1) {
        std::function<const TreeSet&(int, int)> pool = subtrees;
        for (int k = 1; k <= 3; ++k) {
            std::vector<std::string> acc;
            gen_children(k, internal - 1, leaves, "\x7f", acc, pool,
                         [&](const std::vector<std::string>& ch) {
                             std::string enc = "(";
                             for (const auto& c : ch) enc += c;
                             enc += ")";
                             out.push_back(enc);
                         });
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return memo.emplace(key, std::move(out)).first->second;
}

// Multisets of `slots` subtrees with the given internal/leaf totals, encoded
// non-increasingly (each child <= the previous one) to avoid duplicates.
void gen_children(int slots, int internal, int leaves, const std::string& bound,
                  std::vector<std::string>& acc,
                  const std::function<const TreeSet&(int, int)>& pool,
                  const std::function<void(const std::vector<std::string>&)>& emit) {
    if (slots == 0) {
        if (internal == 0 && leaves == 0) emit(acc);
        return;
    }
    for (int i = 0; i <= internal; ++i) {
        for (int l = 0; l <= leaves; ++l) {
            for (const auto& enc : pool(i, l)) {
                if (enc > bound) continue;
                acc.push_back(enc);
                gen_children(slots - 1, internal - i, leaves - l, enc, acc, pool, emit);
                acc.pop_back();
            }
        }
    }
}

struct ParsedTree {
    int n_internal = 0;
    std::vector<std::pair<int, int>> tree_edges;  // parent -> child (internal only)
    std::vector<int> leaf_parent;                 // per leaf, owning internal node
};

ParsedTree parse_tree(const std::string& enc) {
    ParsedTree t;
    size_t pos = 0;
    std::function<int()> rec = [&]() -> int {
        if (enc[pos] != '(') throw std::invalid_argument("bad tree encoding");
        ++pos;
        int id = t.n_internal++;
        while (enc[pos] != ')') {
            if (enc[pos] == '*') {
                t.leaf_parent.push_back(id);
                ++pos;
            } else {
                int child = rec();
                t.tree_edges.emplace_back(id, child);
            }
        }
        ++pos;
        return id;
    };
    rec();
    return t;
}

void for_each_matching(int m, std::vector<int>& partner,
                       const std::function<void(const std::vector<int>&)>& fn) {
    int first = -1;
    for (int i = 0; i < m; ++i)
        if (partner[i] < 0) { first = i; break; }
    if (first < 0) {
        fn(partner);
        return;
    }
    for (int j = first + 1; j < m; ++j) {
        if (partner[j] >= 0) continue;
        partner[first] = j;
        partner[j] = first;
        for_each_matching(m, partner, fn);
        partner[first] = partner[j] = -1;
    }
}

}  // namespace

std::vector<GraphRecord> enumerate_admissible(int n_max, long long cap) {
    if (n_max < 2) throw std::invalid_argument("need n_max >= 2");
    std::map<std::string, GraphRecord> dedup;
    long long generated = 0;
    std::function<const TreeSet&(int, int)> pool = subtrees;
    for (int internal = 1; internal < n_max; ++internal) {
        for (int pairs = 1; internal + pairs <= n_max; ++pairs) {
            int leaves = 2 * pairs;
            // root has 2 or 3 children so that its valency stays >= 2
            std::vector<std::string> roots;
            for (int k = 2; k <= 3; ++k) {
                std::vector<std::string> acc;
                gen_children(k, internal - 1, leaves, "\x7f", acc, pool,
                             [&](const std::vector<std::string>& ch) {
                                 std::string enc = "(";
                                 for (const auto& c : ch) enc += c;
                                 enc += ")";
                                 roots.push_back(enc);
                             });
            }
            std::sort(roots.begin(), roots.end());
            roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
            for (const auto& enc : roots) {
                ParsedTree t = parse_tree(enc);
                std::vector<int> partner(leaves, -1);
                for_each_matching(leaves, partner, [&](const std::vector<int>& match) {
                    if (++generated > cap)
                        throw std::runtime_error(
                            "admissible-graph enumeration exceeded the resource cap");
                    GraphRecord g;
                    g.n = t.n_internal + leaves / 2;
                    g.edges = t.tree_edges;
                    int collapse = t.n_internal;
                    std::ostringstream prov;
                    prov << enc << '|';
                    for (int i = 0; i < leaves; ++i) {
                        if (match[i] < i) continue;
                        g.edges.emplace_back(t.leaf_parent[i], collapse);
                        g.edges.emplace_back(t.leaf_parent[match[i]], collapse);
                        prov << i << '-' << match[i] << ' ';
                        ++collapse;
                    }
                    g.provenance = prov.str();
                    std::string key = graph_key(g);
                    dedup.emplace(std::move(key), std::move(g));
                });
            }
        }
    }
    std::vector<GraphRecord> out;
    out.reserve(dedup.size());
    for (auto& [key, g] : dedup) out.push_back(std::move(g));
    std::sort(out.begin(), out.end(), [](const GraphRecord& a, const GraphRecord& b) {
        if (a.n != b.n) return a.n < b.n;
        if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
        return graph_key(a) < graph_key(b);
    });
    return out;
}

DivergenceReport degree_of_divergence(const GraphRecord& g, int d) {
    DivergenceReport rep;
    rep.graph = g;
    rep.rho = g.L() * d - (g.n - 1) * (d + 2);
    rep.needs_renorm = rep.rho >= 0;
    if (rep.needs_renorm) {
        ScalingContext ctx{d, ScalingMode::Parabolic, DimConvention::Spatial};
        rep.ambiguity_dim = ambiguity_dimension(rep.rho, (g.n - 1) * (d + 2), ctx);
    }
    return rep;
}

bool verify_valency_lemmas(const GraphRecord& g) {
    auto val = g.valencies();
    int v2 = 0, v4 = 0;
    for (int v : val) {
        if (v < 2 || v > 4) return false;
        if (v == 2) ++v2;
        if (v == 4) ++v4;
    }
    if (v2 < (g.n + 2) / 3) return false;     // at least ceil(N/3)
    if (v4 > g.n / 2) return false;           // at most floor(N/2)
    return 12 * g.L() <= 19 * g.n;            // L <= 19N/12
}

std::pair<Rational, Rational> ratio_sequences(int n) {
    if (n < 0) throw std::invalid_argument("need n >= 0");
    using Int = boost::multiprecision::cpp_int;
    Int p2 = Int(1) << n;
    Int p3 = 1;
    for (int i = 0; i <= n; ++i) p3 *= 3;
    Rational r2(p2 + 1, 3 * p2 - 1);
    Rational r4(p3 - 1, 2 * p3 + 2);
    return {r2, r4};
}

FinitenessCertificate finiteness_certificate(int d) {
    if (d < 1) throw std::invalid_argument("need d >= 1");
    FinitenessCertificate cert;
    if (7 * d - 24 >= 0) {
        cert.subcritical = false;  // the bound N(7d/12-2)+d+2 never turns negative
        return cert;
    }
    cert.subcritical = true;
    // least N with N(7d-24)+12(d+2) < 0
    cert.n_threshold = static_cast<int>((12 * (d + 2) + (24 - 7 * d) - 1) / (24 - 7 * d));
    // For admissible graphs with I tree vertices and P collapse vertices,
    // L = I+2P-1 and N = I+P give rho = (d-2)P - 2I + 2, and the ternary
    // child budget forces P <= I; this caps the vertex count of any
    // divergent graph far below the threshold.
    int n_cap = 0;
    for (int i = 1; i <= cert.n_threshold; ++i)
        for (int p = 1; p <= i; ++p)
            if ((d - 2) * p - 2 * i + 2 >= 0) n_cap = std::max(n_cap, i + p);
    if (n_cap >= 2) {
        for (const auto& g : enumerate_admissible(std::min(n_cap, cert.n_threshold - 1))) {
            DivergenceReport rep = degree_of_divergence(g, d);
            if (rep.needs_renorm) cert.divergent.push_back(std::move(rep));
        }
    }
    return cert;
}

Term provenance_term(const std::string& provenance) {
    std::string enc = provenance.substr(0, provenance.find('|'));
    size_t pos = 0;
    std::function<Term()> rec = [&]() -> Term {
        if (enc.at(pos) == '*') {
            ++pos;
            return Term::phi();
        }
        if (enc.at(pos) != '(') throw std::invalid_argument("bad provenance encoding");
        ++pos;
        std::vector<Term> ch;
        while (enc.at(pos) != ')') ch.push_back(rec());
        ++pos;
        Term inner = ch.size() == 1 ? ch[0] : Term::prod(std::move(ch));
        return Term::integ(std::move(inner));
    };
    try {
        Term t = rec();
        if (pos != enc.size()) throw std::invalid_argument("bad provenance encoding");
        return canonicalize(t);
    } catch (const std::out_of_range&) {
        throw std::invalid_argument("bad provenance encoding");
    }
}

std::string graphs_to_csv(const std::vector<DivergenceReport>& reports) {
    std::ostringstream os;
    os << "n,l,val2,val3,val4,rho,needs_renorm,ambiguity_dim,key,provenance\n";
    for (const auto& rep : reports) {
        auto val = rep.graph.valencies();
        int v2 = 0, v3 = 0, v4 = 0;
        for (int v : val) {
            if (v == 2) ++v2;
            if (v == 3) ++v3;
            if (v == 4) ++v4;
        }
        os << rep.graph.n << ',' << rep.graph.L() << ',' << v2 << ',' << v3 << ',' << v4
           << ',' << rep.rho << ',' << (rep.needs_renorm ? 1 : 0) << ',' << rep.ambiguity_dim
           << ',' << '"' << graph_key(rep.graph) << '"' << ',' << '"' << rep.graph.provenance
           << '"' << '\n';
    }
    return os.str();
}

std::string graph_to_dot(const GraphRecord& g, const std::string& name) {
    std::ostringstream os;
    os << "graph " << name << " {\n";
    for (int v = 0; v < g.n; ++v) os << "  v" << v << ";\n";
    for (auto [u, v] : g.edges) os << "  v" << u << " -- v" << v << ";\n";
    os << "}\n";
    return os.str();
}

}  // namespace phi3
