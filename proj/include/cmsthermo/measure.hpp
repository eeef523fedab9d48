#pragma once

// Stationary Markov measures on truncations, their entropy and integrals,
// cylinder vectors and the cylinder-topology metric, plus the exact
// measure correspondences for inducing (Kac) and edge subdivision.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cmsthermo/graph.hpp"
#include "cmsthermo/numerics.hpp"
#include "cmsthermo/potential.hpp"

namespace cms {

inline constexpr double kStochasticTol = 1e-12;

// Order-m stationary Markov measure: states are admissible m-words, rows
// are sparse stochastic vectors, pi is the stationary vector.
class MarkovMeasure {
public:
    std::shared_ptr<const TruncatedGraph> graph;
    int order = 1;
    std::vector<Word> states;                               // lex sorted
    std::vector<std::vector<std::pair<int, double>>> rows;  // (state idx, prob)
    std::vector<double> pi;

    [[nodiscard]] int n_states() const { return static_cast<int>(states.size()); }

    [[nodiscard]] int state_index(const Word& w) const {
        auto it = std::lower_bound(states.begin(), states.end(), w);
        if (it == states.end() || *it != w) return -1;
        return static_cast<int>(it - states.begin());
    }

    [[nodiscard]] double transition(int u, int v) const {
        for (auto& [j, p] : rows[static_cast<std::size_t>(u)])
            if (j == v) return p;
        return 0.0;
    }

    void validate(double tol = kStochasticTol) const {
        if (states.empty()) throw std::invalid_argument("MarkovMeasure: empty state space");
        double pisum = 0.0;
        for (double p : pi) {
            if (p < -tol) throw std::invalid_argument("MarkovMeasure: negative stationary mass");
            pisum += p;
        }
        if (std::abs(pisum - 1.0) > tol)
            throw std::invalid_argument("MarkovMeasure: stationary vector does not sum to 1");
        std::vector<double> flow(states.size(), 0.0);
        for (std::size_t u = 0; u < states.size(); ++u) {
            double s = 0.0;
            for (auto& [v, p] : rows[u]) {
                if (p < -tol) throw std::invalid_argument("MarkovMeasure: negative transition");
                // Support must respect admissibility: target word overlaps
                // the source word and extends it along a graph edge.
                if (p > 0.0) {
                    const Word& wu = states[u];
                    const Word& wv = states[static_cast<std::size_t>(v)];
                    for (int t = 0; t + 1 < order; ++t)
                        if (wu[static_cast<std::size_t>(t) + 1] != wv[static_cast<std::size_t>(t)])
                            throw std::invalid_argument("MarkovMeasure: non-overlapping transition");
                    if (!graph->has_edge(wu.back(), wv.back()) && order == 1)
                        throw std::invalid_argument("MarkovMeasure: inadmissible transition");
                    if (order >= 2 && !graph->has_edge(wv[static_cast<std::size_t>(order) - 2], wv.back()))
                        throw std::invalid_argument("MarkovMeasure: inadmissible transition");
                }
                s += p;
                flow[static_cast<std::size_t>(v)] += pi[u] * p;
            }
            if (std::abs(s - 1.0) > tol)
                throw std::invalid_argument("MarkovMeasure: row not stochastic");
        }
        for (std::size_t v = 0; v < states.size(); ++v)
            if (std::abs(flow[v] - pi[v]) > tol)
                throw std::invalid_argument("MarkovMeasure: pi not stationary");
    }

    // Mass of the cylinder [w]. Marginal for |w| <= order, path product
    // beyond.
    [[nodiscard]] double cylinder_mass(const Word& w) const {
        const int k = static_cast<int>(w.size());
        if (k == 0) return 1.0;
        if (k <= order) {
            double m = 0.0;
            for (std::size_t u = 0; u < states.size(); ++u) {
                bool match = true;
                for (int t = 0; t < k; ++t)
                    if (states[u][static_cast<std::size_t>(t)] != w[static_cast<std::size_t>(t)]) {
                        match = false;
                        break;
                    }
                if (match) m += pi[u];
            }
            return m;
        }
        Word win(w.begin(), w.begin() + order);
        int u = state_index(win);
        if (u < 0) return 0.0;
        double m = pi[static_cast<std::size_t>(u)];
        for (int t = order; t < k && m > 0.0; ++t) {
            Word nxt(w.begin() + (t - order + 1), w.begin() + t + 1);
            const int v = state_index(nxt);
            if (v < 0) return 0.0;
            m *= transition(u, v);
            u = v;
        }
        return m;
    }
};

namespace detail {

inline std::vector<double> stationary_of(const std::vector<std::vector<std::pair<int, double>>>& rows,
                                         int n, int max_iter = 400000, double tol = 1e-15) {
    std::vector<double> x(static_cast<std::size_t>(n), 1.0 / n), y(static_cast<std::size_t>(n), 0.0);
    for (int it = 0; it < max_iter; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        for (int u = 0; u < n; ++u)
            for (auto& [v, p] : rows[static_cast<std::size_t>(u)])
                y[static_cast<std::size_t>(v)] += x[static_cast<std::size_t>(u)] * p;
        // Lazy step keeps periodic chains convergent.
        double diff = 0.0, sum = 0.0;
        for (int i = 0; i < n; ++i) {
            y[static_cast<std::size_t>(i)] = 0.5 * (y[static_cast<std::size_t>(i)] + x[static_cast<std::size_t>(i)]);
            diff = std::max(diff, std::abs(y[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]));
            sum += y[static_cast<std::size_t>(i)];
        }
        for (double& v : y) v /= sum;
        x.swap(y);
        if (diff < tol && it > 8) break;
    }
    return x;
}

}  // namespace detail

inline MarkovMeasure make_markov(std::shared_ptr<const TruncatedGraph> g, int order,
                                 std::vector<Word> states,
                                 std::vector<std::vector<std::pair<int, double>>> rows,
                                 std::vector<double> pi = {}) {
    MarkovMeasure m;
    m.graph = std::move(g);
    m.order = order;
    m.states = std::move(states);
    m.rows = std::move(rows);
    if (pi.empty()) pi = detail::stationary_of(m.rows, m.n_states());
    m.pi = std::move(pi);
    m.validate();
    return m;
}

// Bernoulli (iid) measure from per-symbol weights; requires every pair in
// the support to be admissible (true on full-shift truncations).
inline MarkovMeasure bernoulli(std::shared_ptr<const TruncatedGraph> g,
                               const std::vector<double>& weights) {
    const int n = g->size();
    if (static_cast<int>(weights.size()) != n)
        throw std::invalid_argument("bernoulli: weight size mismatch");
    double z = 0.0;
    for (double w : weights) z += w;
    std::vector<Word> states;
    states.reserve(static_cast<std::size_t>(n));
    for (Symbol s : g->vertices) states.push_back({s});
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j)
        if (weights[static_cast<std::size_t>(j)] > 0.0) row.emplace_back(j, weights[static_cast<std::size_t>(j)] / z);
    for (auto& [j, p] : row)
        for (auto& [k, q] : row)
            if (!g->edge_idx(j, k)) throw std::invalid_argument("bernoulli: inadmissible support pair");
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = row;
    for (auto& [j, p] : row) pi[static_cast<std::size_t>(j)] = p;
    return make_markov(std::move(g), 1, std::move(states), std::move(rows), std::move(pi));
}

// Periodic-orbit measure of a cycle, represented at the smallest order
// whose cyclic windows are pairwise distinct.
inline MarkovMeasure periodic_measure(std::shared_ptr<const TruncatedGraph> g, const Word& cycle) {
    const int n = static_cast<int>(cycle.size());
    if (n < 1) throw std::invalid_argument("periodic_measure: empty cycle");
    for (int k = 0; k < n; ++k)
        if (!g->has_edge(cycle[static_cast<std::size_t>(k)], cycle[static_cast<std::size_t>((k + 1) % n)]))
            throw std::invalid_argument("periodic_measure: cycle not admissible");
    int order = 1;
    std::vector<Word> windows;
    for (; order <= n; ++order) {
        windows.clear();
        std::set<Word> seen;
        bool distinct = true;
        for (int k = 0; k < n; ++k) {
            Word w;
            for (int t = 0; t < order; ++t) w.push_back(cycle[static_cast<std::size_t>((k + t) % n)]);
            if (!seen.insert(w).second) { distinct = false; break; }
            windows.push_back(std::move(w));
        }
        if (distinct) break;
    }
    std::vector<Word> states = windows;
    std::sort(states.begin(), states.end());
    std::vector<std::vector<std::pair<int, double>>> rows(states.size());
    for (int k = 0; k < n; ++k) {
        const Word& cur = windows[static_cast<std::size_t>(k)];
        const Word& nxt = windows[static_cast<std::size_t>((k + 1) % n)];
        const auto ui = std::lower_bound(states.begin(), states.end(), cur) - states.begin();
        const auto vi = std::lower_bound(states.begin(), states.end(), nxt) - states.begin();
        rows[static_cast<std::size_t>(ui)] = {{static_cast<int>(vi), 1.0}};
    }
    std::vector<double> pi(states.size(), 1.0 / n);
    MarkovMeasure m;
    m.graph = std::move(g);
    m.order = order;
    m.states = std::move(states);
    m.rows = std::move(rows);
    m.pi = std::move(pi);
    m.validate();
    return m;
}

// Seeded random order-1 chain supported on the core.
inline MarkovMeasure random_markov(std::shared_ptr<const TruncatedGraph> g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    std::vector<Word> states;
    std::vector<int> core_idx = g->core;
    for (int i : core_idx) states.push_back({g->vertices[static_cast<std::size_t>(i)]});
    const int n = static_cast<int>(core_idx.size());
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    std::vector<int> pos(static_cast<std::size_t>(g->size()), -1);
    for (int k = 0; k < n; ++k) pos[static_cast<std::size_t>(core_idx[static_cast<std::size_t>(k)])] = k;
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        std::vector<std::pair<int, double>> row;
        g->for_each_out(core_idx[static_cast<std::size_t>(k)], [&](int j) {
            if (pos[static_cast<std::size_t>(j)] < 0) return;
            const double w = unif(rng) * unif(rng);
            row.emplace_back(pos[static_cast<std::size_t>(j)], w);
            s += w;
        });
        for (auto& [j, w] : row) w /= s;
        rows[static_cast<std::size_t>(k)] = std::move(row);
    }
    return make_markov(std::move(g), 1, std::move(states), std::move(rows));
}

// h = -sum_u pi(u) sum_v P(u,v) log P(u,v), with 0 log 0 = 0.
inline double entropy(const MarkovMeasure& m) {
    double h = 0.0;
    for (std::size_t u = 0; u < m.states.size(); ++u)
        for (auto& [v, p] : m.rows[u])
            if (p > 0.0) h -= m.pi[u] * p * std::log(p);
    return std::max(h, 0.0);
}

// Exact integral of a locally constant potential; requires
// depth(phi) <= order(mu)+1 (lift the order first otherwise).
inline double integrate(const MarkovMeasure& m, const Potential& phi) {
    if (phi.depth > m.order + 1)
        throw std::invalid_argument("integrate: potential depth exceeds order+1; lift the measure");
    double s = 0.0;
    if (phi.depth <= m.order) {
        for (std::size_t u = 0; u < m.states.size(); ++u)
            if (m.pi[u] > 0.0) s += m.pi[u] * phi.eval(m.states[u]);
        return s;
    }
    Word w(static_cast<std::size_t>(m.order) + 1);
    for (std::size_t u = 0; u < m.states.size(); ++u) {
        if (m.pi[u] == 0.0) continue;
        std::copy(m.states[u].begin(), m.states[u].end(), w.begin());
        for (auto& [v, p] : m.rows[u]) {
            if (p == 0.0) continue;
            w.back() = m.states[static_cast<std::size_t>(v)].back();
            s += m.pi[u] * p * phi.eval(w);
        }
    }
    return s;
}

// Re-expresses the measure at a higher order m2 > order. States are the
// positive-mass admissible m2-words.
inline MarkovMeasure lift_order(const MarkovMeasure& m, int m2) {
    if (m2 < m.order) throw std::invalid_argument("lift_order: target below current order");
    if (m2 == m.order) return m;
    std::map<Word, double> mass;
    // Breadth-first extension of state words by chain transitions.
    std::vector<std::pair<Word, double>> frontier;
    for (std::size_t u = 0; u < m.states.size(); ++u)
        if (m.pi[u] > 0.0) frontier.emplace_back(m.states[u], m.pi[u]);
    for (int len = m.order; len < m2; ++len) {
        std::vector<std::pair<Word, double>> nxt;
        for (auto& [w, mw] : frontier) {
            Word win(w.end() - m.order, w.end());
            const int u = m.state_index(win);
            for (auto& [v, p] : m.rows[static_cast<std::size_t>(u)]) {
                if (p == 0.0) continue;
                Word ext = w;
                ext.push_back(m.states[static_cast<std::size_t>(v)].back());
                nxt.emplace_back(std::move(ext), mw * p);
            }
        }
        frontier = std::move(nxt);
    }
    for (auto& [w, mw] : frontier) mass[w] += mw;
    std::vector<Word> states;
    states.reserve(mass.size());
    for (auto& [w, _] : mass) states.push_back(w);
    std::vector<double> pi;
    pi.reserve(states.size());
    for (auto& w : states) pi.push_back(mass[w]);
    std::vector<std::vector<std::pair<int, double>>> rows(states.size());
    for (std::size_t u = 0; u < states.size(); ++u) {
        Word win(states[u].end() - m.order, states[u].end());
        const int bu = m.state_index(win);
        for (auto& [bv, p] : m.rows[static_cast<std::size_t>(bu)]) {
            if (p == 0.0) continue;
            Word ext(states[u].begin() + 1, states[u].end());
            ext.push_back(m.states[static_cast<std::size_t>(bv)].back());
            const auto it = std::lower_bound(states.begin(), states.end(), ext);
            if (it == states.end() || *it != ext) continue;
            rows[u].emplace_back(static_cast<int>(it - states.begin()), p);
        }
    }
    MarkovMeasure out;
    out.graph = m.graph;
    out.order = m2;
    out.states = std::move(states);
    out.rows = std::move(rows);
    out.pi = std::move(pi);
    out.validate(1e-10);
    return out;
}

// Convex combinations are stored as weighted ergodic mixtures, so entropy
// and integrals are exactly affine.
struct Mixture {
    std::vector<std::pair<double, MarkovMeasure>> parts;

    static Mixture pure(MarkovMeasure m) {
        Mixture x;
        x.parts.emplace_back(1.0, std::move(m));
        return x;
    }
    static Mixture combine(double lambda, const Mixture& a, const Mixture& b) {
        Mixture x;
        for (auto& [w, m] : a.parts)
            if (lambda * w > 0.0) x.parts.emplace_back(lambda * w, m);
        for (auto& [w, m] : b.parts)
            if ((1.0 - lambda) * w > 0.0) x.parts.emplace_back((1.0 - lambda) * w, m);
        return x;
    }
};

inline double entropy(const Mixture& x) {
    double h = 0.0;
    for (auto& [w, m] : x.parts) h += w * entropy(m);
    return h;
}

inline double integrate(const Mixture& x, const Potential& phi) {
    double s = 0.0;
    for (auto& [w, m] : x.parts) s += w * integrate(m, phi);
    return s;
}

inline double cylinder_mass(const Mixture& x, const Word& w) {
    double s = 0.0;
    for (auto& [wt, m] : x.parts) s += wt * m.cylinder_mass(w);
    return s;
}

// Mass on the high tail: mu( union_{s >= k} [s] ).
inline double tail_mass(const Mixture& x, Symbol k) {
    double s = 0.0;
    for (auto& [wt, m] : x.parts)
        for (std::size_t u = 0; u < m.states.size(); ++u)
            if (m.states[u][0] >= k) s += wt * m.pi[u];
    return s;
}

// Sub-probability cylinder vector at finite resolution.
struct CylinderVector {
    int depth = 0;
    std::map<Word, double> masses;
    double lambda = 0.0;

    static CylinderVector zero(int d) { return {d, {}, 0.0}; }

    [[nodiscard]] double mass(const Word& w) const {
        auto it = masses.find(w);
        return it == masses.end() ? 0.0 : it->second;
    }
};

inline CylinderVector cylinder_vector(const Mixture& x, int depth) {
    CylinderVector cv;
    cv.depth = depth;
    for (auto& [wt, m] : x.parts) {
        // Enumerate positive-mass words by extension, so large truncations
        // stay cheap.
        std::set<Word> seen;
        std::function<void(const Word&)> visit = [&](const Word& w) {
            if (static_cast<int>(w.size()) > depth) return;
            if (!seen.insert(w).second) return;
            const double mass = m.cylinder_mass(w);
            if (mass <= 0.0) return;
            cv.masses[w] += wt * mass;
            if (static_cast<int>(w.size()) == depth) return;
            for (Symbol b : m.graph->vertices) {
                if (!m.graph->has_edge(w.back(), b)) continue;
                Word ext = w;
                ext.push_back(b);
                visit(ext);
            }
        };
        for (std::size_t u = 0; u < m.states.size(); ++u) {
            if (m.pi[u] == 0.0) continue;
            visit(Word{m.states[u][0]});
        }
    }
    for (auto it = cv.masses.begin(); it != cv.masses.end();) {
        if (it->second <= 0.0) it = cv.masses.erase(it);
        else ++it;
    }
    for (auto& [w, v] : cv.masses)
        if (w.size() == 1) cv.lambda += v;
    return cv;
}

inline void validate_cylinder_vector(const TruncatedGraph& g, const CylinderVector& cv,
                                     double tol = 1e-12) {
    double lam = 0.0;
    for (auto& [w, v] : cv.masses) {
        if (w.size() == 1) lam += v;
        if (static_cast<int>(w.size()) < cv.depth) {
            // Kolmogorov consistency under one-symbol extension.
            double ext = 0.0;
            for (Symbol b : g.vertices)
                if (g.has_edge(w.back(), b)) {
                    Word e = w;
                    e.push_back(b);
                    ext += cv.mass(e);
                }
            if (std::abs(ext - v) > tol)
                throw std::invalid_argument("CylinderVector: Kolmogorov consistency violated");
        }
    }
    if (std::abs(lam - cv.lambda) > tol)
        throw std::invalid_argument("CylinderVector: lambda mismatch");
    // Shift compatibility at depth <= d: mass[s] = sum_a mass[a,s].
    if (cv.depth >= 2) {
        for (Symbol s : g.vertices) {
            const double lhs = cv.mass({s});
            double rhs = 0.0;
            for (Symbol a : g.vertices)
                if (g.has_edge(a, s)) rhs += cv.mass({a, s});
            if (lhs > 0.0 || rhs > 0.0)
                if (std::abs(lhs - rhs) > tol)
                    throw std::invalid_argument("CylinderVector: shift compatibility violated");
        }
    }
}

// Canonical cylinder enumeration: length-lexicographic over admissible
// words of the truncation. The metric rho truncates the sum at depth d.
inline double cylinder_distance(const TruncatedGraph& g, const CylinderVector& a,
                                const CylinderVector& b, int d) {
    if (a.depth < d || b.depth < d)
        throw std::invalid_argument("cylinder_distance: vectors shallower than d");
    double rho = 0.0;
    double weight = 0.5;
    for (int len = 1; len <= d; ++len) {
        for (const Word& w : admissible_words(g, len)) {
            rho += weight * std::abs(a.mass(w) - b.mass(w));
            weight *= 0.5;
        }
    }
    return rho;
}

// ---------------------------------------------------------------------
// Inducing on a 1-cylinder (first-return measure) and Kac's identity.

struct InducedMeasure {
    MarkovMeasure induced;           // over return-word symbols (full shift)
    std::vector<Word> return_words;  // word w = a b_1 .. b_{k-1}
    std::vector<double> tau;         // return times (= word lengths)
    double kac_integral = 0.0;       // int tau d(induced)
    double base_mass = 0.0;          // mu([a])
    double tail_mass = 0.0;          // unassigned return mass beyond L
};

inline InducedMeasure induce_measure(const MarkovMeasure& mu, Symbol a, int L,
                                     double tail_tol = 1e-9) {
    InducedMeasure out;
    out.base_mass = mu.cylinder_mass({a});
    if (out.base_mass <= 0.0)
        throw std::invalid_argument("induce_measure: mu([a]) = 0");
    // Enumerate positive-mass return words by pruned DFS.
    std::vector<double> weight;
    std::function<void(Word&)> rec = [&](Word& w) {
        Word wa = w;
        wa.push_back(a);
        const double m = mu.cylinder_mass(wa);
        if (m > 0.0) {
            out.return_words.push_back(w);
            out.tau.push_back(static_cast<double>(w.size()));
            weight.push_back(m / out.base_mass);
        }
        if (static_cast<int>(w.size()) >= L) return;
        for (Symbol b : mu.graph->vertices) {
            if (b == a || !mu.graph->has_edge(w.back(), b)) continue;
            Word ext = w;
            ext.push_back(b);
            if (mu.cylinder_mass(ext) <= 0.0) continue;
            rec(ext);
        }
    };
    Word start{a};
    rec(start);
    double covered = 0.0;
    for (double p : weight) covered += p;
    out.tail_mass = 1.0 - covered;
    if (out.tail_mass > tail_tol)
        throw std::invalid_argument("induce_measure: return mass beyond L is " +
                                    std::to_string(out.tail_mass));
    const int K = static_cast<int>(out.return_words.size());
    // Renormalize the truncated-return distribution.
    for (double& p : weight) p /= covered;
    // Exact path-measure conditionals between consecutive return words.
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(K));
    for (int u = 0; u < K; ++u) {
        Word wa = out.return_words[static_cast<std::size_t>(u)];
        wa.push_back(a);
        const double mu_wa = mu.cylinder_mass(wa);
        double s = 0.0;
        for (int v = 0; v < K; ++v) {
            Word path = out.return_words[static_cast<std::size_t>(u)];
            for (Symbol c : out.return_words[static_cast<std::size_t>(v)]) path.push_back(c);
            path.push_back(a);
            const double m = mu.cylinder_mass(path);
            if (m > 0.0) {
                rows[static_cast<std::size_t>(u)].emplace_back(v, m / mu_wa);
                s += m / mu_wa;
            }
        }
        for (auto& [v, p] : rows[static_cast<std::size_t>(u)]) p /= s;
    }
    auto gspec = CmsSpec::full_shift();
    auto ig = std::make_shared<TruncatedGraph>(build_truncation(gspec, K));
    std::vector<Word> istates;
    istates.reserve(static_cast<std::size_t>(K));
    for (int i = 1; i <= K; ++i) istates.push_back({i});
    out.induced = make_markov(ig, 1, std::move(istates), std::move(rows), std::move(weight));
    out.kac_integral = 0.0;
    for (int i = 0; i < K; ++i)
        out.kac_integral += out.tau[static_cast<std::size_t>(i)] * out.induced.pi[static_cast<std::size_t>(i)];
    return out;
}

// ---------------------------------------------------------------------
// Subdivision (hat) measure correspondence.

// Maps an admissible word of the subdivided shift to the base cylinder D
// with hat_mu(C) = mu(D) / int tau d mu. Words of length one at a base
// symbol map to that 1-cylinder.
inline Word hat_to_base_cylinder(const Subdivision& sd, const Word& hat_word) {
    if (hat_word.empty()) throw std::invalid_argument("hat_to_base_cylinder: empty word");
    Word base;
    std::pair<Symbol, Symbol> block;
    int pos = 0;  // position inside the current block, 1-based
    std::size_t t = 0;
    const Symbol first = hat_word[0];
    if (first >= sd.first_fresh) {
        auto [edge, i] = sd.fresh_origin.at(first);
        block = edge;
        pos = i;
        base.push_back(edge.first);
        ++t;
    } else {
        if (hat_word.size() == 1) return {first};
        // Resolve the block from the second symbol.
        const Symbol second = hat_word[1];
        if (second >= sd.first_fresh) {
            auto [edge, i] = sd.fresh_origin.at(second);
            if (edge.first != first || i != 2)
                throw std::invalid_argument("hat_to_base_cylinder: word not admissible");
            block = edge;
            pos = 2;
            base.push_back(first);
            t = 2;
        } else {
            block = {first, second};
            if (!sd.path.count(block) || sd.path.at(block).size() != 2)
                throw std::invalid_argument("hat_to_base_cylinder: word not admissible");
            base.push_back(first);
            base.push_back(second);
            // Already completed the block; "second" starts the next one.
            pos = 1;
            block = {second, 0};
            t = 2;
        }
    }
    for (; t < hat_word.size(); ++t) {
        const Symbol s = hat_word[t];
        const int tau_block = pos >= 1 && block.second != 0
                                  ? static_cast<int>(sd.path.at(block).size()) - 1
                                  : 0;
        if (block.second != 0 && pos < tau_block) {
            // Must be the next fresh symbol of the same block, or the
            // target when the block ends.
            auto it = sd.fresh_origin.find(s);
            if (it == sd.fresh_origin.end() || it->second.first != block || it->second.second != pos + 1)
                throw std::invalid_argument("hat_to_base_cylinder: word not admissible");
            ++pos;
        } else if (block.second != 0 && pos == tau_block) {
            if (s != block.second)
                throw std::invalid_argument("hat_to_base_cylinder: word not admissible");
            base.push_back(s);
            block = {s, 0};
            pos = 1;
        } else {
            // At a base symbol with undetermined block: resolve from s.
            const Symbol cur = base.back();
            if (s >= sd.first_fresh) {
                auto [edge, i] = sd.fresh_origin.at(s);
                if (edge.first != cur || i != 2)
                    throw std::invalid_argument("hat_to_base_cylinder: word not admissible");
                block = edge;
                pos = 2;
            } else {
                if (!sd.path.count({cur, s}) || sd.path.at({cur, s}).size() != 2)
                    throw std::invalid_argument("hat_to_base_cylinder: word not admissible");
                base.push_back(s);
                block = {s, 0};
                pos = 1;
            }
        }
    }
    // A word ending mid-block (pos >= 2) pins the block target.
    if (block.second != 0 && pos >= 2) base.push_back(block.second);
    return base;
}

struct HatMeasure {
    MarkovMeasure hat;
    double tau_integral = 0.0;
};

// mu-hat on the subdivided shift: base symbols keep conditional jumps,
// fresh symbols advance deterministically; masses follow Kac.
inline HatMeasure hat_measure(const MarkovMeasure& mu, const Subdivision& sd) {
    if (mu.order != 1)
        throw std::invalid_argument("hat_measure: order-1 base measure required");
    const auto g = std::make_shared<TruncatedGraph>(sd.graph);
    const int n = g->size();
    std::vector<Word> states;
    states.reserve(static_cast<std::size_t>(n));
    for (Symbol s : g->vertices) states.push_back({s});
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
    double T = 0.0;
    for (std::size_t u = 0; u < mu.states.size(); ++u)
        for (auto& [v, p] : mu.rows[u]) {
            const Symbol a = mu.states[u][0], b = mu.states[static_cast<std::size_t>(v)][0];
            T += mu.pi[u] * p * (static_cast<double>(sd.path.at({a, b}).size()) - 1.0);
        }
    // Stationary masses.
    for (std::size_t u = 0; u < mu.states.size(); ++u) {
        const Symbol a = mu.states[u][0];
        const int ai = g->index_of(a);
        pi[static_cast<std::size_t>(ai)] += mu.pi[u] / T;
        for (auto& [v, p] : mu.rows[u]) {
            if (p == 0.0) continue;
            const Symbol b = mu.states[static_cast<std::size_t>(v)][0];
            const auto& path = sd.path.at({a, b});
            for (std::size_t i = 1; i + 1 < path.size(); ++i)
                pi[static_cast<std::size_t>(g->index_of(path[i]))] += mu.pi[u] * p / T;
        }
    }
    // Transitions.
    for (std::size_t u = 0; u < mu.states.size(); ++u) {
        const Symbol a = mu.states[u][0];
        const int ai = g->index_of(a);
        for (auto& [v, p] : mu.rows[u]) {
            if (p == 0.0) continue;
            const Symbol b = mu.states[static_cast<std::size_t>(v)][0];
            const auto& path = sd.path.at({a, b});
            rows[static_cast<std::size_t>(ai)].emplace_back(g->index_of(path[1]), p);
            for (std::size_t i = 1; i + 1 < path.size(); ++i)
                rows[static_cast<std::size_t>(g->index_of(path[i]))] = {
                    {g->index_of(path[i + 1]), 1.0}};
        }
    }
    HatMeasure out;
    out.tau_integral = T;
    out.hat = make_markov(g, 1, std::move(states), std::move(rows), std::move(pi));
    return out;
}

// Inverse of the hat correspondence: recovers the base measure exactly.
inline MarkovMeasure hat_inverse(const MarkovMeasure& hat, const Subdivision& sd,
                                 const std::shared_ptr<const TruncatedGraph>& base_graph) {
    const int n = base_graph->size();
    std::vector<Word> states;
    for (Symbol s : base_graph->vertices) states.push_back({s});
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        const Symbol a = base_graph->vertices[static_cast<std::size_t>(i)];
        const double m = hat.cylinder_mass({a});
        pi[static_cast<std::size_t>(i)] = m;
        z += m;
    }
    for (double& p : pi) p /= z;
    for (int i = 0; i < n; ++i) {
        const Symbol a = base_graph->vertices[static_cast<std::size_t>(i)];
        double s = 0.0;
        std::vector<std::pair<int, double>> row;
        base_graph->for_each_out(i, [&](int j) {
            const Symbol b = base_graph->vertices[static_cast<std::size_t>(j)];
            const auto& path = sd.path.at({a, b});
            // P(a->b) is the hat chain's probability of entering the (a,b)
            // block from a.
            const Word head{a, path[1]};
            const double num = hat.cylinder_mass(head);
            const double den = hat.cylinder_mass({a});
            if (num > 0.0) {
                row.emplace_back(j, num / den);
                s += num / den;
            }
        });
        for (auto& [j, p] : row) p /= s;
        rows[static_cast<std::size_t>(i)] = std::move(row);
    }
    return make_markov(base_graph, 1, std::move(states), std::move(rows), std::move(pi));
}

// ---------------------------------------------------------------------
// Escaping sequences and mass-loss diagnostics.

struct MeasureSequence {
    std::function<Mixture(int)> at;  // 0-based prefix index
    double limit_lambda = 1.0;
    CylinderVector limit;  // of the (unscaled) limit measure; empty when lambda = 0
    std::optional<Mixture> limit_measure;  // exact limit, when known
    int suggested_prefix = 50;
    std::string desc;
};

// Deep-loop escaping sequences: Bernoulli measures on induced loop
// alphabets pushed to the base through the inverse Kac map. band = 0
// gives the single-loop periodic measure.
inline MeasureSequence deep_loop_sequence(const CmsSpec& spec, int start_length, int band = 0) {
    if (spec.family != Family::renewal && spec.family != Family::star)
        throw std::invalid_argument("deep_loop_sequence: family has no deep loops");
    MeasureSequence seq;
    seq.limit_lambda = 0.0;
    seq.limit = CylinderVector::zero(3);
    seq.desc = "deep-loops(" + family_name(spec.family) + ")";
    seq.at = [spec, start_length, band](int n) -> Mixture {
        const int L = start_length + n;
        if (spec.family == Family::renewal) {
            auto g = std::make_shared<TruncatedGraph>(build_truncation(spec, L + band));
            if (band == 0) {
                Word cycle{1};
                for (Symbol s = L; s >= 2; --s) cycle.push_back(s);
                return Mixture::pure(periodic_measure(g, cycle));
            }
            // Order-1 chain: at the hub choose a loop uniformly in the
            // band, then descend deterministically. The stationary vector
            // has the exact excursion form.
            const int n_states = g->size();
            std::vector<Word> states;
            for (Symbol s : g->vertices) states.push_back({s});
            std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n_states));
            const double q = 1.0 / (band + 1);
            double mean_len = 0.0;
            for (int k = L; k <= L + band; ++k) {
                rows[static_cast<std::size_t>(g->index_of(1))].emplace_back(g->index_of(k), q);
                mean_len += q * k;
            }
            for (Symbol s = 2; s <= L + band; ++s)
                rows[static_cast<std::size_t>(g->index_of(s))] = {{g->index_of(s - 1), 1.0}};
            std::vector<double> pi(static_cast<std::size_t>(n_states), 0.0);
            pi[static_cast<std::size_t>(g->index_of(1))] = 1.0 / mean_len;
            for (Symbol s = 2; s <= L + band; ++s) {
                double hits = 0.0;  // loops of length >= s pass through s
                for (int k = std::max<int>(s, L); k <= L + band; ++k) hits += q;
                pi[static_cast<std::size_t>(g->index_of(s))] = hits / mean_len;
            }
            return Mixture::pure(make_markov(g, 1, std::move(states), std::move(rows), std::move(pi)));
        }
        // Star: loops "1 k" with k in the band; every excursion has length 2.
        auto g = std::make_shared<TruncatedGraph>(build_truncation(spec, L + band));
        const int n_states = g->size();
        std::vector<Word> states;
        for (Symbol s : g->vertices) states.push_back({s});
        std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n_states));
        const double q = 1.0 / (band + 1);
        for (int k = L; k <= L + band; ++k)
            rows[static_cast<std::size_t>(g->index_of(1))].emplace_back(g->index_of(k), q);
        for (Symbol s = 2; s <= L + band; ++s)
            rows[static_cast<std::size_t>(g->index_of(s))] = {{g->index_of(1), 1.0}};
        std::vector<double> pi(static_cast<std::size_t>(n_states), 0.0);
        pi[static_cast<std::size_t>(g->index_of(1))] = 0.5;
        for (int k = L; k <= L + band; ++k) pi[static_cast<std::size_t>(g->index_of(k))] = 0.5 * q;
        return Mixture::pure(make_markov(g, 1, std::move(states), std::move(rows), std::move(pi)));
    };
    return seq;
}

inline MeasureSequence constant_sequence(const Mixture& mu, int depth = 3) {
    MeasureSequence seq;
    seq.at = [mu](int) { return mu; };
    seq.limit_lambda = 1.0;
    seq.limit = cylinder_vector(mu, depth);
    seq.limit_measure = mu;
    seq.desc = "constant";
    return seq;
}

// eta_n = lambda*mu + (1-lambda)*inner_n; declared limit lambda*mu plus
// the inner sequence's declared limit contribution.
inline MeasureSequence convex_combination(double lambda, const Mixture& mu,
                                          const MeasureSequence& inner, int depth = 3) {
    MeasureSequence seq;
    seq.at = [lambda, mu, inner](int n) { return Mixture::combine(lambda, mu, inner.at(n)); };
    seq.limit_lambda = lambda * 1.0 + (1.0 - lambda) * inner.limit_lambda;
    CylinderVector cv = cylinder_vector(mu, depth);
    CylinderVector lim = CylinderVector::zero(depth);
    for (auto& [w, v] : cv.masses) lim.masses[w] += lambda * v;
    for (auto& [w, v] : inner.limit.masses) lim.masses[w] += (1.0 - lambda) * v;
    for (auto& [w, v] : lim.masses)
        if (w.size() == 1) lim.lambda += v;
    seq.limit = std::move(lim);
    if (lambda > 0.0) seq.limit_measure = mu;
    if (lambda < 1.0 && inner.limit_lambda > 0.0)
        throw std::invalid_argument("convex_combination: inner sequence must escape");
    seq.suggested_prefix = inner.suggested_prefix;
    seq.desc = "convex(" + std::to_string(lambda) + "," + inner.desc + ")";
    return seq;
}

struct MassLossReport {
    std::vector<std::pair<Symbol, double>> table;  // (k, limsup_n mu_n(union_{s>=k}[s]))
    int prefix = 0;
};

// Empirical double limit of the tail mass; monotone nonincreasing in k.
inline MassLossReport mass_loss_diagnostic(const MeasureSequence& seq,
                                           const std::vector<Symbol>& k_schedule, int prefix) {
    MassLossReport rep;
    rep.prefix = prefix;
    const int window = std::max(1, prefix / 4);
    std::vector<Mixture> tail_measures;
    for (int n = prefix - window; n < prefix; ++n) tail_measures.push_back(seq.at(n));
    for (Symbol k : k_schedule) {
        double m = 0.0;
        for (auto& mu : tail_measures) m = std::max(m, tail_mass(mu, k));
        rep.table.emplace_back(k, m);
    }
    return rep;
}

}  // namespace cms
