#pragma once

// Pressure at infinity by two independent routes (restricted periodic
// sums and the penalized limit lim_t P(phi - tV)), s_infinity, the roof
// threshold h(tau) with its Psi_1/Psi_2 classification, SPR testing,
// the semi-continuity harness, and ergodic optimization (beta, beta_inf,
// maximizing cycles, zero-temperature limits).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cmsthermo/graph.hpp"
#include "cmsthermo/inducing.hpp"
#include "cmsthermo/measure.hpp"
#include "cmsthermo/numerics.hpp"
#include "cmsthermo/potential.hpp"
#include "cmsthermo/pressure.hpp"

namespace cms {

// ---------------------------------------------------------------------
// Restricted partition sums over Per_a(q,M,n).

// log Z_n(phi,a;q,M) for every n <= n_max, by exact dynamic programming
// over (position, vertex, count of visits to {1..q}) with the threshold
// floor(n/M). Exact for depth <= 2.
inline std::vector<double> log_restricted_sums(const TruncatedGraph& g, const Potential& phi,
                                               Symbol a, int n_max, int q, int M) {
    if (q < 1 || M < 1) throw std::invalid_argument("log_restricted_sums: q, M >= 1");
    const int ai = g.index_of(a);
    if (ai < 0) throw std::invalid_argument("log_restricted_sums: symbol not in truncation");
    EdgeWeights w(g, phi);
    const int n = g.size();
    const int cmax = n_max / M;  // counts above this can never qualify
    const auto idx = [&](int v, int c) { return static_cast<std::size_t>(v) * (cmax + 1) + c; };
    std::vector<double> cur(static_cast<std::size_t>(n) * (cmax + 1), kNegInfLog);
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, kNegInfLog);
    const int c0 = g.vertices[static_cast<std::size_t>(ai)] <= q ? 1 : 0;
    if (c0 <= cmax) cur[idx(ai, c0)] = 0.0;
    for (int pos = 1; pos <= n_max; ++pos) {
        // close the walk at length pos: threshold floor(pos/M)
        {
            const int thr = std::min(pos / M, cmax);
            LogAccumulator close;
            for (int v = 0; v < n; ++v) {
                if (!g.edge_idx(v, ai)) continue;
                for (int c = 0; c <= thr; ++c)
                    if (cur[idx(v, c)] != kNegInfLog) close.add(cur[idx(v, c)] + w(v, ai));
            }
            out[static_cast<std::size_t>(pos)] = close.log_total();
        }
        if (pos == n_max) break;
        std::vector<LogAccumulator> nxt(static_cast<std::size_t>(n) * (cmax + 1));
        for (int v = 0; v < n; ++v) {
            for (int c = 0; c <= cmax; ++c) {
                const double val = cur[idx(v, c)];
                if (val == kNegInfLog) continue;
                g.for_each_out(v, [&](int u) {
                    const int cu = c + (g.vertices[static_cast<std::size_t>(u)] <= q ? 1 : 0);
                    if (cu <= cmax) nxt[idx(u, cu)].add(val + w(v, u));
                });
            }
        }
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = nxt[i].log_total();
    }
    return out;
}

inline double restricted_partition_sum(const TruncatedGraph& g, const Potential& phi, Symbol a,
                                       int n, int q, int M) {
    return std::exp(log_restricted_sums(g, phi, a, n, q, M)[static_cast<std::size_t>(n)]);
}

// Tropical twin of the restricted DP: max of S_n phi over the same
// restricted walks, for the direct route to beta_infinity.
inline std::vector<double> tropical_restricted_sums(const TruncatedGraph& g, const Potential& phi,
                                                    Symbol a, int n_max, int q, int M) {
    const int ai = g.index_of(a);
    if (ai < 0) throw std::invalid_argument("tropical_restricted_sums: symbol not in truncation");
    EdgeWeights w(g, phi);
    const int n = g.size();
    const int cmax = n_max / M;
    const auto idx = [&](int v, int c) { return static_cast<std::size_t>(v) * (cmax + 1) + c; };
    std::vector<double> cur(static_cast<std::size_t>(n) * (cmax + 1), kNegInfLog), nxt;
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, kNegInfLog);
    const int c0 = g.vertices[static_cast<std::size_t>(ai)] <= q ? 1 : 0;
    if (c0 <= cmax) cur[idx(ai, c0)] = 0.0;
    for (int pos = 1; pos <= n_max; ++pos) {
        const int thr = std::min(pos / M, cmax);
        double best = kNegInfLog;
        for (int v = 0; v < n; ++v) {
            if (!g.edge_idx(v, ai)) continue;
            for (int c = 0; c <= thr; ++c)
                if (cur[idx(v, c)] != kNegInfLog) best = std::max(best, cur[idx(v, c)] + w(v, ai));
        }
        out[static_cast<std::size_t>(pos)] = best;
        if (pos == n_max) break;
        nxt.assign(cur.size(), kNegInfLog);
        for (int v = 0; v < n; ++v)
            for (int c = 0; c <= cmax; ++c) {
                const double val = cur[idx(v, c)];
                if (val == kNegInfLog) continue;
                g.for_each_out(v, [&](int u) {
                    const int cu = c + (g.vertices[static_cast<std::size_t>(u)] <= q ? 1 : 0);
                    if (cu <= cmax) nxt[idx(u, cu)] = std::max(nxt[idx(u, cu)], val + w(v, u));
                });
            }
        cur.swap(nxt);
    }
    return out;
}

// ---------------------------------------------------------------------
// Karp max-mean cycle on the core.

struct MeanCycle {
    double value = 0.0;
    Word cycle;  // lexicographically smallest optimal cycle (deterministic)
};

inline MeanCycle max_mean_cycle(const TruncatedGraph& g, const Potential& phi) {
    if (g.core.empty()) throw DegenerateTruncation("max_mean_cycle: empty core");
    EdgeWeights w(g, phi);
    const int m = static_cast<int>(g.core.size());
    std::vector<int> pos(static_cast<std::size_t>(g.size()), -1);
    for (int k = 0; k < m; ++k) pos[static_cast<std::size_t>(g.core[static_cast<std::size_t>(k)])] = k;
    // Karp: D[k][v] = max weight of a k-edge walk from the source.
    std::vector<std::vector<double>> D(static_cast<std::size_t>(m) + 1,
                                       std::vector<double>(static_cast<std::size_t>(m), kNegInfLog));
    D[0][0] = 0.0;  // source = first core vertex
    for (int k = 1; k <= m; ++k)
        for (int ci = 0; ci < m; ++ci) {
            const double dv = D[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(ci)];
            if (dv == kNegInfLog) continue;
            const int i = g.core[static_cast<std::size_t>(ci)];
            g.for_each_out(i, [&](int j) {
                const int cj = pos[static_cast<std::size_t>(j)];
                if (cj < 0) return;
                D[static_cast<std::size_t>(k)][static_cast<std::size_t>(cj)] =
                    std::max(D[static_cast<std::size_t>(k)][static_cast<std::size_t>(cj)],
                             dv + w(i, j));
            });
        }
    double best = kNegInfLog;
    for (int v = 0; v < m; ++v) {
        if (D[static_cast<std::size_t>(m)][static_cast<std::size_t>(v)] == kNegInfLog) continue;
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < m; ++k) {
            if (D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] == kNegInfLog) continue;
            worst = std::min(worst, (D[static_cast<std::size_t>(m)][static_cast<std::size_t>(v)] -
                                     D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)]) /
                                        (m - k));
        }
        best = std::max(best, worst);
    }
    MeanCycle out;
    out.value = best;
    // Extraction: critical subgraph of tight edges under the Karp
    // potentials, then a greedy smallest-successor walk inside a cyclic
    // SCC starting from the smallest critical symbol.
    std::vector<double> pot(static_cast<std::size_t>(m), kNegInfLog);
    for (int v = 0; v < m; ++v)
        for (int k = 0; k <= m; ++k)
            if (D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] != kNegInfLog)
                pot[static_cast<std::size_t>(v)] =
                    std::max(pot[static_cast<std::size_t>(v)],
                             D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] - k * best);
    std::vector<std::vector<int>> tight(static_cast<std::size_t>(m));
    for (int ci = 0; ci < m; ++ci) {
        const int i = g.core[static_cast<std::size_t>(ci)];
        g.for_each_out(i, [&](int j) {
            const int cj = pos[static_cast<std::size_t>(j)];
            if (cj < 0) return;
            if (std::abs(pot[static_cast<std::size_t>(ci)] + w(i, j) - best -
                         pot[static_cast<std::size_t>(cj)]) < 1e-9)
                tight[static_cast<std::size_t>(ci)].push_back(cj);
        });
    }
    // Walk greedily within the tight subgraph until a vertex repeats.
    std::vector<int> seen(static_cast<std::size_t>(m), -1);
    int start = -1;
    for (int v = 0; v < m && start < 0; ++v)
        if (!tight[static_cast<std::size_t>(v)].empty()) start = v;
    std::vector<int> walk;
    int v = start;
    while (seen[static_cast<std::size_t>(v)] < 0) {
        seen[static_cast<std::size_t>(v)] = static_cast<int>(walk.size());
        walk.push_back(v);
        const auto& outs = tight[static_cast<std::size_t>(v)];
        int nxt = -1;
        for (int u : outs)
            if (!tight[static_cast<std::size_t>(u)].empty() && (nxt < 0 || u < nxt)) nxt = u;
        if (nxt < 0) break;
        v = nxt;
    }
    if (seen[static_cast<std::size_t>(v)] >= 0) {
        Word cyc;
        for (std::size_t k = static_cast<std::size_t>(seen[static_cast<std::size_t>(v)]); k < walk.size(); ++k)
            cyc.push_back(g.vertices[static_cast<std::size_t>(g.core[static_cast<std::size_t>(walk[k])])]);
        // rotate to the lexicographically smallest presentation
        std::size_t bestrot = 0;
        for (std::size_t r = 1; r < cyc.size(); ++r) {
            Word a(cyc.begin() + static_cast<long>(r), cyc.end());
            a.insert(a.end(), cyc.begin(), cyc.begin() + static_cast<long>(r));
            Word b(cyc.begin() + static_cast<long>(bestrot), cyc.end());
            b.insert(b.end(), cyc.begin(), cyc.begin() + static_cast<long>(bestrot));
            if (a < b) bestrot = r;
        }
        std::rotate(cyc.begin(), cyc.begin() + static_cast<long>(bestrot), cyc.end());
        out.cycle = std::move(cyc);
    }
    return out;
}

// Period of the critical (max-mean-tight) subgraph of phi: the phase
// window nearly-periodic weighted cores need at low temperature.
inline int tropical_period(const TruncatedGraph& g, const Potential& phi) {
    EdgeWeights w(g, phi);
    const int m = static_cast<int>(g.core.size());
    std::vector<int> pos(static_cast<std::size_t>(g.size()), -1);
    for (int k = 0; k < m; ++k) pos[static_cast<std::size_t>(g.core[static_cast<std::size_t>(k)])] = k;
    const double best = max_mean_cycle(g, phi).value;
    // Karp potentials again (recomputed; graphs here are small).
    std::vector<std::vector<double>> D(static_cast<std::size_t>(m) + 1,
                                       std::vector<double>(static_cast<std::size_t>(m), kNegInfLog));
    D[0][0] = 0.0;
    for (int k = 1; k <= m; ++k)
        for (int ci = 0; ci < m; ++ci) {
            const double dv = D[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(ci)];
            if (dv == kNegInfLog) continue;
            g.for_each_out(g.core[static_cast<std::size_t>(ci)], [&](int j) {
                const int cj = pos[static_cast<std::size_t>(j)];
                if (cj < 0) return;
                D[static_cast<std::size_t>(k)][static_cast<std::size_t>(cj)] = std::max(
                    D[static_cast<std::size_t>(k)][static_cast<std::size_t>(cj)],
                    dv + w(g.core[static_cast<std::size_t>(ci)], j));
            });
        }
    std::vector<double> pot(static_cast<std::size_t>(m), kNegInfLog);
    for (int v = 0; v < m; ++v)
        for (int k = 0; k <= m; ++k)
            if (D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] != kNegInfLog)
                pot[static_cast<std::size_t>(v)] = std::max(
                    pot[static_cast<std::size_t>(v)],
                    D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] - k * best);
    // tight subgraph as an explicit finite family, per cyclic SCC
    std::vector<std::pair<Symbol, Symbol>> tight_edges;
    for (int ci = 0; ci < m; ++ci) {
        const int i = g.core[static_cast<std::size_t>(ci)];
        g.for_each_out(i, [&](int j) {
            const int cj = pos[static_cast<std::size_t>(j)];
            if (cj < 0) return;
            if (std::abs(pot[static_cast<std::size_t>(ci)] + w(i, j) - best -
                         pot[static_cast<std::size_t>(cj)]) < 1e-9)
                tight_edges.emplace_back(g.vertices[static_cast<std::size_t>(i)],
                                         g.vertices[static_cast<std::size_t>(j)]);
        });
    }
    if (tight_edges.empty()) return 1;
    long long period = 1;
    try {
        const CmsSpec tight = CmsSpec::finite(tight_edges);
        const TruncatedGraph tg = build_truncation(tight, tight.max_finite_vertex());
        period = std::lcm<long long>(period, tg.period);
    } catch (const DegenerateTruncation&) {
        return 1;
    }
    return period > 128 ? 1 : static_cast<int>(period);
}

// Minimum cycle mean of the low-state indicator 1_{v <= q} over the core;
// if it exceeds 1/M, Per_a(q,M,n) is provably empty for every n.
inline double min_low_visit_cycle_mean(const TruncatedGraph& g, int q) {
    const auto neg_ind = Potential::first_coordinate(
        [q](Symbol s) { return s <= q ? -1.0 : 0.0; }, {}, 0.0, "neg-low-indicator");
    return -max_mean_cycle(g, neg_ind).value;
}

// ---------------------------------------------------------------------
// Pressure at infinity.

struct InfinitySchedules {
    std::vector<std::pair<int, int>> qm = {{5, 5}, {10, 10}, {20, 20}};
    int n_max = 200;
    int truncation = 0;          // 0: derived from the spec
    int route_b_truncation = 0;  // 0: derived
    double t_max = 1024.0;
    double floor = -50.0;
    double early_stop = 1e-4;
    bool run_route_b = true;
};

struct RestrictedRow {
    int q = 0, M = 0;
    ExtReal estimate;
    double residual = 0.0;
    bool provably_empty = false;
    bool empty_at_horizon = false;
    std::vector<std::pair<int, double>> trail;  // (n, (1/n) log Z_n(q,M))
};

struct InfinityReport {
    ExtReal value;
    std::string route;  // restricted-sums | penalized-limit | both
    ExtReal value_a;
    ExtReal value_b;
    double agreement_gap = 0.0;  // meaningful when both routes are finite
    std::vector<RestrictedRow> rows;
    std::vector<std::pair<double, double>> penalized_trail;  // (t, P(phi - tV))
    std::string notes;
};

namespace detail {

inline int default_truncation(const CmsSpec& spec, int n_max) {
    if (!spec.infinite_alphabet()) return std::max(2, spec.max_finite_vertex());
    return std::max(64, n_max + 8);
}

}  // namespace detail

// Route A: inf over (q,M) of limsup (1/n) log Z_n(phi,a;q,M); rows that
// are provably empty (min cycle mean test) certify a -inf verdict.
// Route B: P(phi - tV) along a geometric t schedule; the plateau before
// the fixed-truncation artifact is reported, with -inf at the floor.
inline InfinityReport pressure_at_infinity(const CmsSpec& spec, const Potential& phi, Symbol a,
                                           InfinitySchedules sched = {}) {
    InfinityReport rep;
    const int N = sched.truncation > 0 ? sched.truncation : detail::default_truncation(spec, sched.n_max);
    const TruncatedGraph g = build_truncation(spec, N);
    // Emptiness of Per_a(q,M,n) is certified only when the min-cycle-mean
    // bound holds on the truncation AND is stable under doubling it
    // (deep-loop families keep lowering the bound, so a truncation-local
    // bound is an artifact there).
    // ---- Route A ----
    bool any_provably_empty = false;
    ExtReal val_a = ExtReal::undecided();
    double best_row = std::numeric_limits<double>::infinity();
    double best_res = 0.0;
    bool any_estimate = false;
    for (auto [q, M] : sched.qm) {
        RestrictedRow row;
        row.q = q;
        row.M = M;
        // Rows with q*M beyond the base horizon carry no periodic points
        // yet; on sparse graphs the horizon is extended so the row can
        // report data (cost stays linear in edges).
        int row_n = sched.n_max;
        const TruncatedGraph* row_g = &g;
        std::optional<TruncatedGraph> extended;
        if (3 * q * M > sched.n_max && g.edge_count() < 20000 && spec.infinite_alphabet()) {
            row_n = 3 * q * M;
            extended = build_truncation(spec, row_n + 8);
            if (extended->edge_count() < 60000) row_g = &*extended;
            else {
                row_n = sched.n_max;
                extended.reset();
            }
        }
        const double m_low = min_low_visit_cycle_mean(*row_g, q);
        if (m_low > 1.0 / M + 1e-12) {
            std::optional<TruncatedGraph> row_g2;
            if (spec.infinite_alphabet()) row_g2 = build_truncation(spec, 2 * row_g->trunc_index);
            const double m_low2 = row_g2 ? min_low_visit_cycle_mean(*row_g2, q) : m_low;
            if (std::abs(m_low2 - m_low) < 1e-12) {
                row.provably_empty = true;
                row.estimate = ExtReal::neg_inf();
                any_provably_empty = true;
            } else {
                row.empty_at_horizon = true;  // truncation artifact
                row.estimate = ExtReal::undecided();
            }
            rep.rows.push_back(row);
            continue;
        }
        const auto logZ = log_restricted_sums(*row_g, phi, a, row_n, q, M);
        const GrowthEstimate est = growth_rate(logZ, row_g->period);
        if (!est.valid) {
            row.empty_at_horizon = true;
            row.estimate = ExtReal::undecided();
        } else {
            row.estimate = ExtReal::finite(est.value);
            row.residual = est.residual;
            row.trail = est.raw;
            if (est.value < best_row) {
                best_row = est.value;
                best_res = est.residual;
            }
            any_estimate = true;
        }
        rep.rows.push_back(row);
    }
    if (any_provably_empty) val_a = ExtReal::neg_inf();
    else if (any_estimate) val_a = ExtReal::finite(best_row);
    rep.value_a = val_a;

    // ---- Route B ----
    ExtReal val_b = ExtReal::undecided();
    if (sched.run_route_b) {
        const int NB = sched.route_b_truncation > 0
                           ? sched.route_b_truncation
                           : (spec.infinite_alphabet() ? std::max(N, 2000) : N);
        const TruncatedGraph gb = NB == N ? g : build_truncation(spec, NB);
        const Potential v = Potential::v_function();
        double prev = 0.0;
        bool have_prev = false;
        double best_gap = std::numeric_limits<double>::infinity();
        double knee_val = 0.0;
        for (double t = 1.0; t <= sched.t_max; t *= 2.0) {
            const Potential pen = phi - t * v;
            const double p = power_value(gb, pen).log_pressure;
            rep.penalized_trail.emplace_back(t, p);
            if (p < sched.floor) {
                val_b = ExtReal::neg_inf();
                break;
            }
            if (have_prev) {
                const double gap = std::abs(p - prev);
                if (gap < sched.early_stop) {
                    val_b = ExtReal::finite(p);
                    break;
                }
                if (gap < best_gap) {
                    best_gap = gap;
                    knee_val = p;
                }
            }
            prev = p;
            have_prev = true;
        }
        if (val_b.is_undecided() && !rep.penalized_trail.empty()) {
            if (best_gap < std::numeric_limits<double>::infinity()) {
                val_b = ExtReal::finite(knee_val);
                rep.notes += "route B: plateau heuristic (min successive change); ";
            }
        }
    }
    rep.value_b = val_b;

    // ---- combine ----
    if (!val_a.is_undecided()) {
        rep.value = val_a;
        rep.route = val_b.is_undecided() ? "restricted-sums" : "both";
    } else if (!val_b.is_undecided()) {
        rep.value = val_b;
        rep.route = "penalized-limit";
    } else {
        rep.value = ExtReal::undecided();
        rep.route = "none";
        rep.notes += "schedule exhausted before stabilization; ";
    }
    if (val_a.is_finite() && val_b.is_finite())
        rep.agreement_gap = std::abs(val_a.finite_value() - val_b.finite_value());
    rep.notes += "upper-bound schedule: values certify bounds only";
    return rep;
}

// ---------------------------------------------------------------------
// s_infinity and the roof threshold h(tau).

struct SInfinityReport {
    double lo = 0.0;
    double hi = 1.0;
    bool exact = false;
    std::string notes;
    [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
};

// s_inf(phi) = inf { t in [0,1] : P(t phi) < inf }. Family-exact for
// first-coordinate laws; otherwise bisection on the finiteness verdict
// with honest widening on undecided outcomes.
inline SInfinityReport s_infinity(const CmsSpec& spec, const Potential& phi,
                                  PressureLimitOptions opt = {}) {
    SInfinityReport rep;
    // bounded-above potentials on finite-entropy families: P(t phi)
    // <= h_top + t sup < inf for every t.
    if (spec.family != Family::full && spec.family != Family::custom &&
        std::isfinite(phi.sup_bound)) {
        rep.lo = rep.hi = 0.0;
        rep.exact = true;
        rep.notes = "finite-entropy family with bounded-above potential";
        return rep;
    }
    if (spec.family == Family::full && phi.depth == 1 && phi.tail.present) {
        if (phi.tail.c_exp > 0.0) {
            rep.lo = rep.hi = 0.0;
            rep.exact = true;
            rep.notes = "exponential tail: all positive multiples summable";
            return rep;
        }
        if (phi.tail.c_exp == 0.0 && phi.tail.beta_log > 1.0) {
            rep.lo = rep.hi = 1.0 / phi.tail.beta_log;
            rep.exact = true;
            rep.notes = "p-series threshold 1/beta";
            return rep;
        }
    }
    // generic bisection on [0,1]
    auto divergent_at = [&](double t) -> std::optional<bool> {
        const auto pl = pressure_limit(spec, t * phi, opt);
        if (pl.value.is_pos_inf()) return true;
        if (pl.value.is_finite()) return false;
        return std::nullopt;
    };
    double lo = 0.0, hi = 1.0;
    for (int step = 0; step < 20 && hi - lo > 1e-3; ++step) {
        const double m = 0.5 * (lo + hi);
        const auto d = divergent_at(m);
        if (!d.has_value()) {
            // widen: report the undecided band
            rep.notes = "undecided finiteness inside the bracket";
            break;
        }
        if (*d) lo = m;
        else hi = m;
    }
    rep.lo = lo;
    rep.hi = hi;
    return rep;
}

struct RoofReport {
    double h = 0.0;
    std::string cls;  // Psi1 | Psi2
    double witness_t = 0.0;       // Psi1: a t with P_inf(-t tau) in (0, inf)
    double witness_value = 0.0;
    std::string notes;
};

// h(tau) = inf { t : P_inf(-t tau) <= 0 }. Psi1 when some t > 0 has
// P_inf(-t tau) solidly inside (0, inf); otherwise Psi2 with
// h = s_inf(-tau). The positivity margin guards against the upper-bias
// of finite-horizon restricted-sum estimates.
inline RoofReport h_of_roof(const CmsSpec& spec, const Potential& tau,
                            InfinitySchedules sched = {}, double margin = 0.05) {
    RoofReport rep;
    const int N = sched.truncation > 0 ? sched.truncation : detail::default_truncation(spec, sched.n_max);
    // Constant roofs: P_inf(-t tau) = delta_inf - t c exactly, so the
    // class and the threshold follow from one restricted-sum run.
    if (tau.is_constant()) {
        const double c = tau.tail.shift;
        InfinitySchedules inner = sched;
        inner.run_route_b = false;
        const auto pinf = pressure_at_infinity(spec, Potential::zero(), 1, inner);
        if (pinf.value.is_finite() && pinf.value.finite_value() > margin) {
            rep.cls = "Psi1";
            rep.witness_value = pinf.value.finite_value();
            rep.h = pinf.value.finite_value() / c;
            rep.witness_t = 0.5 * rep.h;
            return rep;
        }
        rep.cls = "Psi2";
        const auto s = s_infinity(spec, (-1.0) * tau);
        rep.h = s.mid();
        rep.notes = s.notes;
        return rep;
    }
    const TruncatedGraph g = build_truncation(spec, N);
    // Upper-bound shortcut: P_inf(-t tau) <= P_inf(0) - t inf(tau), so a
    // sub-margin entropy at infinity settles the class without a scan.
    {
        InfinitySchedules inner0 = sched;
        inner0.run_route_b = false;
        const auto pinf0 = pressure_at_infinity(spec, Potential::zero(), 1, inner0);
        if (pinf0.value.is_neg_inf() ||
            (pinf0.value.is_finite() && pinf0.value.finite_value() <= margin)) {
            rep.cls = "Psi2";
            const auto s = s_infinity(spec, (-1.0) * tau);
            rep.h = s.mid();
            rep.notes = s.notes;
            return rep;
        }
    }
    auto p_of = [&](double t) { return power_value(g, (-t) * tau).log_pressure; };
    double t_hi = 1.0;
    while (p_of(t_hi) > 0.0 && t_hi < 1e6) t_hi *= 2.0;
    // Psi1 witness scan on a geometric grid below t_hi.
    InfinitySchedules inner = sched;
    inner.run_route_b = false;
    for (double t = t_hi; t > 1e-4; t *= 0.5) {
        const auto pinf = pressure_at_infinity(spec, (-t) * tau, 1, inner);
        if (pinf.value.is_neg_inf()) continue;
        if (pinf.value.is_finite()) {
            const double v = pinf.value.finite_value();
            if (v > margin && v < 50.0) {
                rep.cls = "Psi1";
                rep.witness_t = t;
                rep.witness_value = v;
                // bisect the sign change of P_inf(-t tau) on [t, t_hi]
                const auto br = bisect_boundary(t, t_hi, 1e-3, [&](double s) {
                    const auto p = pressure_at_infinity(spec, (-s) * tau, 1, inner);
                    return p.value.is_finite() && p.value.finite_value() > 0.0;
                });
                rep.h = br.mid();
                return rep;
            }
        }
    }
    rep.cls = "Psi2";
    const auto s = s_infinity(spec, (-1.0) * tau);
    rep.h = s.mid();
    rep.notes = s.notes;
    return rep;
}

// ---------------------------------------------------------------------
// SPR test via P_inf < P.

struct SprReport {
    bool spr = false;
    bool conclusive = false;
    ExtReal pressure;
    ExtReal pressure_at_inf;
    double margin = 0.0;  // P - P_inf when both finite; +inf encoded by spr with -inf P_inf
    std::string notes;
};

inline SprReport spr_test(const CmsSpec& spec, const Potential& phi,
                          PressureLimitOptions plim = {}, InfinitySchedules sched = {}) {
    SprReport rep;
    const auto p = pressure_limit(spec, phi, plim);
    rep.pressure = p.value;
    if (!p.value.is_finite()) {
        rep.notes = "pressure not finite/conclusive";
        return rep;
    }
    const auto pinf = pressure_at_infinity(spec, phi, 1, sched);
    rep.pressure_at_inf = pinf.value;
    if (pinf.value.is_neg_inf()) {
        rep.spr = true;
        rep.conclusive = true;
        rep.margin = std::numeric_limits<double>::infinity();
        return rep;
    }
    if (!pinf.value.is_finite()) {
        rep.notes = "pressure at infinity undecided";
        return rep;
    }
    const double tol = 2.0 * (p.extrapolation_residual + 0.05);
    rep.margin = p.value.finite_value() - pinf.value.finite_value();
    rep.conclusive = true;
    rep.spr = rep.margin > tol;
    return rep;
}

// ---------------------------------------------------------------------
// Semi-continuity harness.

struct SemicontReport {
    double lhs = 0.0;    // empirical limsup of h + int phi over the prefix tail
    double rhs = 0.0;    // lambda (h_mu + int phi dmu) + (1-lambda) P_inf
    double slack = 0.0;  // rhs - lhs
    double lambda = 1.0;
    double tolerance = 0.0;
};

inline SemicontReport semicontinuity_check(const MeasureSequence& seq, const Potential& phi,
                                           const ExtReal& p_inf, int prefix) {
    if (prefix < 10) throw std::invalid_argument("semicontinuity_check: prefix >= 10");
    SemicontReport rep;
    rep.lambda = seq.limit_lambda;
    const int window = std::max(2, prefix / 4);
    double lhs = -std::numeric_limits<double>::infinity();
    for (int n = prefix - window; n < prefix; ++n) {
        const Mixture mu = seq.at(n);
        lhs = std::max(lhs, entropy(mu) + integrate(mu, phi));
    }
    rep.lhs = lhs;
    double limit_part = 0.0;
    if (seq.limit_lambda > 0.0) {
        if (!seq.limit_measure.has_value())
            throw std::invalid_argument("semicontinuity_check: sequence lacks a limit measure");
        const Mixture& mu = *seq.limit_measure;
        limit_part = seq.limit_lambda * (entropy(mu) + integrate(mu, phi));
    }
    double escape_part = 0.0;
    if (seq.limit_lambda < 1.0) {
        if (!p_inf.is_finite()) {
            if (p_inf.is_neg_inf())
                throw std::invalid_argument("semicontinuity_check: P_inf = -inf with escaping mass");
            throw std::invalid_argument("semicontinuity_check: inconclusive P_inf");
        }
        escape_part = (1.0 - seq.limit_lambda) * p_inf.finite_value();
    }
    rep.rhs = limit_part + escape_part;
    rep.slack = rep.rhs - rep.lhs;
    // Limit measures here are exact mixtures, so the only prefix
    // allowance is the estimation bias of P_inf, carried by the caller.
    rep.tolerance = 0.0;
    return rep;
}

// ---------------------------------------------------------------------
// Ergodic optimization.

struct OptimizationReport {
    double beta = 0.0;  // at the largest truncation
    ExtReal beta_inf;
    std::optional<Word> maximizing_cycle;
    std::string verdict;  // maximizer-found | escape | undecided
    std::vector<std::pair<int, double>> beta_by_truncation;
    double deep_cycle_estimate = 0.0;  // direct route for beta_inf
    bool deep_cycle_ran = false;
};

// beta on a truncation: maximum mean cycle weight, with the optimal
// cycle's periodic measure attaining it.
inline MeanCycle beta_on_truncation(const TruncatedGraph& g, const Potential& phi) {
    return max_mean_cycle(g, phi);
}

// beta_inf(phi) = lim_t P_inf(t phi)/t. The slope route is cross-checked
// against the deep-cycle direct route (restricted tropical DP). For
// first-coordinate potentials with a finite tail limit, escaping
// sequences pin beta_inf to that limit exactly.
inline ExtReal beta_infinity(const CmsSpec& spec, const Potential& phi,
                             InfinitySchedules sched = {}, double* direct_estimate = nullptr) {
    const bool escape_possible = spec.family == Family::renewal || spec.family == Family::full ||
                                 spec.family == Family::custom;
    if (!escape_possible) return ExtReal::neg_inf();
    if (phi.depth == 1 && phi.tail.present) {
        const ExtReal lim = phi.tail.limit();
        if (lim.is_neg_inf()) return ExtReal::neg_inf();
        if (lim.is_finite() && direct_estimate == nullptr) return lim;
        if (lim.is_finite()) {
            // direct route: best restricted deep-cycle mean on a truncation
            const int N = sched.truncation > 0 ? sched.truncation
                                               : detail::default_truncation(spec, sched.n_max);
            const TruncatedGraph g = build_truncation(spec, N);
            const auto [q, M] = sched.qm.front();
            const auto trop = tropical_restricted_sums(g, phi, 1, sched.n_max, q, M);
            double best = kNegInfLog;
            for (int n = sched.n_max / 2; n <= sched.n_max; ++n)
                if (trop[static_cast<std::size_t>(n)] != kNegInfLog)
                    best = std::max(best, trop[static_cast<std::size_t>(n)] / n);
            *direct_estimate = best;
            return lim;
        }
    }
    // slope route: P_inf(t phi)/t along a doubling schedule
    InfinitySchedules inner = sched;
    inner.run_route_b = false;
    double prev = 0.0;
    bool have = false;
    for (double t = 1.0; t <= 64.0; t *= 2.0) {
        const auto pinf = pressure_at_infinity(spec, t * phi, 1, inner);
        if (pinf.value.is_neg_inf()) return ExtReal::neg_inf();
        if (!pinf.value.is_finite()) return ExtReal::undecided();
        const double slope = pinf.value.finite_value() / t;
        if (have && std::abs(slope - prev) < 1e-3) return ExtReal::finite(slope);
        prev = slope;
        have = true;
    }
    return ExtReal::finite(prev);
}

inline OptimizationReport beta_report(const CmsSpec& spec, const Potential& phi,
                                      std::vector<int> trunc_schedule = {8, 16, 32, 64, 128},
                                      InfinitySchedules sched = {}) {
    OptimizationReport rep;
    MeanCycle last;
    for (int N : trunc_schedule) {
        try {
            const TruncatedGraph g = build_truncation(spec, N);
            last = beta_on_truncation(g, phi);
            rep.beta_by_truncation.emplace_back(N, last.value);
        } catch (const DegenerateTruncation&) {
            continue;
        }
        if (!spec.infinite_alphabet()) break;
    }
    if (rep.beta_by_truncation.empty())
        throw std::invalid_argument("beta_report: no usable truncation");
    rep.beta = rep.beta_by_truncation.back().second;
    double direct = kNegInfLog;
    rep.beta_inf = beta_infinity(spec, phi, sched, &direct);
    if (direct != kNegInfLog) {
        rep.deep_cycle_estimate = direct;
        rep.deep_cycle_ran = true;
    }
    // Verdict: maximizer when the truncation values stabilized strictly
    // above beta_inf; escape when they keep climbing toward beta_inf.
    const auto& tab = rep.beta_by_truncation;
    const double step = tab.size() >= 2 ? tab.back().second - tab[tab.size() - 2].second : 0.0;
    const bool stable = std::abs(step) < 1e-9;
    const bool above = rep.beta_inf.is_neg_inf() ||
                       (rep.beta_inf.is_finite() && rep.beta > rep.beta_inf.finite_value() + 1e-9);
    if (stable && above) {
        rep.verdict = "maximizer-found";
        rep.maximizing_cycle = last.cycle;
    } else if (rep.beta_inf.is_finite() && rep.beta <= rep.beta_inf.finite_value() + 1e-6) {
        rep.verdict = "escape";
    } else {
        rep.verdict = "undecided";
    }
    return rep;
}

// ---------------------------------------------------------------------
// Zero-temperature limits.

struct ZeroTempStep {
    double t = 0.0;
    double pressure = 0.0;
    double phi_integral = 0.0;
    double entropy_val = 0.0;
    double cylinder_gap = 0.0;  // rho distance to the previous equilibrium
};

struct ZeroTempReport {
    std::vector<ZeroTempStep> steps;
    bool monotone = true;
    std::string verdict;  // converged | spr-lost | partial
    MarkovMeasure final_measure;
};

// Equilibria mu_t of t*phi along a doubling schedule; int phi dmu_t is
// nondecreasing (within tolerance) by convexity, and cylinder distances
// give the Cauchy diagnostic.
inline ZeroTempReport zero_temperature(const CmsSpec& spec, const Potential& phi,
                                       const std::vector<double>& t_schedule, int truncation = 0,
                                       int cyl_depth = 3) {
    if (t_schedule.empty()) throw std::invalid_argument("zero_temperature: empty schedule");
    // Precondition beta_inf < beta on compact/SPR-producing setups.
    const auto binf = beta_infinity(spec, phi);
    const int N = truncation > 0 ? truncation : detail::default_truncation(spec, 64);
    const TruncatedGraph g = build_truncation(spec, N);
    const double beta_val = max_mean_cycle(g, phi).value;
    ZeroTempReport rep;
    if (binf.is_finite() && binf.finite_value() >= beta_val - 1e-9) {
        rep.verdict = "spr-lost";
        return rep;
    }
    std::optional<CylinderVector> prev;
    const int phase_hint = tropical_period(g, phi);
    for (double t : t_schedule) {
        const auto sp = spectral_pressure(g, t * phi, 1e-12, phase_hint);
        const auto& mu = sp.rpf.equilibrium;
        ZeroTempStep step;
        step.t = t;
        step.pressure = sp.report.value.finite_value();
        step.phi_integral = integrate(mu, phi);
        step.entropy_val = entropy(mu);
        const auto cv = cylinder_vector(Mixture::pure(mu), cyl_depth);
        if (prev) step.cylinder_gap = cylinder_distance(g, cv, *prev, cyl_depth);
        prev = cv;
        if (!rep.steps.empty() &&
            step.phi_integral < rep.steps.back().phi_integral - 1e-9)
            rep.monotone = false;
        rep.steps.push_back(step);
        rep.final_measure = mu;
    }
    rep.verdict = rep.monotone ? "converged" : "partial";
    return rep;
}

}  // namespace cms
