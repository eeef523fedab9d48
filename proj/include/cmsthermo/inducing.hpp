#pragma once

// First-return systems on a 1-cylinder: return-word census, induced
// potentials, the induced pressure curve t -> P(phi-bar + t*tau), the
// finiteness threshold p_a*, the discriminant, and the implied base
// pressure through the discriminant route.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cmsthermo/graph.hpp"
#include "cmsthermo/numerics.hpp"
#include "cmsthermo/potential.hpp"
#include "cmsthermo/pressure.hpp"

namespace cms {

// phi-bar(w) = S_tau phi read along the return word w = a b_1 .. b_{k-1}
// and back into [a]; exact for depth <= 2.
inline double induced_value(const Potential& phi, const Word& w, Symbol a) {
    if (phi.depth > 2) throw std::invalid_argument("induced_value: depth <= 2 required");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) s += phi.eval2(w[i], w[i + 1]);
    s += phi.eval2(w.back(), a);
    return s;
}

enum class InducedTail { none, finite_graph, renewal_family, star_family, full_depth1 };

struct InducedSystem {
    CmsSpec spec;
    Potential phi;
    Symbol base = 1;
    int census_limit = 0;  // L
    std::vector<Word> return_words;
    std::vector<double> tau;
    std::vector<double> phi_bar;
    InducedTail tail = InducedTail::none;
    TruncatedGraph trunc;  // truncation used for the census / finite tail
    bool census_truncated = false;  // blowup guard tripped
};

// Enumerates return words a b_1 .. b_{k-1} (b_i != a, b_{k-1} -> a) up to
// length L by DFS avoiding a, and attaches the family tail law.
inline InducedSystem build_induced(const CmsSpec& spec, const Potential& phi, Symbol a, int L,
                                   std::size_t word_cap = 1000000, int truncation = 0) {
    InducedSystem ind;
    ind.spec = spec;
    ind.phi = phi;
    ind.base = a;
    ind.census_limit = L;
    const int N = truncation > 0
                      ? truncation
                      : (spec.infinite_alphabet() ? std::max(L + 1, 64) : spec.max_finite_vertex());
    ind.trunc = build_truncation(spec, N);
    const TruncatedGraph& g = ind.trunc;
    if (g.index_of(a) < 0 || !g.in_core(g.index_of(a)))
        throw std::invalid_argument("build_induced: base symbol not on a cycle");
    Word w{a};
    std::function<void()> rec = [&]() {
        if (g.has_edge(w.back(), a)) {
            ind.return_words.push_back(w);
            ind.tau.push_back(static_cast<double>(w.size()));
            ind.phi_bar.push_back(induced_value(phi, w, a));
            if (ind.return_words.size() > word_cap) {
                ind.census_truncated = true;
                throw std::length_error("build_induced: word cap exceeded");
            }
        }
        if (static_cast<int>(w.size()) >= L) return;
        for (Symbol b : g.vertices) {
            if (b == a || !g.has_edge(w.back(), b)) continue;
            w.push_back(b);
            rec();
            w.pop_back();
        }
    };
    try {
        rec();
    } catch (const std::length_error&) {
        throw std::runtime_error("build_induced: census cap exceeded with " +
                                 std::to_string(ind.return_words.size()) + " words");
    }
    switch (spec.family) {
        case Family::renewal: ind.tail = a == 1 ? InducedTail::renewal_family : InducedTail::finite_graph; break;
        case Family::star: ind.tail = InducedTail::star_family; break;
        case Family::full: ind.tail = phi.depth == 1 ? InducedTail::full_depth1 : InducedTail::none; break;
        case Family::golden:
        case Family::finite_graph: ind.tail = InducedTail::finite_graph; break;
        default: ind.tail = InducedTail::none; break;
    }
    return ind;
}

namespace detail {

// Numeric series sum in log domain. Stops: divergence cap, geometric
// tail completion once the term ratio stabilizes, negligible-term stop,
// and at the horizon a fitted model t_k ~ C k^{-s} e^{-gamma k} decides
// between divergence (s <= 1, gamma ~ 0), an Euler-Maclaurin polynomial
// completion (s > 1), or an honest undecided verdict in the mixed regime.
struct SeriesSum {
    ExtReal value;
    double tail_bound = 0.0;
};

template <class TermFn>
SeriesSum log_series_sum(TermFn&& logterm, long long k0, long long k_max = 400000,
                         double divergence_cap = 80.0) {
    LogAccumulator acc;
    double prev = kNegInfLog;
    double ratio = 0.0;
    int stable = 0;
    const long long kc1 = std::max(k0 + 1, k_max / 4);
    const long long kc2 = std::max(kc1 + 1, k_max / 2);
    double t1 = kNegInfLog, t2 = kNegInfLog, t3 = kNegInfLog;
    for (long long k = k0; k <= k_max; ++k) {
        const double lt = logterm(k);
        if (k == kc1) t1 = lt;
        if (k == kc2) t2 = lt;
        if (k == k_max) t3 = lt;
        if (lt != kNegInfLog) {
            acc.add(lt);
            if (acc.log_total() > divergence_cap) return {ExtReal::pos_inf(), 0.0};
            if (prev != kNegInfLog) {
                const double r = lt - prev;
                if (std::abs(r - ratio) < 1e-12) ++stable;
                else stable = 0;
                ratio = r;
                if (stable > 32 && ratio < -1e-12) {
                    const double tail = lt + ratio - std::log1p(-std::exp(ratio));
                    LogAccumulator done = acc;
                    done.add(tail);
                    return {ExtReal::finite(done.log_total()), std::exp(tail)};
                }
                if (stable > 64 && ratio >= -1e-12) return {ExtReal::pos_inf(), 0.0};
            }
            if (!acc.empty() && lt < acc.log_total() - 42.0 && lt < prev)
                return {ExtReal::finite(acc.log_total()), std::exp(lt)};
            prev = lt;
        }
    }
    if (t1 == kNegInfLog || t2 == kNegInfLog || t3 == kNegInfLog)
        return {ExtReal::undecided(), 0.0};
    // Model fit from the three checkpoints.
    const double gamma = (2.0 * t2 - t1 - t3) * 4.0 / static_cast<double>(k_max);
    const double s = -((t2 - t1) + gamma * static_cast<double>(k_max) / 4.0) / std::log(2.0);
    const double gk = gamma * static_cast<double>(k_max);
    if (gk > 40.0) return {ExtReal::finite(acc.log_total()), std::exp(t3)};
    if (gk < -0.02) return {ExtReal::pos_inf(), 0.0};
    if (std::abs(gk) < 0.02) {
        if (s <= 1.0) return {ExtReal::pos_inf(), 0.0};
        if (s < 1.05) return {ExtReal::undecided(), 0.0};
        const double factor = static_cast<double>(k_max) / (s - 1.0) - 0.5;
        if (factor > 0.0) {
            const double tail = t3 + std::log(factor);
            LogAccumulator done = acc;
            done.add(tail);
            return {ExtReal::finite(done.log_total()), std::exp(t3)};
        }
        return {ExtReal::finite(acc.log_total()), std::exp(t3)};
    }
    // Mixed regime: complete the fitted tail C k^{-s} e^{-gamma k} by
    // Simpson quadrature of K * int_0^inf (1+u)^{-s} e^{-gk u} du.
    {
        const double U = 60.0 / std::max(gk, 1.0);
        const int m = 4096;
        const double h = U / m;
        double integral = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double u = i * h;
            const double f = std::exp(-s * std::log1p(u) - gk * u);
            const double wgt = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            integral += wgt * f;
        }
        integral *= h / 3.0;
        const double factor = static_cast<double>(k_max) * integral - 0.5;
        if (factor > 0.0) {
            const double tail = t3 + std::log(factor);
            LogAccumulator done = acc;
            done.add(tail);
            return {ExtReal::finite(done.log_total()), std::exp(tail) * 1e-3 + std::exp(t3)};
        }
        return {ExtReal::finite(acc.log_total()), std::exp(t3)};
    }
}

// Spectral radius of the weighted subgraph off the base symbol: the
// finiteness threshold of the induced series is p* = -log rho.
inline ExtReal off_symbol_log_radius(const TruncatedGraph& g, const Potential& phi, Symbol a) {
    // Induced subgraph on V \ {a}, as an explicit finite family.
    std::vector<std::pair<Symbol, Symbol>> edges;
    for (auto& [u, v] : g.edges())
        if (u != a && v != a) edges.emplace_back(u, v);
    if (edges.empty()) return ExtReal::neg_inf();  // nilpotent: rho = 0
    try {
        const CmsSpec sub = CmsSpec::finite(edges);
        const TruncatedGraph sg = build_truncation(sub, sub.max_finite_vertex());
        // max over cyclic SCCs: the builder picked the largest, but other
        // SCCs can carry larger weight; scan all cyclic SCCs.
        int n_comp = 0;
        const auto comp = detail::tarjan_scc(sg, n_comp);
        std::vector<std::vector<int>> members(static_cast<std::size_t>(n_comp));
        for (int v = 0; v < sg.size(); ++v) members[static_cast<std::size_t>(comp[v])].push_back(v);
        double best = kNegInfLog;
        for (auto& mem : members) {
            const bool cyclic = mem.size() > 1 || sg.edge_idx(mem[0], mem[0]);
            if (!cyclic) continue;
            std::vector<std::pair<Symbol, Symbol>> sub_edges;
            for (int u : mem)
                sg.for_each_out(u, [&](int v) {
                    if (std::find(mem.begin(), mem.end(), v) != mem.end())
                        sub_edges.emplace_back(sg.vertices[static_cast<std::size_t>(u)],
                                               sg.vertices[static_cast<std::size_t>(v)]);
                });
            const CmsSpec scc_spec = CmsSpec::finite(sub_edges);
            const TruncatedGraph sccg = build_truncation(scc_spec, scc_spec.max_finite_vertex());
            best = std::max(best, spectral_pressure(sccg, phi).report.value.finite_value());
        }
        return best == kNegInfLog ? ExtReal::neg_inf() : ExtReal::finite(best);
    } catch (const DegenerateTruncation&) {
        return ExtReal::neg_inf();
    }
}

}  // namespace detail

// Full-shift first-coordinate series sum_b e^{a(b)} over the whole
// alphabet, with integral-test tail completion for power laws.
inline ExtReal full_shift_first_coord_series(const Potential& phi, double* tail_err = nullptr) {
    if (phi.depth != 1) throw std::invalid_argument("first_coord_series: depth-1 required");
    const auto kind = phi.tail.present ? phi.tail.series_finiteness() : ExtReal::Kind::undecided;
    if (kind == ExtReal::Kind::plus_inf) return ExtReal::pos_inf();
    const long long N = 2000000;
    LogAccumulator acc;
    for (long long i = 1; i <= N; ++i) acc.add(phi.eval2(static_cast<Symbol>(i), 0));
    double err = 0.0;
    if (phi.tail.present && phi.tail.c_exp == 0.0 && phi.tail.beta_log > 1.0) {
        // integral bracket for the pure power-law part
        const double beta = phi.tail.beta_log;
        const double tail_log =
            phi.tail.shift + (1.0 - beta) * std::log(static_cast<double>(N)) - std::log(beta - 1.0);
        acc.add(tail_log);
        err = std::exp(tail_log) * (std::pow(1.0 + 1.0 / static_cast<double>(N), beta) - 1.0) +
              std::exp(tail_log - std::log(static_cast<double>(N)));
    }
    if (tail_err) *tail_err = err;
    if (kind == ExtReal::Kind::undecided && !phi.tail.present) return ExtReal::undecided();
    return ExtReal::finite(acc.log_total());
}

// log sum_w e^{phi-bar(w) + t tau(w)} over all return words, evaluated
// with the family tail law. +inf on divergence, undecided when no tail
// law applies and the partial sums are still growing.
inline ExtReal induced_pressure_curve(const InducedSystem& ind, double t) {
    const Symbol a = ind.base;
    switch (ind.tail) {
        case InducedTail::renewal_family: {
            // one loop per length: w_k = 1 k (k-1) ... 2. The descending
            // part is accumulated incrementally (the series summer visits
            // k in order), so each term costs O(1).
            const Potential& phi = ind.phi;
            auto logterm = [&phi, t, a, desc_sum = 0.0, next_k = 2LL](long long k) mutable {
                if (k == 1) return phi.eval2(a, a) + t;
                while (next_k <= k) {
                    desc_sum += phi.eval2(static_cast<Symbol>(next_k), static_cast<Symbol>(next_k - 1));
                    ++next_k;
                }
                return phi.eval2(1, static_cast<Symbol>(k)) + desc_sum + t * static_cast<double>(k);
            };
            return detail::log_series_sum(logterm, 1).value;
        }
        case InducedTail::star_family: {
            // every return has length 2
            const Potential& phi = ind.phi;
            if (a == 1) {
                auto logterm = [&phi, t](long long n) {
                    return phi.eval2(1, static_cast<Symbol>(n)) + phi.eval2(static_cast<Symbol>(n), 1) + 2.0 * t;
                };
                return detail::log_series_sum(logterm, 2).value;
            }
            return ExtReal::finite(ind.phi.eval2(a, 1) + ind.phi.eval2(1, a) + 2.0 * t);
        }
        case InducedTail::full_depth1: {
            // A_k = e^{a(a)} S^{k-1}; curve = a(a) + t - log(1 - S e^t)
            const ExtReal all = full_shift_first_coord_series(ind.phi);
            if (all.is_pos_inf()) return ExtReal::pos_inf();
            if (!all.is_finite()) return ExtReal::undecided();
            const double head = ind.phi.eval2(a, 0);
            // S = sum_{b != a} e^{a(b)} computed stably: total minus head
            const double total = all.finite_value();
            if (head >= total) return ExtReal::finite(head + t);  // degenerate single-symbol mass
            const double s_off = total + std::log1p(-std::exp(head - total));
            const double x = s_off + t;
            if (x >= 0.0) return ExtReal::pos_inf();
            return ExtReal::finite(head + t - std::log1p(-std::exp(x)));
        }
        case InducedTail::finite_graph: {
            const ExtReal log_rho = detail::off_symbol_log_radius(ind.trunc, ind.phi, a);
            if (log_rho.is_finite() && t + log_rho.finite_value() >= 0.0) return ExtReal::pos_inf();
            // exact geometric-tail summation of A_k over path weights off a
            const TruncatedGraph& g = ind.trunc;
            const int ai = g.index_of(a);
            EdgeWeights w(g, ind.phi);
            LogAccumulator acc;
            if (g.edge_idx(ai, ai)) acc.add(w(ai, ai) + t);
            const int n = g.size();
            std::vector<double> u(static_cast<std::size_t>(n), kNegInfLog);
            g.for_each_out(ai, [&](int j) {
                if (j != ai) u[static_cast<std::size_t>(j)] = w(ai, j);
            });
            double prev_a = kNegInfLog;
            for (int k = 2; k <= 200000; ++k) {
                LogAccumulator close;
                bool alive = false;
                for (int j = 0; j < n; ++j) {
                    if (j == ai || u[static_cast<std::size_t>(j)] == kNegInfLog) continue;
                    alive = true;
                    if (g.edge_idx(j, ai)) close.add(u[static_cast<std::size_t>(j)] + w(j, ai));
                }
                const double ak = close.log_total() + t * k;
                if (ak != kNegInfLog) acc.add(ak);
                if (!alive) break;  // nilpotent off-a subgraph
                if (ak != kNegInfLog && !acc.empty() && ak < acc.log_total() - 42.0 && ak < prev_a)
                    break;
                prev_a = ak;
                std::vector<LogAccumulator> nxt(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) {
                    if (i == ai || u[static_cast<std::size_t>(i)] == kNegInfLog) continue;
                    const double ui = u[static_cast<std::size_t>(i)];
                    g.for_each_out(i, [&](int j) {
                        if (j != ai) nxt[static_cast<std::size_t>(j)].add(ui + w(i, j));
                    });
                }
                for (int j = 0; j < n; ++j) u[static_cast<std::size_t>(j)] = nxt[static_cast<std::size_t>(j)].log_total();
            }
            return acc.empty() ? ExtReal::neg_inf() : ExtReal::finite(acc.log_total());
        }
        default: {
            // census-only partial sums: usable as a lower bound; undecided
            // when the census was trimmed.
            LogAccumulator acc;
            for (std::size_t i = 0; i < ind.return_words.size(); ++i)
                acc.add(ind.phi_bar[i] + t * ind.tau[i]);
            if (ind.census_truncated) return ExtReal::undecided();
            return acc.empty() ? ExtReal::neg_inf() : ExtReal::finite(acc.log_total());
        }
    }
}

// p_a* = sup { t : P(phi-bar + t) < infinity }.
inline ExtReal induced_finiteness_threshold(const InducedSystem& ind) {
    switch (ind.tail) {
        case InducedTail::finite_graph: {
            const ExtReal log_rho = detail::off_symbol_log_radius(ind.trunc, ind.phi, ind.base);
            if (log_rho.is_neg_inf()) return ExtReal::pos_inf();  // finitely many words
            return ExtReal::finite(-log_rho.finite_value());
        }
        case InducedTail::star_family: {
            const ExtReal a2 = induced_pressure_curve(ind, 0.0);
            if (a2.is_pos_inf()) return ExtReal::neg_inf();
            if (a2.is_undecided()) return ExtReal::undecided();
            return ExtReal::pos_inf();  // tau == 2: finiteness independent of t
        }
        case InducedTail::full_depth1: {
            const ExtReal all = full_shift_first_coord_series(ind.phi);
            if (all.is_pos_inf()) return ExtReal::neg_inf();
            if (!all.is_finite()) return ExtReal::undecided();
            const double head = ind.phi.eval2(ind.base, 0);
            const double total = all.finite_value();
            if (head >= total) return ExtReal::pos_inf();
            const double s_off = total + std::log1p(-std::exp(head - total));
            return ExtReal::finite(-s_off);
        }
        case InducedTail::renewal_family: {
            // ratio limit of phi-bar increments along the loop family,
            // Richardson-extrapolated in 1/k
            const Potential& phi = ind.phi;
            auto delta = [&phi](long long k) {
                return phi.eval2(1, static_cast<Symbol>(k + 1)) - phi.eval2(1, static_cast<Symbol>(k)) +
                       phi.eval2(static_cast<Symbol>(k + 1), static_cast<Symbol>(k));
            };
            const double d16 = delta(1 << 16), d18 = delta(1 << 18), d20 = delta(1 << 20);
            const double r1 = (4.0 * d18 - d16) / 3.0;
            const double r2 = (4.0 * d20 - d18) / 3.0;
            if (std::abs(r1 - r2) > 1e-7) return ExtReal::undecided();
            return ExtReal::finite(-r2);
        }
        default:
            return ExtReal::undecided();
    }
}

struct DiscriminantReport {
    ExtReal p_star;
    ExtReal delta;
    std::optional<double> root;  // p(phi), when Delta >= 0
    std::string classification;  // SPR | boundary | transient | undecided
    ExtReal implied_pressure;    // -p(phi), or -p_a* when Delta < 0
};

// The discriminant Delta_a(phi) as the left limit of the induced pressure
// curve at p_a* (the curve is monotone increasing, so sup = left limit),
// with the implied base pressure via the unique root of the curve.
inline DiscriminantReport discriminant(const InducedSystem& ind, double tol = 1e-9) {
    DiscriminantReport rep;
    rep.p_star = induced_finiteness_threshold(ind);
    if (rep.p_star.is_undecided()) {
        rep.classification = "undecided";
        rep.delta = ExtReal::undecided();
        rep.implied_pressure = ExtReal::undecided();
        return rep;
    }
    auto curve = [&](double t) { return induced_pressure_curve(ind, t); };
    // Delta = sup_{t < p*} curve(t) = the curve's value at p* by monotone
    // convergence (the tail-completing series summer makes this exact up
    // to the completion residual).
    if (rep.p_star.is_pos_inf()) {
        rep.delta = ExtReal::pos_inf();
    } else if (rep.p_star.is_neg_inf()) {
        rep.delta = ExtReal::neg_inf();
        rep.classification = "undecided";
        rep.implied_pressure = ExtReal::undecided();
        return rep;
    } else {
        const ExtReal at_star = curve(rep.p_star.finite_value());
        if (at_star.is_pos_inf() || (at_star.is_finite() && at_star.finite_value() > 50.0)) {
            rep.delta = ExtReal::pos_inf();
        } else if (at_star.is_finite()) {
            rep.delta = at_star;
        } else {
            rep.delta = ExtReal::undecided();
            rep.classification = "undecided";
            rep.implied_pressure = ExtReal::undecided();
            return rep;
        }
    }
    // The completion residual bounds how finely the sign is decidable.
    const double class_tol = std::max(tol, 1e-7);
    const double delta_sign = rep.delta.is_pos_inf() ? 1.0 : rep.delta.finite_value();
    if (delta_sign < -class_tol) {
        rep.classification = "transient";
        rep.implied_pressure = ExtReal::finite(-rep.p_star.finite_value());
        return rep;
    }
    rep.classification =
        std::abs(delta_sign) <= class_tol && rep.delta.is_finite() ? "boundary" : "SPR";
    // Root of curve(t) = 0 on (-inf, p*): widen the bracket down from p*.
    double hi = rep.p_star.is_finite() ? rep.p_star.finite_value() - 1e-12 : 0.0;
    auto curve_val = [&](double t) {
        const ExtReal c = curve(t);
        if (c.is_pos_inf()) return 1e9;
        if (c.is_neg_inf()) return -1e9;
        if (c.is_undecided()) throw std::runtime_error("discriminant: undecided curve value");
        return c.finite_value();
    };
    double chi = curve_val(hi);
    while (chi < 0.0 && rep.p_star.is_pos_inf()) {
        // p* = +inf: walk up until the curve crosses zero
        hi += std::max(1.0, std::abs(hi));
        chi = curve_val(hi);
    }
    if (chi < 0.0) {
        // Delta in [-tol, 0): boundary case, root pinned at p*.
        rep.root = rep.p_star.finite_value();
        rep.implied_pressure = ExtReal::finite(-*rep.root);
        return rep;
    }
    double lo = std::min(hi - 1.0, -1.0);
    while (curve_val(lo) > 0.0) {
        lo = lo * 2.0 - 1.0;
        if (lo < -1e6) throw std::runtime_error("discriminant: root bracket failed");
    }
    const auto br = bisect_boundary(lo, hi, tol, [&](double t) { return curve_val(t) <= 0.0; });
    rep.root = br.mid();
    rep.implied_pressure = ExtReal::finite(-*rep.root);
    return rep;
}

struct SprCertificate {
    bool spr = false;
    bool conclusive = false;
    DiscriminantReport report;
};

// SPR through the induced route: Delta_a(phi) > 0.
inline SprCertificate spr_certificate_induced(const CmsSpec& spec, const Potential& phi, Symbol a,
                                              int L = 64) {
    SprCertificate cert;
    cert.report = discriminant(build_induced(spec, phi, a, L));
    if (cert.report.classification == "undecided") return cert;
    cert.conclusive = true;
    cert.spr = cert.report.classification == "SPR";
    return cert;
}

}  // namespace cms
