#pragma once

// Suspension flows over a CMS with roof tau: flow pressure and flow
// pressure at infinity by root-finding on the base, the Ambrose-Kakutani
// measure correspondence with flow cylinder masses, and the flow SPR test.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cmsthermo/graph.hpp"
#include "cmsthermo/infinity.hpp"
#include "cmsthermo/measure.hpp"
#include "cmsthermo/numerics.hpp"
#include "cmsthermo/potential.hpp"
#include "cmsthermo/pressure.hpp"

namespace cms {

// Flow data: base shift, roof tau (bounded away from zero), and the flow
// potential given through its integrated symbol Delta_phi. Boundedness of
// the pointwise flow potential cannot be checked from Delta_phi alone and
// is carried as a declared flag.
struct SuspensionSpec {
    CmsSpec base;
    Potential roof;
    Potential delta_phi;
    bool flow_potential_bounded_declared = true;

    [[nodiscard]] double window_height(const TruncatedGraph& g) const {
        // c = inf tau, evaluated exactly on the truncation
        double c = std::numeric_limits<double>::infinity();
        for (auto& [a, b] : g.edges()) c = std::min(c, roof.eval2(a, b));
        if (!(c > 0.0)) throw std::invalid_argument("SuspensionSpec: roof not bounded away from zero");
        return c;
    }
};

// P^Theta = inf { t : P(Delta_phi - t tau) <= 0 }, found by bisection on
// truncations; the map t -> P(...) is strictly decreasing since tau > 0.
inline PressureReport suspension_pressure(const SuspensionSpec& spec,
                                          std::vector<int> trunc_schedule = {16, 32, 64},
                                          double tol = 1e-9) {
    PressureReport rep;
    rep.method = "root-bisection";
    rep.trunc_schedule = trunc_schedule;
    std::optional<double> root;
    for (int N : trunc_schedule) {
        TruncatedGraph g;
        try {
            g = build_truncation(spec.base, N);
        } catch (const DegenerateTruncation&) {
            continue;
        }
        auto f = [&](double t) {
            return power_value(g, spec.delta_phi - t * spec.roof).log_pressure;
        };
        Bracket br;
        try {
            br = widen_decreasing_bracket(f);
        } catch (const std::runtime_error&) {
            rep.value = ExtReal::pos_inf();
            rep.notes = "no finite bracket: pressure stays positive";
            return rep;
        }
        const auto b = bisect_boundary(br.lo, br.hi, tol, [&](double t) { return f(t) > 0.0; });
        root = b.mid();
        rep.by_truncation.emplace_back(N, *root);
        if (!spec.base.infinite_alphabet()) break;
    }
    if (!root.has_value()) {
        rep.value = ExtReal::undecided();
        rep.notes = "all truncations degenerate";
        return rep;
    }
    rep.value = ExtReal::finite(*root);
    if (rep.by_truncation.size() >= 2)
        rep.extrapolation_residual = std::abs(rep.by_truncation.back().second -
                                              rep.by_truncation[rep.by_truncation.size() - 2].second);
    rep.period = 1;
    return rep;
}

// P_inf^Theta = inf { t : P_inf(Delta_phi - t tau) <= 0 }; equals h(tau)
// for the zero flow potential, and -inf over bases with no escaping mass.
inline InfinityReport suspension_pressure_at_infinity(const SuspensionSpec& spec,
                                                      InfinitySchedules sched = {}) {
    InfinityReport rep;
    // Zero flow potential: reduce to the roof threshold.
    const bool zero_phi = spec.delta_phi.is_constant() && spec.delta_phi.tail.shift == 0.0;
    InfinitySchedules inner = sched;
    inner.run_route_b = false;
    if (zero_phi) {
        const auto roof_rep = h_of_roof(spec.base, spec.roof, inner);
        const auto pinf = pressure_at_infinity(spec.base, Potential::zero(), 1, inner);
        if (pinf.value.is_neg_inf()) {
            rep.value = ExtReal::neg_inf();
            rep.route = "restricted-sums";
            rep.rows = pinf.rows;
            rep.notes = "no escaping sequences on the base";
            return rep;
        }
        rep.value = ExtReal::finite(roof_rep.h);
        rep.route = "restricted-sums";
        rep.notes = "h(tau) via " + roof_rep.cls;
        return rep;
    }
    // General flow potential: bisection on the sign of P_inf.
    const auto at = [&](double t) {
        return pressure_at_infinity(spec.base, spec.delta_phi - t * spec.roof, 1, inner);
    };
    const auto p0 = at(0.0);
    if (p0.value.is_neg_inf()) {
        rep.value = ExtReal::neg_inf();
        rep.route = "restricted-sums";
        rep.rows = p0.rows;
        return rep;
    }
    if (p0.value.is_undecided()) {
        rep.value = ExtReal::undecided();
        rep.notes = "base pressure at infinity undecided";
        return rep;
    }
    double lo = 0.0, hi = 1.0;
    if (p0.value.finite_value() <= 0.0) {
        // root below zero
        lo = -1.0;
        while (at(lo).value.is_finite() && at(lo).value.finite_value() <= 0.0 && lo > -64.0) {
            hi = lo;
            lo *= 2.0;
        }
    } else {
        while (at(hi).value.is_finite() && at(hi).value.finite_value() > 0.0 && hi < 64.0) {
            lo = hi;
            hi *= 2.0;
        }
    }
    const auto br = bisect_boundary(lo, hi, 1e-3, [&](double t) {
        const auto p = at(t);
        return p.value.is_finite() && p.value.finite_value() > 0.0;
    });
    rep.value = ExtReal::finite(br.mid());
    rep.route = "restricted-sums";
    return rep;
}

// A flow-invariant sub-probability measure through the Ambrose-Kakutani
// correspondence: nu = lambda * (mu x Leb) / int tau dmu.
struct FlowMeasureView {
    Mixture base;
    double lambda = 1.0;
    double tau_integral = 0.0;
    double window = 0.0;  // c = inf tau

    static FlowMeasureView from(const SuspensionSpec& spec, Mixture mu, double lambda,
                                const TruncatedGraph& g) {
        FlowMeasureView v;
        v.window = spec.window_height(g);
        v.tau_integral = integrate(mu, spec.roof);
        v.base = std::move(mu);
        v.lambda = lambda;
        return v;
    }

    // nu(C x [0,c]) = c mu(C) / int tau dmu
    [[nodiscard]] double flow_cylinder_mass(const Word& w) const {
        if (lambda == 0.0) return 0.0;
        return lambda * window * cylinder_mass(base, w) / tau_integral;
    }
};

struct FlowMassTable {
    std::vector<std::pair<Word, double>> entries;
    double window = 0.0;
};

inline FlowMassTable flow_cylinder_masses(const FlowMeasureView& view, const TruncatedGraph& g,
                                          int depth) {
    FlowMassTable t;
    t.window = view.window;
    for (int len = 1; len <= depth; ++len)
        for (const Word& w : admissible_words(g, len))
            t.entries.emplace_back(w, view.flow_cylinder_mass(w));
    return t;
}

// rho_tau: the flow analog of the cylinder metric under the canonical
// enumeration, with windows of height c.
inline double flow_cylinder_distance(const TruncatedGraph& g, const FlowMeasureView& a,
                                     const FlowMeasureView& b, int depth) {
    double rho = 0.0;
    double weight = 0.5;
    for (int len = 1; len <= depth; ++len)
        for (const Word& w : admissible_words(g, len)) {
            rho += weight * std::abs(a.flow_cylinder_mass(w) - b.flow_cylinder_mass(w));
            weight *= 0.5;
        }
    return rho;
}

struct FlowSprReport {
    bool spr = false;
    bool conclusive = false;
    ExtReal pressure;          // P^Theta
    ExtReal pressure_at_inf;   // P^Theta_inf
    double margin = 0.0;
    double equilibrium_free_energy = 0.0;  // flow free energy of the witness
    std::optional<MarkovMeasure> witness_base;
    std::string notes;
};

// SPR for the flow: P^Theta - P^Theta_inf > 2 tol; on SPR instances the
// witness is the base RPF measure of Delta_phi - P^Theta tau, whose flow
// free energy (h + int Delta_phi) / int tau reproduces P^Theta.
inline FlowSprReport flow_spr_test(const SuspensionSpec& spec,
                                   std::vector<int> trunc_schedule = {16, 32, 64},
                                   InfinitySchedules sched = {}) {
    FlowSprReport rep;
    const auto p = suspension_pressure(spec, trunc_schedule);
    rep.pressure = p.value;
    if (!p.value.is_finite()) {
        rep.notes = "flow pressure not finite";
        return rep;
    }
    const auto pinf = suspension_pressure_at_infinity(spec, sched);
    rep.pressure_at_inf = pinf.value;
    const TruncatedGraph g = build_truncation(
        spec.base, trunc_schedule.empty() ? 32 : trunc_schedule.back());
    const auto sp = spectral_pressure(g, spec.delta_phi - p.value.finite_value() * spec.roof);
    const auto& mu = sp.rpf.equilibrium;
    rep.witness_base = mu;
    rep.equilibrium_free_energy =
        (entropy(mu) + integrate(mu, spec.delta_phi)) / integrate(mu, spec.roof);
    if (pinf.value.is_neg_inf()) {
        rep.spr = true;
        rep.conclusive = true;
        rep.margin = std::numeric_limits<double>::infinity();
        return rep;
    }
    if (!pinf.value.is_finite()) {
        rep.notes = "flow pressure at infinity undecided";
        return rep;
    }
    rep.conclusive = true;
    rep.margin = p.value.finite_value() - pinf.value.finite_value();
    rep.spr = rep.margin > 2.0 * (0.05 + p.extrapolation_residual);
    return rep;
}

}  // namespace cms
