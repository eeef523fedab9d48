#pragma once

// JSON report emitters (schema 1) and plot-ready CSV tables.

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cmsthermo/infinity.hpp"
#include "cmsthermo/inducing.hpp"
#include "cmsthermo/measure.hpp"
#include "cmsthermo/pressure.hpp"
#include "cmsthermo/suspension.hpp"

namespace cms {

using json = nlohmann::ordered_json;

inline json to_json(const ExtReal& x) {
    switch (x.kind) {
        case ExtReal::Kind::finite: return x.value;
        case ExtReal::Kind::plus_inf: return "inf";
        case ExtReal::Kind::minus_inf: return "-inf";
        default: return "undecided";
    }
}

inline json to_json(const PressureReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "pressure";
    j["value"] = to_json(r.value);
    j["method"] = r.method;
    j["period"] = r.period;
    j["trunc_schedule"] = r.trunc_schedule;
    j["by_truncation"] = r.by_truncation;
    j["sequence"] = r.sequence;
    j["slopes"] = r.slopes;
    j["aitken"] = {{"value", r.aitken_value}, {"residual", r.aitken_residual}};
    j["extrapolation_residual"] = r.extrapolation_residual;
    j["notes"] = r.notes;
    return j;
}

inline json to_json(const InfinityReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "pressure-at-infinity";
    j["value"] = to_json(r.value);
    j["route"] = r.route;
    j["value_restricted_sums"] = to_json(r.value_a);
    j["value_penalized_limit"] = to_json(r.value_b);
    j["agreement_gap"] = r.agreement_gap;
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"q", row.q},
                        {"M", row.M},
                        {"estimate", to_json(row.estimate)},
                        {"residual", row.residual},
                        {"provably_empty", row.provably_empty},
                        {"empty_at_horizon", row.empty_at_horizon}});
    j["rows"] = rows;
    j["penalized_trail"] = r.penalized_trail;
    j["notes"] = r.notes;
    return j;
}

inline json to_json(const DiscriminantReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "discriminant";
    j["p_star"] = to_json(r.p_star);
    j["delta"] = to_json(r.delta);
    if (r.root.has_value()) j["root"] = *r.root;
    j["classification"] = r.classification;
    j["implied_pressure"] = to_json(r.implied_pressure);
    return j;
}

inline json to_json(const SprReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "spr";
    j["spr"] = r.spr;
    j["conclusive"] = r.conclusive;
    j["pressure"] = to_json(r.pressure);
    j["pressure_at_infinity"] = to_json(r.pressure_at_inf);
    j["margin"] = std::isinf(r.margin) ? json("inf") : json(r.margin);
    j["notes"] = r.notes;
    return j;
}

inline json to_json(const SInfinityReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "s-infinity";
    j["lo"] = r.lo;
    j["hi"] = r.hi;
    j["value"] = r.mid();
    j["exact"] = r.exact;
    j["notes"] = r.notes;
    return j;
}

inline json to_json(const RoofReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "roof-threshold";
    j["h"] = r.h;
    j["class"] = r.cls;
    j["witness_t"] = r.witness_t;
    j["witness_value"] = r.witness_value;
    j["notes"] = r.notes;
    return j;
}

inline json to_json(const OptimizationReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "ergodic-optimization";
    j["beta"] = r.beta;
    j["beta_infinity"] = to_json(r.beta_inf);
    if (r.maximizing_cycle.has_value()) j["maximizing_cycle"] = *r.maximizing_cycle;
    j["verdict"] = r.verdict;
    j["beta_by_truncation"] = r.beta_by_truncation;
    if (r.deep_cycle_ran) j["deep_cycle_estimate"] = r.deep_cycle_estimate;
    return j;
}

inline json to_json(const ZeroTempReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "zero-temperature";
    json steps = json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"t", s.t},
                         {"pressure", s.pressure},
                         {"phi_integral", s.phi_integral},
                         {"entropy", s.entropy_val},
                         {"cylinder_gap", s.cylinder_gap}});
    j["steps"] = steps;
    j["monotone"] = r.monotone;
    j["verdict"] = r.verdict;
    return j;
}

inline json to_json(const SemicontReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "semicontinuity";
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["slack"] = r.slack;
    j["lambda"] = r.lambda;
    j["tolerance"] = r.tolerance;
    return j;
}

inline json to_json(const MassLossReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "mass-loss";
    j["prefix"] = r.prefix;
    j["table"] = r.table;
    return j;
}

inline json to_json(const FlowSprReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "flow-spr";
    j["P_theta"] = to_json(r.pressure);
    j["P_theta_inf"] = to_json(r.pressure_at_inf);
    j["spr"] = r.spr;
    j["margin"] = std::isinf(r.margin) ? json("inf") : json(r.margin);
    j["equilibrium_free_energy"] = r.equilibrium_free_energy;
    j["notes"] = r.notes;
    return j;
}

inline json to_json(const RomeReport& r) {
    json j;
    j["schema"] = 1;
    j["kind"] = "uniform-rome";
    j["value"] = r.value;
    j["family_exact"] = r.family_exact;
    j["longest_path"] = r.longest_path;
    return j;
}

// MarkovMeasure: {order, states, P (row-major), pi}
inline json to_json(const MarkovMeasure& m) {
    json j;
    j["order"] = m.order;
    j["states"] = m.states;
    const int n = m.n_states();
    std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
    for (int u = 0; u < n; ++u)
        for (auto& [v, p] : m.rows[static_cast<std::size_t>(u)])
            dense[static_cast<std::size_t>(u) * n + v] = p;
    j["P"] = dense;
    j["pi"] = m.pi;
    return j;
}

// CylinderVector: {depth, entries: [[word, mass]...], lambda}
inline json to_json(const CylinderVector& cv) {
    json j;
    j["depth"] = cv.depth;
    json entries = json::array();
    for (auto& [w, v] : cv.masses) entries.push_back(json::array({w, v}));
    j["entries"] = entries;
    j["lambda"] = cv.lambda;
    return j;
}

inline MarkovMeasure markov_from_json(const json& j, std::shared_ptr<const TruncatedGraph> g) {
    const int order = j.at("order").get<int>();
    std::vector<Word> states = j.at("states").get<std::vector<Word>>();
    const auto dense = j.at("P").get<std::vector<double>>();
    const int n = static_cast<int>(states.size());
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (dense[static_cast<std::size_t>(u) * n + v] > 0.0)
                rows[static_cast<std::size_t>(u)].emplace_back(v, dense[static_cast<std::size_t>(u) * n + v]);
    return make_markov(std::move(g), order, std::move(states), std::move(rows),
                       j.at("pi").get<std::vector<double>>());
}

// CSV table (n, Z_n, (1/n) log Z_n) for plotting.
inline std::string pressure_csv(const PressureReport& r) {
    std::ostringstream os;
    os << "n,Z_n,log_Z_n_over_n\n";
    os << std::setprecision(17);
    for (auto& [n, v] : r.sequence) os << n << "," << std::exp(v * n) << "," << v << "\n";
    return os.str();
}

// CSV trend table (q, M, estimate, residual) plus the penalized trail
// (t, P(phi - tV)).
inline std::string infinity_csv(const InfinityReport& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "q,M,n,value\n";
    for (const auto& row : r.rows)
        for (auto& [n, v] : row.trail) os << row.q << "," << row.M << "," << n << "," << v << "\n";
    return os.str();
}

inline std::string penalized_csv(const InfinityReport& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "t,penalized_pressure\n";
    for (auto& [t, p] : r.penalized_trail) os << t << "," << p << "\n";
    return os.str();
}

// Induced-system census as CSV (word, tau, phi_bar).
inline std::string induced_csv(const InducedSystem& ind) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "word,tau,phi_bar\n";
    for (std::size_t k = 0; k < ind.return_words.size(); ++k) {
        for (std::size_t i = 0; i < ind.return_words[k].size(); ++i)
            os << (i ? " " : "") << ind.return_words[k][i];
        os << "," << ind.tau[k] << "," << ind.phi_bar[k] << "\n";
    }
    return os.str();
}

}  // namespace cms
