#pragma once

// The built-in oracle suite: every quantity is computed by at least two
// independent routes and checked at a pinned tolerance. Run through the
// CLI ("cmsthermo verify") or the acceptance test binary.

#include <chrono>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cmsthermo/infinity.hpp"
#include "cmsthermo/inducing.hpp"
#include "cmsthermo/measure.hpp"
#include "cmsthermo/pressure.hpp"
#include "cmsthermo/suspension.hpp"

namespace cms {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct Check {
    int id;
    std::string name;
    std::vector<std::string> families;
    std::function<CheckResult()> fn;
};

namespace checks_detail {

struct Gate {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "[failed: " << what << "] ";
        }
    }
    void note(const std::string& what) { detail << what << "; "; }
    template <class T>
    void value(const std::string& label, T v) {
        detail << label << "=" << v << "; ";
    }
};

inline Potential star_power_potential() {
    return Potential::depth2(
        [](Symbol a, Symbol b) {
            const Symbol n = std::max(a, b);
            return n >= 2 ? -1.5 * std::log(static_cast<double>(n)) : 0.0;
        },
        0.0, "star-power-1.5");
}

inline CmsSpec full2() { return CmsSpec::finite({{1, 1}, {1, 2}, {2, 1}, {2, 2}}); }

inline Potential seeded_depth2(std::uint64_t salt, double scale) {
    return Potential::depth2(
        [salt, scale](Symbol a, Symbol b) {
            const std::uint64_t h =
                fnv1a(std::to_string(a) + "," + std::to_string(b) + "#" + std::to_string(salt));
            return scale * (static_cast<double>(h % 20001) / 10000.0 - 1.0);
        },
        scale, "seeded-depth2-" + std::to_string(salt), -scale);
}

// A strongly connected random graph on {1..6} plus a random depth-2
// potential, reproducible from the seed.
inline CmsSpec random_six_vertex(std::mt19937_64& rng) {
    std::vector<std::pair<Symbol, Symbol>> edges;
    // a Hamiltonian cycle keeps it strongly connected
    for (Symbol v = 1; v <= 6; ++v) edges.emplace_back(v, v % 6 + 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Symbol a = 1; a <= 6; ++a)
        for (Symbol b = 1; b <= 6; ++b)
            if (a != b % 6 + 1 && u(rng) < 0.35) edges.emplace_back(a, b);
    return CmsSpec::finite(edges);
}

}  // namespace checks_detail

inline std::vector<Check> acceptance_checks() {
    using namespace checks_detail;
    const double kLog2 = std::log(2.0);
    const double kLogGolden = std::log((1.0 + std::sqrt(5.0)) / 2.0);
    std::vector<Check> checks;

    checks.push_back({1, "full-shift closed-form pressure (zeta(2))", {"full"}, [=] {
        Gate g;
        PressureLimitOptions opt;
        opt.trunc_schedule = {100, 1000, 10000};
        const auto rep = pressure_limit(CmsSpec::full_shift(), Potential::log_law(2.0), opt);
        const double want = std::log(M_PI * M_PI / 6.0);
        g.expect(rep.value.is_finite(), "finite verdict");
        if (rep.value.is_finite()) {
            g.value("P", rep.value.finite_value());
            g.expect(std::abs(rep.value.finite_value() - want) <= 1e-3, "within 1e-3 of log(pi^2/6)");
        }
        g.expect(rep.method == "closed-form", "closed-form route");
        return CheckResult{1, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({2, "golden-mean entropy by both routes", {"golden"}, [=] {
        Gate g;
        const auto t0 = std::chrono::steady_clock::now();
        const auto sp = spectral_pressure(build_truncation(CmsSpec::golden_mean(), 2), Potential::zero());
        g.value("spectral", sp.report.value.finite_value());
        g.expect(std::abs(sp.report.value.finite_value() - kLogGolden) <= 1e-9,
                 "spectral within 1e-9");
        const auto gur = gurevich_estimate(CmsSpec::golden_mean(), Potential::zero(), 1, 60, {2});
        g.value("gurevich", gur.value.finite_value());
        g.expect(std::abs(gur.value.finite_value() - kLogGolden) <= 1e-3,
                 "gurevich within 1e-3 at n<=60");
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        g.value("seconds", secs);
        g.expect(secs < 1.0, "runtime < 1 s");
        return CheckResult{2, "", g.ok, g.detail.str(), secs};
    }});

    checks.push_back({3, "renewal entropy: periodic sums and discriminant", {"renewal"}, [=] {
        Gate g;
        const auto gur = gurevich_estimate(CmsSpec::renewal_shift(), Potential::zero(), 1, 120, {40});
        g.value("gurevich", gur.value.finite_value());
        g.expect(std::abs(gur.value.finite_value() - kLog2) <= 1e-3, "gurevich within 1e-3 at N=40");
        const auto rep = discriminant(build_induced(CmsSpec::renewal_shift(), Potential::zero(), 1, 16));
        g.expect(rep.root.has_value(), "discriminant root exists");
        if (rep.root.has_value()) {
            g.value("-p(0)", -*rep.root);
            g.expect(std::abs(-*rep.root - kLog2) <= 1e-9, "-p(0) = log 2 within 1e-9");
        }
        return CheckResult{3, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({4, "dual-route pressure at infinity", {"renewal", "finite"}, [=] {
        Gate g;
        const auto t0 = std::chrono::steady_clock::now();
        InfinitySchedules sched;
        sched.n_max = 200;
        sched.truncation = 220;
        sched.route_b_truncation = 3000;
        const auto ren = pressure_at_infinity(CmsSpec::renewal_shift(), Potential::zero(), 1, sched);
        g.expect(ren.value_a.is_finite() && ren.value_b.is_finite(), "both routes conclusive");
        if (ren.value_a.is_finite() && ren.value_b.is_finite()) {
            g.value("routeA", ren.value_a.finite_value());
            g.value("routeB", ren.value_b.finite_value());
            g.expect(ren.agreement_gap <= 5e-2, "renewal agreement gap <= 5e-2");
        }
        std::mt19937_64 rng(2026);
        for (int k = 0; k < 3; ++k) {
            const auto spec = random_six_vertex(rng);
            const auto phi = seeded_depth2(rng(), 0.8);
            InfinitySchedules fs;
            fs.qm = {{6, 3}};
            fs.n_max = 60;
            const auto rep = pressure_at_infinity(spec, phi, spec.finite_vertices.front(), fs);
            g.expect(rep.value_a.is_neg_inf(), "compact route A verdict -inf");
            g.expect(rep.value_b.is_neg_inf(), "compact route B verdict -inf");
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        g.value("seconds", secs);
        g.expect(secs < 60.0, "runtime < 60 s");
        return CheckResult{4, "", g.ok, g.detail.str(), secs};
    }});

    checks.push_back({5, "star family: empty restricted sets and uniform Rome", {"star"}, [=] {
        Gate g;
        InfinitySchedules sched;
        sched.qm = {{1, 3}};
        sched.n_max = 60;
        const auto rep = pressure_at_infinity(CmsSpec::star_shift(), Potential::zero(), 1, sched);
        g.expect(rep.value.is_neg_inf(), "P_inf = -inf");
        g.expect(!rep.rows.empty() && rep.rows[0].provably_empty, "restricted sets provably empty");
        const auto rome = uniform_rome_check(CmsSpec::star_shift(), {1}, 1);
        g.expect(rome.value && rome.family_exact, "uniform Rome {1} with bound 1");
        const auto ren_rome = uniform_rome_check(CmsSpec::renewal_shift(), {1, 2, 3}, 25);
        g.expect(!ren_rome.value, "renewal has no finite Rome");
        return CheckResult{5, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({6, "variational principle harness", {"full", "renewal", "star", "golden"}, [=] {
        Gate g;
        std::mt19937_64 rng(99);
        const std::vector<std::pair<CmsSpec, int>> specs = {
            {full2(), 2}, {CmsSpec::renewal_shift(), 40}, {CmsSpec::star_shift(), 30},
            {CmsSpec::golden_mean(), 2}};
        for (const auto& [spec, N] : specs) {
            const auto gp = std::make_shared<TruncatedGraph>(build_truncation(spec, N));
            for (const auto& phi : {Potential::zero(), seeded_depth2(417, 0.7)}) {
                const auto sp = spectral_pressure(*gp, phi);
                const double P = sp.report.value.finite_value();
                double worst = -1e18;
                for (int k = 0; k < 1000; ++k) {
                    const auto mu = random_markov(gp, rng);
                    worst = std::max(worst, entropy(mu) + integrate(mu, phi) - P);
                }
                g.expect(worst <= 1e-9, "1000 random measures below P + 1e-9");
                const double at = entropy(sp.rpf.equilibrium) + integrate(sp.rpf.equilibrium, phi);
                g.expect(std::abs(at - P) <= 1e-8, "RPF equilibrium attains P within 1e-8");
            }
        }
        return CheckResult{6, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({7, "identity suites: Kac, Abramov, hat cylinders, recoding", {"full", "golden", "renewal"}, [=] {
        Gate g;
        // Kac and Abramov through inducing
        const auto f2 = std::make_shared<TruncatedGraph>(build_truncation(full2(), 2));
        const auto gm = std::make_shared<TruncatedGraph>(build_truncation(CmsSpec::golden_mean(), 2));
        {
            const auto b = bernoulli(f2, {0.5, 0.5});
            const auto parry = spectral_pressure(*gm, Potential::zero()).rpf.equilibrium;
            for (const auto& [mu, L] : {std::pair{b, 40}, std::pair{parry, 64}}) {
                const auto ind = induce_measure(mu, 1, L);
                g.expect(std::abs(ind.kac_integral * ind.base_mass - 1.0) <= 1e-9,
                         "Kac identity within 1e-9");
                g.expect(std::abs(entropy(ind.induced) - entropy(mu) * ind.kac_integral) <= 1e-8,
                         "Abramov (inducing) within 1e-8");
            }
        }
        // hat measures: Abramov at 1e-10, cylinder formulas at 1e-12,
        // round trip exact on depth-2 cylinders
        {
            const auto b = bernoulli(f2, {0.5, 0.5});
            const auto sd = subdivide_edges_fn(*f2, [](Symbol a, Symbol b2) {
                return a == 1 ? 2.0 : (b2 == 1 ? 3.0 : 1.0);
            });
            const auto hm = hat_measure(b, sd);
            g.expect(std::abs(entropy(hm.hat) - entropy(b) / hm.tau_integral) <= 1e-10,
                     "Abramov (subdivision) within 1e-10");
            bool cyl_ok = true;
            for (int len = 1; len <= 3; ++len)
                for (const auto& w : admissible_words(sd.graph, len)) {
                    const Word base = hat_to_base_cylinder(sd, w);
                    if (std::abs(hm.hat.cylinder_mass(w) -
                                 b.cylinder_mass(base) / hm.tau_integral) > 1e-12)
                        cyl_ok = false;
                }
            g.expect(cyl_ok, "hat cylinder masses within 1e-12 up to depth 3");
            const auto back = hat_inverse(hm.hat, sd, f2);
            bool rt_ok = true;
            for (const auto& w : admissible_words(*f2, 2))
                if (std::abs(back.cylinder_mass(w) - b.cylinder_mass(w)) > 1e-12) rt_ok = false;
            g.expect(rt_ok, "hat round trip exact on depth-2 cylinders");
        }
        // recoding invariance of the spectral pressure
        {
            const auto g5 = build_truncation(CmsSpec::renewal_shift(), 5);
            const auto phi = seeded_depth2(2718, 0.6);
            const double base = spectral_pressure(g5, phi).report.value.finite_value();
            const auto rc = higher_block_recode(g5, 2);
            const double rec =
                spectral_pressure(rc.graph, lift_through_recode(phi, rc)).report.value.finite_value();
            g.expect(std::abs(base - rec) <= 1e-12, "recoding invariance within 1e-12");
        }
        return CheckResult{7, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({8, "subdivision entropy-at-infinity cross-check", {"renewal"}, [=] {
        Gate g;
        // roof tau(1,k) = min(k,10), tau(k,k-1) = 1 on the renewal shift
        const auto roof = Potential::depth2(
            [](Symbol a, Symbol b) {
                return a == 1 ? static_cast<double>(std::min<Symbol>(b, 10)) : 1.0;
            },
            10.0, "renewal-capped-roof", 1.0);
        InfinitySchedules sched;
        sched.n_max = 200;
        sched.truncation = 220;
        sched.qm = {{5, 5}, {10, 10}, {20, 20}};
        const auto roof_rep = h_of_roof(CmsSpec::renewal_shift(), roof, sched);
        g.value("h(tau)", roof_rep.h);
        g.note(roof_rep.cls);
        // delta_inf estimate of the subdivided graph, with the same
        // per-row horizon extensions as the base route
        const auto base = build_truncation(CmsSpec::renewal_shift(), 700);
        const auto sd = subdivide_edges_fn(base, [&roof](Symbol a, Symbol b) { return roof.eval2(a, b); });
        double best = std::numeric_limits<double>::infinity();
        for (auto [q, M] : std::vector<std::pair<int, int>>{{5, 5}, {10, 10}, {15, 15}}) {
            const int n_row = std::max(200, 3 * q * M);
            const auto logZ = log_restricted_sums(sd.graph, Potential::zero(), 1, n_row, q, M);
            const auto est = growth_rate(logZ, sd.graph.period);
            if (est.valid) best = std::min(best, est.value);
        }
        g.value("delta_inf(subdivided)", best);
        g.expect(std::isfinite(best), "subdivided estimate available");
        g.expect(std::abs(best - roof_rep.h) <= 5e-2, "agreement within 5e-2");
        return CheckResult{8, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({9, "semi-continuity with escape of mass", {"renewal", "golden", "finite"}, [=] {
        Gate g;
        InfinitySchedules sched;
        sched.n_max = 200;
        sched.truncation = 220;
        sched.run_route_b = false;
        const auto pinf = pressure_at_infinity(CmsSpec::renewal_shift(), Potential::zero(), 1, sched);
        const auto rg = std::make_shared<TruncatedGraph>(build_truncation(CmsSpec::renewal_shift(), 8));
        const auto gm = std::make_shared<TruncatedGraph>(build_truncation(CmsSpec::golden_mean(), 2));
        std::mt19937_64 rng(515);
        int count = 0;
        double min_slack = 1e18;
        const auto phi = Potential::zero();
        // 120 renewal mixtures with escape, 80 finite-family sequences
        for (int k = 0; k < 120; ++k) {
            const double lam = std::vector<double>{0.0, 0.3, 0.5, 0.8}[static_cast<std::size_t>(k % 4)];
            const auto mu = Mixture::pure(random_markov(rg, rng));
            const int start = 20 + (k % 7) * 5;
            MeasureSequence seq = lam == 0.0
                                      ? deep_loop_sequence(CmsSpec::renewal_shift(), start, k % 3)
                                      : convex_combination(lam, mu,
                                                           deep_loop_sequence(CmsSpec::renewal_shift(),
                                                                              start, k % 3), 3);
            const auto rep = semicontinuity_check(seq, phi, pinf.value, 40);
            min_slack = std::min(min_slack, rep.slack);
            ++count;
        }
        for (int k = 0; k < 80; ++k) {
            const auto a = Mixture::pure(random_markov(gm, rng));
            const auto b = Mixture::pure(random_markov(gm, rng));
            // eta_n = mu + summably-weighted drift toward another measure,
            // so the prefix deficit stays below the slack tolerance
            MeasureSequence seq;
            seq.at = [a, b](int n) {
                return Mixture::combine(1.0 / ((n + 2.0) * (n + 2.0)), b, a);
            };
            seq.limit_lambda = 1.0;
            seq.limit = cylinder_vector(a, 3);
            seq.limit_measure = a;
            const auto rep = semicontinuity_check(seq, phi, ExtReal::neg_inf(), 40);
            min_slack = std::min(min_slack, rep.slack);
            ++count;
        }
        g.value("sequences", count);
        g.value("min_slack", min_slack);
        g.expect(count == 200, "200 sequences generated");
        g.expect(min_slack >= -1e-3, "slack >= -1e-3 throughout");
        // sharpness mixture at prefix 50
        const auto mu = spectral_pressure(*rg, Potential::zero()).rpf.equilibrium;
        const auto sharp = convex_combination(0.5, Mixture::pure(mu),
                                              deep_loop_sequence(CmsSpec::renewal_shift(), 30), 3);
        const auto srep = semicontinuity_check(sharp, phi, pinf.value, 50);
        g.value("sharpness_slack", srep.slack);
        g.expect(srep.slack < 5e-2, "sharpness slack < 5e-2 at prefix 50");
        return CheckResult{9, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({10, "ergodic optimization and zero temperature", {"golden", "renewal"}, [=] {
        Gate g;
        const auto gm = beta_report(CmsSpec::golden_mean(), Potential::indicator(1));
        g.expect(std::abs(gm.beta - 0.5) <= 1e-12, "beta(1_[1]) = 0.5 exactly");
        g.expect(gm.maximizing_cycle == Word{1, 2}, "maximizing cycle (1 2)");
        InfinitySchedules sched;
        sched.n_max = 150;
        sched.truncation = 170;
        const auto esc = beta_report(CmsSpec::renewal_shift(), Potential::one_minus_v(),
                                     {16, 32, 64, 128, 256}, sched);
        g.expect(esc.beta_inf.is_finite() && std::abs(esc.beta_inf.finite_value() - 1.0) <= 1e-9,
                 "beta_inf(1 - V) = 1");
        g.expect(esc.verdict == "escape", "no maximizer: escape verdict");
        bool monotone = true;
        for (std::size_t k = 1; k < esc.beta_by_truncation.size(); ++k)
            if (esc.beta_by_truncation[k].second < esc.beta_by_truncation[k - 1].second - 1e-12)
                monotone = false;
        g.expect(monotone && esc.beta > 0.9, "truncated beta values climb toward 1");
        std::vector<double> ts;
        for (double t = 1.0; t <= 1024.0; t *= 2.0) ts.push_back(t);
        const auto zt = zero_temperature(CmsSpec::golden_mean(), Potential::indicator(1), ts);
        g.expect(zt.verdict == "converged", "zero-temperature run converged");
        g.value("phi_integral(2^10)", zt.steps.back().phi_integral);
        g.expect(std::abs(zt.steps.back().phi_integral - 0.5) <= 1e-3,
                 "int phi dmu_t within 1e-3 of 0.5 at t = 2^10");
        return CheckResult{10, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({11, "suspension pressures and flow SPR", {"full", "renewal", "star", "golden"}, [=] {
        Gate g;
        // constant roof 2: P_theta = h_top / 2
        SuspensionSpec half;
        half.base = full2();
        half.roof = Potential::constant(2.0);
        half.delta_phi = Potential::zero();
        const auto ph = suspension_pressure(half, {2});
        g.expect(std::abs(ph.value.finite_value() - kLog2 / 2.0) <= 1e-9,
                 "P_theta = h_top/2 within 1e-9");
        // root identity on every suspension spec tested
        std::vector<SuspensionSpec> specs;
        specs.push_back(half);
        {
            SuspensionSpec s;
            s.base = CmsSpec::renewal_shift();
            s.roof = Potential::constant(1.0);
            s.delta_phi = Potential::zero();
            specs.push_back(s);
            SuspensionSpec s2;
            s2.base = CmsSpec::golden_mean();
            s2.roof = Potential::constant(1.0) + Potential::indicator(1);
            s2.delta_phi = Potential::indicator(2);
            specs.push_back(s2);
        }
        for (const auto& s : specs) {
            const auto rep = suspension_pressure(s, {32});
            const auto trunc = build_truncation(s.base, 32);
            const double resid =
                power_value(trunc, s.delta_phi - rep.value.finite_value() * s.roof).log_pressure;
            g.expect(std::abs(resid) <= 1e-8, "root identity within 1e-8");
        }
        // flow SPR margin ~ log 2 on renewal / tau = 1
        InfinitySchedules sched;
        sched.n_max = 200;
        sched.truncation = 220;
        const auto fr = flow_spr_test(specs[1], {16, 32, 64}, sched);
        g.value("flow_margin", fr.margin);
        g.expect(fr.spr && std::abs(fr.margin - kLog2) <= 5e-2, "flow SPR margin ~ log 2");
        return CheckResult{11, "", g.ok, g.detail.str(), 0.0};
    }});

    checks.push_back({12, "mass-loss diagnostics separate escape from tightness", {"renewal", "full"}, [=] {
        Gate g;
        const auto esc = mass_loss_diagnostic(deep_loop_sequence(CmsSpec::renewal_shift(), 10),
                                              {2, 10}, 50);
        // near-equilibrium sequence on growing full-shift truncations
        MeasureSequence tight;
        tight.at = [](int n) {
            const int N = 50 + 5 * n;
            const auto g2 = build_truncation(CmsSpec::full_shift(), N);
            return Mixture::pure(spectral_pressure(g2, Potential::log_law(2.0)).rpf.equilibrium);
        };
        tight.limit_lambda = 1.0;
        tight.desc = "full-shift near-equilibria";
        const auto kept = mass_loss_diagnostic(tight, {2, 10}, 50);
        const double esc10 = esc.table[1].second;
        const double kept10 = kept.table[1].second;
        g.value("escaping_tail(k=10)", esc10);
        g.value("tight_tail(k=10)", kept10);
        g.expect(esc10 > kept10, "escaping sequence loses more mass");
        g.expect(esc10 - kept10 >= 0.5, "trends separated by >= 0.5 at prefix 50");
        // monotone nonincreasing in k
        g.expect(esc.table[0].second >= esc.table[1].second, "monotone in k");
        return CheckResult{12, "", g.ok, g.detail.str(), 0.0};
    }});

    return checks;
}

inline std::vector<CheckResult> run_acceptance(const std::vector<std::string>& families = {}) {
    std::vector<CheckResult> results;
    for (const auto& c : acceptance_checks()) {
        if (!families.empty()) {
            bool wanted = false;
            for (const auto& f : families)
                for (const auto& cf : c.families)
                    if (f == cf) wanted = true;
            if (!wanted) continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r = c.fn();
        r.id = c.id;
        r.name = c.name;
        if (r.seconds == 0.0)
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace cms
