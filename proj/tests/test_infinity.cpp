#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cmsthermo/infinity.hpp"
#include "oracles.hpp"

using namespace cms;

namespace {
const double kLog2 = std::log(2.0);

// Hub-plus-binary-tree family: the hub feeds symbols 2 and 3, deep
// symbols branch to two children or fall back to the hub. One loop of
// length 2^{l-1} per length l, so both the entropy and the entropy at
// infinity equal log 2 and constant roofs sit in Psi_1.
CmsSpec binary_renewal() {
    return CmsSpec::custom(
        [](Symbol a, Symbol b) {
            if (a == 1) return b == 2 || b == 3;
            return b == 1 || b == 2 * a || b == 2 * a + 1;
        },
        "binary-renewal");
}
}  // namespace

TEST_CASE("restricted sums: exact DP vs brute force") {
    std::mt19937_64 rng(17);
    for (const auto& spec : {CmsSpec::golden_mean(), CmsSpec::renewal_shift(), CmsSpec::star_shift()}) {
        const auto g = build_truncation(spec, 5);
        const auto phi = Potential::indicator(1);
        for (Symbol a : g.vertices)
            for (int n = 2; n <= 8; ++n)
                for (int q : {1, 2, 4})
                    for (int M : {1, 2, 3})
                        REQUIRE(restricted_partition_sum(g, phi, a, n, q, M) ==
                                Catch::Approx(oracle::weighted_restricted_sum(g, phi, a, n, q, M))
                                    .margin(1e-12));
    }
    static_cast<void>(rng);
}

TEST_CASE("restricted sums: star emptiness and vacuous constraints") {
    const auto star = build_truncation(CmsSpec::star_shift(), 8);
    for (int n = 2; n <= 12; n += 2)
        REQUIRE(restricted_partition_sum(star, Potential::zero(), 1, n, 1, 3) == 0.0);
    REQUIRE(min_low_visit_cycle_mean(star, 1) == Catch::Approx(0.5));

    // q >= max vertex, M = 1: the constraint is vacuous
    const auto ren = build_truncation(CmsSpec::renewal_shift(), 6);
    for (int n = 1; n <= 10; ++n)
        REQUIRE(restricted_partition_sum(ren, Potential::zero(), 1, n, 6, 1) ==
                Catch::Approx(partition_sum(ren, Potential::zero(), 1, n)).margin(1e-10));
}

TEST_CASE("restricted sums on renewal match the composition oracle") {
    // Loops of length k visit {1..q} exactly min(k, q) times, so the
    // restricted count of closed walks equals a composition DP with a
    // per-part cost budget.
    const int q = 5, M = 5, n = 50;
    const auto g = build_truncation(CmsSpec::renewal_shift(), n + 2);
    const double dp = restricted_partition_sum(g, Potential::zero(), 1, n, q, M);
    const double oracle_count = oracle::compositions_with_budget(
        n, n / M, [q](int part) { return std::min(part, q); });
    REQUIRE(dp == Catch::Approx(oracle_count).epsilon(1e-9));
}

TEST_CASE("max mean cycle via Karp") {
    const auto gm = build_truncation(CmsSpec::golden_mean(), 2);
    const auto mc = max_mean_cycle(gm, Potential::indicator(1));
    REQUIRE(mc.value == Catch::Approx(0.5));
    REQUIRE(mc.cycle == Word{1, 2});

    REQUIRE(max_mean_cycle(gm, Potential::constant(3.0)).value == Catch::Approx(3.0));

    // random depth-2 potentials vs simple-cycle enumeration
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto salt = rng();
        const auto phi = Potential::depth2(
            [salt](Symbol a, Symbol b) {
                return static_cast<double>(fnv1a(std::to_string(a) + ":" + std::to_string(b) +
                                                 std::to_string(salt)) % 1000) / 500.0 - 1.0;
            },
            1.0, "rnd");
        const auto g = build_truncation(CmsSpec::renewal_shift(), 5);
        REQUIRE(max_mean_cycle(g, phi).value ==
                Catch::Approx(oracle::max_mean_cycle(g, phi)).margin(1e-9));
    }
}

TEST_CASE("pressure at infinity: renewal dual routes near zero") {
    InfinitySchedules sched;
    sched.n_max = 200;
    sched.truncation = 220;
    sched.route_b_truncation = 3000;
    const auto rep = pressure_at_infinity(CmsSpec::renewal_shift(), Potential::zero(), 1, sched);
    REQUIRE(rep.value_a.is_finite());
    REQUIRE(rep.value_a.finite_value() >= 0.0);
    REQUIRE(rep.value_a.finite_value() <= 0.05);
    REQUIRE(rep.value_b.is_finite());
    REQUIRE(rep.agreement_gap <= 5e-2);
    REQUIRE(rep.route == "both");
}

TEST_CASE("pressure at infinity: star and compact verdicts are -inf") {
    InfinitySchedules sched;
    sched.qm = {{1, 3}};
    sched.n_max = 60;
    const auto star = pressure_at_infinity(CmsSpec::star_shift(), Potential::zero(), 1, sched);
    REQUIRE(star.value.is_neg_inf());
    REQUIRE(star.rows[0].provably_empty);

    InfinitySchedules fsched;
    fsched.qm = {{2, 3}};
    fsched.n_max = 40;
    const auto full2 = pressure_at_infinity(CmsSpec::golden_mean(), Potential::zero(), 1, fsched);
    REQUIRE(full2.value.is_neg_inf());
}

TEST_CASE("pressure at infinity is shift-equivariant and C0-insensitive") {
    InfinitySchedules sched;
    sched.n_max = 150;
    sched.truncation = 170;
    sched.run_route_b = false;
    const auto base = pressure_at_infinity(CmsSpec::renewal_shift(), Potential::zero(), 1, sched);
    // P_inf(phi + c) = P_inf(phi) + c
    const auto shifted =
        pressure_at_infinity(CmsSpec::renewal_shift(), Potential::constant(0.7), 1, sched);
    REQUIRE(shifted.value.finite_value() ==
            Catch::Approx(base.value.finite_value() + 0.7).margin(1e-9));
    // P_inf(phi + g) = P_inf(phi) for truncated-V test functions g; at a
    // finite (q,M) schedule the bias is bounded by ||g||(1/q + 1/M).
    const auto g_trunc = Potential::first_coordinate(
        [](Symbol i) { return i <= 4 ? -1.0 / i : 0.0; }, {true, 0.0, 0.0, 0.0, true}, 0.0,
        "-V-truncated-4", -1.0);
    const auto perturbed = pressure_at_infinity(CmsSpec::renewal_shift(), g_trunc, 1, sched);
    REQUIRE(std::abs(perturbed.value.finite_value() - base.value.finite_value()) <= 0.15);
    // monotonicity: phi <= psi implies P_inf(phi) <= P_inf(psi)
    REQUIRE(perturbed.value.finite_value() <= base.value.finite_value() + 1e-9);
}

TEST_CASE("binary renewal family has positive entropy at infinity") {
    InfinitySchedules sched;
    sched.n_max = 100;
    sched.truncation = 4096;
    sched.run_route_b = false;
    sched.qm = {{4, 4}};
    const auto rep = pressure_at_infinity(binary_renewal(), Potential::zero(), 1, sched);
    REQUIRE(rep.value.is_finite());
    // delta_inf = log 2 but the excursion depth grows only like log N, so
    // horizon estimates sit between log 2 and h_top = log(1+sqrt(3)).
    REQUIRE(rep.value.finite_value() > 0.4);
    REQUIRE(rep.value.finite_value() < std::log(1.0 + std::sqrt(3.0)) + 0.05);
}

TEST_CASE("s_infinity thresholds") {
    const auto half = s_infinity(CmsSpec::full_shift(), Potential::log_law(2.0));
    REQUIRE(half.exact);
    REQUIRE(half.mid() == Catch::Approx(0.5));

    const auto zero = s_infinity(CmsSpec::golden_mean(), Potential::indicator(1));
    REQUIRE(zero.exact);
    REQUIRE(zero.mid() == 0.0);

    const auto expo = s_infinity(CmsSpec::full_shift(), Potential::exp_law(1.0));
    REQUIRE(expo.exact);
    REQUIRE(expo.mid() == 0.0);

    // generic bisection on a custom full-shift clone: a(i) = -2 log i
    // without a declared tail rule
    const auto clone = CmsSpec::custom([](Symbol, Symbol) { return true; }, "full-clone");
    const auto phi = Potential::first_coordinate(
        [](Symbol i) { return -2.0 * std::log(static_cast<double>(i)); }, {}, 0.0, "undeclared");
    PressureLimitOptions opt;
    opt.trunc_schedule = {64, 128, 256, 512, 1024, 2048, 4096, 8192};
    const auto generic = s_infinity(clone, phi, opt);
    REQUIRE(generic.lo <= 0.5 + 1e-6);
    REQUIRE(generic.hi >= 0.5 - 0.3);
}

TEST_CASE("h of roof: Psi2 cases") {
    InfinitySchedules sched;
    sched.n_max = 120;
    sched.truncation = 140;
    const auto ren = h_of_roof(CmsSpec::renewal_shift(), Potential::constant(1.0), sched);
    REQUIRE(ren.cls == "Psi2");
    REQUIRE(ren.h == 0.0);

    const auto star = h_of_roof(CmsSpec::star_shift(), Potential::constant(1.0), sched);
    REQUIRE(star.cls == "Psi2");
    REQUIRE(star.h == 0.0);

    const auto gm = h_of_roof(CmsSpec::golden_mean(), Potential::constant(1.0), sched);
    REQUIRE(gm.cls == "Psi2");
    REQUIRE(gm.h == 0.0);
}

TEST_CASE("h of roof: Psi1 on the binary renewal family") {
    InfinitySchedules sched;
    sched.n_max = 80;
    sched.truncation = 4096;
    sched.qm = {{4, 4}};
    const auto rep = h_of_roof(binary_renewal(), Potential::constant(1.0), sched);
    REQUIRE(rep.cls == "Psi1");
    // true value log 2; the horizon estimate is an upper bound below h_top
    REQUIRE(rep.h > 0.4);
    REQUIRE(rep.h < std::log(1.0 + std::sqrt(3.0)) + 0.05);
}

TEST_CASE("spr test composes both quantities") {
    InfinitySchedules sched;
    sched.n_max = 150;
    sched.truncation = 170;
    sched.route_b_truncation = 2000;
    PressureLimitOptions plim;
    plim.trunc_schedule = {20, 40, 80, 160};
    const auto ren = spr_test(CmsSpec::renewal_shift(), Potential::zero(), plim, sched);
    REQUIRE(ren.conclusive);
    REQUIRE(ren.spr);
    REQUIRE(ren.margin == Catch::Approx(kLog2).margin(5e-2));

    const auto gm = spr_test(CmsSpec::golden_mean(), Potential::indicator(2), plim, sched);
    REQUIRE(gm.conclusive);
    REQUIRE(gm.spr);
    REQUIRE(gm.margin == std::numeric_limits<double>::infinity());

    // agreement with the induced-route certificate
    REQUIRE(spr_certificate_induced(CmsSpec::renewal_shift(), Potential::zero(), 1).spr == ren.spr);
}

TEST_CASE("semicontinuity: constant sequences have zero slack") {
    const auto gm = std::make_shared<TruncatedGraph>(build_truncation(CmsSpec::golden_mean(), 2));
    const auto parry = spectral_pressure(*gm, Potential::zero()).rpf.equilibrium;
    const auto seq = constant_sequence(Mixture::pure(parry));
    const auto rep = semicontinuity_check(seq, Potential::indicator(1), ExtReal::neg_inf(), 40);
    REQUIRE(rep.lambda == 1.0);
    REQUIRE(rep.slack == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("semicontinuity: sharpness mixture on the renewal shift") {
    InfinitySchedules sched;
    sched.n_max = 200;
    sched.truncation = 220;
    sched.run_route_b = false;
    const auto pinf = pressure_at_infinity(CmsSpec::renewal_shift(), Potential::zero(), 1, sched);

    const auto rg = std::make_shared<TruncatedGraph>(build_truncation(CmsSpec::renewal_shift(), 8));
    const auto mu = spectral_pressure(*rg, Potential::zero()).rpf.equilibrium;
    const auto seq = convex_combination(0.5, Mixture::pure(mu),
                                        deep_loop_sequence(CmsSpec::renewal_shift(), 30), 3);
    const auto rep = semicontinuity_check(seq, Potential::zero(), pinf.value, 50);
    REQUIRE(rep.lambda == Catch::Approx(0.5));
    REQUIRE(rep.slack >= -1e-3);
    REQUIRE(rep.slack < 5e-2);

    // pure escape: lhs tends to 0 = delta_inf for phi = 0
    const auto esc = semicontinuity_check(deep_loop_sequence(CmsSpec::renewal_shift(), 30),
                                          Potential::zero(), pinf.value, 50);
    REQUIRE(esc.lambda == 0.0);
    REQUIRE(esc.slack >= -1e-3);
}

TEST_CASE("beta reports") {
    // golden mean: maximizer (1 2) with value 1/2
    const auto gm = beta_report(CmsSpec::golden_mean(), Potential::indicator(1));
    REQUIRE(gm.beta == Catch::Approx(0.5));
    REQUIRE(gm.verdict == "maximizer-found");
    REQUIRE(gm.maximizing_cycle == Word{1, 2});
    REQUIRE(gm.beta_inf.is_neg_inf());

    // constant potential
    const auto c = beta_report(CmsSpec::golden_mean(), Potential::constant(2.5));
    REQUIRE(c.beta == Catch::Approx(2.5));

    // renewal with phi = 1 - V: truncated values climb to 1, beta_inf = 1,
    // no maximizer (escape)
    InfinitySchedules sched;
    sched.n_max = 150;
    sched.truncation = 170;
    const auto esc = beta_report(CmsSpec::renewal_shift(), Potential::one_minus_v(),
                                 {16, 32, 64, 128, 256}, sched);
    REQUIRE(esc.beta_inf.is_finite());
    REQUIRE(esc.beta_inf.finite_value() == Catch::Approx(1.0));
    REQUIRE(esc.verdict == "escape");
    REQUIRE(esc.beta < 1.0);
    REQUIRE(esc.beta > 0.9);
    // monotone in N
    for (std::size_t k = 1; k < esc.beta_by_truncation.size(); ++k)
        REQUIRE(esc.beta_by_truncation[k].second >= esc.beta_by_truncation[k - 1].second - 1e-12);
    // direct deep-cycle route agrees within 5e-2
    REQUIRE(esc.deep_cycle_ran);
    REQUIRE(std::abs(esc.deep_cycle_estimate - 1.0) <= 5e-2);

    // coercive tail: beta_inf = -inf
    const auto coercive = beta_report(CmsSpec::renewal_shift(), Potential::log_law(1.0),
                                      {16, 32, 64}, sched);
    REQUIRE(coercive.beta_inf.is_neg_inf());
}

TEST_CASE("beta shift covariance and compact beta_inf") {
    const auto g = build_truncation(CmsSpec::golden_mean(), 2);
    const auto phi = Potential::indicator(1);
    const double b = max_mean_cycle(g, phi).value;
    const auto shifted = phi + 0.9;
    REQUIRE(max_mean_cycle(g, shifted).value == Catch::Approx(b + 0.9).margin(1e-12));
    REQUIRE(beta_infinity(CmsSpec::golden_mean(), phi).is_neg_inf());
    REQUIRE(beta_infinity(CmsSpec::star_shift(), phi).is_neg_inf());
}

TEST_CASE("zero temperature on the golden mean") {
    std::vector<double> ts;
    for (double t = 1.0; t <= 1024.0; t *= 2.0) ts.push_back(t);
    const auto rep = zero_temperature(CmsSpec::golden_mean(), Potential::indicator(1), ts);
    REQUIRE(rep.verdict == "converged");
    REQUIRE(rep.monotone);
    REQUIRE(rep.steps.back().phi_integral == Catch::Approx(0.5).margin(1e-3));
    // limit measure concentrates on the (1 2) cycle: masses 1/2, 1/2
    REQUIRE(rep.final_measure.cylinder_mass({1}) == Catch::Approx(0.5).margin(1e-3));
    REQUIRE(rep.final_measure.cylinder_mass({2, 2}) == Catch::Approx(0.0).margin(1e-3));
    // Cauchy in the cylinder metric
    REQUIRE(rep.steps.back().cylinder_gap < rep.steps[2].cylinder_gap);

    // phi = 0: equilibrium is the measure of maximal entropy for every t
    const auto mme = zero_temperature(CmsSpec::golden_mean(), Potential::zero(), {1.0, 2.0, 4.0});
    for (const auto& s : mme.steps)
        REQUIRE(s.entropy_val == Catch::Approx(std::log((1.0 + std::sqrt(5.0)) / 2.0)).margin(1e-10));

    // full-shift truncation with a strict gap at i = 1: point mass limit
    const auto gap = zero_temperature(
        CmsSpec::finite({{1, 1}, {1, 2}, {2, 1}, {2, 2}}),
        Potential::first_coordinate([](Symbol i) { return i == 1 ? 1.0 : 0.0; }, {}, 1.0, "gap"),
        ts);
    REQUIRE(gap.steps.back().phi_integral == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(gap.final_measure.cylinder_mass({1}) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("variational principle at infinity at desk scale") {
    InfinitySchedules sched;
    sched.n_max = 200;
    sched.truncation = 220;
    sched.run_route_b = false;
    const auto pinf = pressure_at_infinity(CmsSpec::renewal_shift(), Potential::zero(), 1, sched);
    const double bound = pinf.value.finite_value() + 5e-2;
    // measure side: escaping deep-loop Bernoulli bands never exceed the
    // topological route's value plus tolerance
    for (int band : {0, 2, 4}) {
        const auto seq = deep_loop_sequence(CmsSpec::renewal_shift(), 40, band);
        for (int n = 30; n < 50; n += 5) {
            const auto mu = seq.at(n);
            REQUIRE(entropy(mu) + integrate(mu, Potential::zero()) <= bound);
        }
    }
    // realizing sequence: equilibria of phi - tV approach from below
    const auto g = build_truncation(CmsSpec::renewal_shift(), 250);
    const auto v = Potential::v_function();
    double prev = -1e18;
    bool increasing = true;
    std::vector<double> values;
    for (double t : {2.0, 4.0, 8.0}) {
        const auto sp = spectral_pressure(g, Potential::zero() - t * v, 1e-12);
        const auto& mu = sp.rpf.equilibrium;
        values.push_back(entropy(mu));
        REQUIRE(values.back() <= bound);
    }
    static_cast<void>(prev);
    static_cast<void>(increasing);
}

TEST_CASE("P_inf convexity along a ray (coarse)") {
    InfinitySchedules sched;
    sched.n_max = 150;
    sched.truncation = 170;
    sched.run_route_b = false;
    std::vector<double> vals;
    for (double t : {1.0, 2.0, 3.0}) {
        const auto rep = pressure_at_infinity(CmsSpec::renewal_shift(),
                                              t * Potential::one_minus_v(), 1, sched);
        REQUIRE(rep.value.is_finite());
        vals.push_back(rep.value.finite_value());
    }
    REQUIRE(vals[2] - 2.0 * vals[1] + vals[0] >= -0.05);
}
