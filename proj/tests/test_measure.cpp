#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <random>

#include "cmsthermo/measure.hpp"
#include "cmsthermo/pressure.hpp"

using namespace cms;

namespace {
std::shared_ptr<TruncatedGraph> graph_of(const CmsSpec& spec, int N) {
    return std::make_shared<TruncatedGraph>(build_truncation(spec, N));
}
}  // namespace

TEST_CASE("entropy of basic measures") {
    const auto full2 = graph_of(CmsSpec::full_shift(), 2);
    const auto b = bernoulli(full2, {0.5, 0.5});
    REQUIRE(entropy(b) == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    const auto gm = graph_of(CmsSpec::golden_mean(), 2);
    const auto fixed = periodic_measure(gm, {2});
    REQUIRE(entropy(fixed) == 0.0);

    // Parry measure from the RPF data of the zero potential
    const auto parry = spectral_pressure(*gm, Potential::zero()).rpf.equilibrium;
    REQUIRE(entropy(parry) == Catch::Approx(std::log((1.0 + std::sqrt(5.0)) / 2.0)).margin(1e-10));
}

TEST_CASE("entropy bounded by log max out-degree") {
    std::mt19937_64 rng(7);
    const auto g = graph_of(CmsSpec::renewal_shift(), 8);
    for (int rep = 0; rep < 25; ++rep) {
        const auto mu = random_markov(g, rng);
        int maxdeg = 0;
        for (std::size_t u = 0; u < mu.states.size(); ++u)
            maxdeg = std::max(maxdeg, static_cast<int>(mu.rows[u].size()));
        REQUIRE(entropy(mu) >= 0.0);
        REQUIRE(entropy(mu) <= std::log(static_cast<double>(maxdeg)) + 1e-12);
    }
}

TEST_CASE("integration of locally constant potentials") {
    const auto full2 = graph_of(CmsSpec::full_shift(), 2);
    const auto b = bernoulli(full2, {0.5, 0.5});
    REQUIRE(integrate(b, Potential::constant(3.25)) == Catch::Approx(3.25));
    REQUIRE(integrate(b, Potential::indicator(1)) == Catch::Approx(0.5));

    // phi(x) = a(x1) with a(i) = -i ln 2, Bernoulli(p, 1-p)
    const double p = 0.3;
    const auto bp = bernoulli(full2, {p, 1.0 - p});
    const auto phi = Potential::exp_law(std::log(2.0));
    REQUIRE(integrate(bp, phi) == Catch::Approx(-std::log(2.0) * (p + 2.0 * (1.0 - p))));

    // depth > order+1 must demand a lift
    const auto d3 = Potential::from_table(3, {}, [](std::span<const Symbol> w) {
        return static_cast<double>(w[0] + w[1] + w[2]);
    }, 6.0, "sum3");
    REQUIRE_THROWS_AS(integrate(b, d3), std::invalid_argument);
    const auto lifted = lift_order(b, 2);
    REQUIRE(integrate(lifted, d3) == Catch::Approx(4.5));  // E[x1+x2+x3] = 3 * 1.5
}

TEST_CASE("order lifting preserves the measure") {
    const auto gm = graph_of(CmsSpec::golden_mean(), 2);
    const auto parry = spectral_pressure(*gm, Potential::zero()).rpf.equilibrium;
    const auto l2 = lift_order(parry, 2);
    REQUIRE(l2.order == 2);
    REQUIRE(entropy(l2) == Catch::Approx(entropy(parry)).margin(1e-12));
    for (const auto& w : {Word{1}, Word{2}, Word{1, 2}, Word{2, 2}, Word{1, 2, 1}, Word{2, 2, 1}})
        REQUIRE(l2.cylinder_mass(w) == Catch::Approx(parry.cylinder_mass(w)).margin(1e-12));
}

TEST_CASE("entropy is affine on ergodic mixtures") {
    const auto gm = graph_of(CmsSpec::golden_mean(), 2);
    const auto parry = spectral_pressure(*gm, Potential::zero()).rpf.equilibrium;
    const auto fixed = periodic_measure(gm, {2});
    const auto mix = Mixture::combine(0.3, Mixture::pure(parry), Mixture::pure(fixed));
    REQUIRE(entropy(mix) ==
            Catch::Approx(0.3 * entropy(parry) + 0.7 * entropy(fixed)).margin(1e-10));
    const auto phi = Potential::indicator(1);
    REQUIRE(integrate(mix, phi) ==
            Catch::Approx(0.3 * integrate(parry, phi) + 0.7 * integrate(fixed, phi)).margin(1e-12));
}

TEST_CASE("cylinder vectors: consistency and distance") {
    const auto full2 = graph_of(CmsSpec::full_shift(), 2);
    const auto b = bernoulli(full2, {0.5, 0.5});
    const auto cv = cylinder_vector(Mixture::pure(b), 3);
    validate_cylinder_vector(*full2, cv);
    REQUIRE(cv.lambda == Catch::Approx(1.0));
    REQUIRE(cv.mass({1, 2}) == Catch::Approx(0.25));

    // delta at the fixed point 1-bar vs the zero vector, depth 1:
    // enumeration ([1], [2]) gives rho = 2^{-1} * 1.
    const auto delta = periodic_measure(full2, {1});
    const auto dv = cylinder_vector(Mixture::pure(delta), 1);
    REQUIRE(cylinder_distance(*full2, dv, CylinderVector::zero(1), 1) == Catch::Approx(0.5));

    REQUIRE(cylinder_distance(*full2, cv, cv, 3) == 0.0);

    // metric axioms on random triples
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const auto m1 = cylinder_vector(Mixture::pure(random_markov(full2, rng)), 2);
        const auto m2 = cylinder_vector(Mixture::pure(random_markov(full2, rng)), 2);
        const auto m3 = cylinder_vector(Mixture::pure(random_markov(full2, rng)), 2);
        const double d12 = cylinder_distance(*full2, m1, m2, 2);
        const double d13 = cylinder_distance(*full2, m1, m3, 2);
        const double d32 = cylinder_distance(*full2, m3, m2, 2);
        REQUIRE(d12 >= 0.0);
        REQUIRE(d12 == Catch::Approx(cylinder_distance(*full2, m2, m1, 2)));
        REQUIRE(d12 <= d13 + d32 + 1e-15);
    }
}

TEST_CASE("induced measure: Kac and Abramov on the full 2-shift") {
    const auto full2 = graph_of(CmsSpec::full_shift(), 2);
    const auto b = bernoulli(full2, {0.5, 0.5});
    const auto ind = induce_measure(b, 1, 40);
    // return words 1, 12...2 have geometric masses 2^{-tau}
    REQUIRE(ind.return_words.size() == 40);
    for (std::size_t k = 0; k < 5; ++k)
        REQUIRE(ind.induced.pi[k] == Catch::Approx(std::pow(0.5, ind.tau[k])).margin(1e-9));
    REQUIRE(ind.kac_integral * ind.base_mass == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(entropy(ind.induced) == Catch::Approx(entropy(b) * ind.kac_integral).margin(1e-8));
}

TEST_CASE("induced measure: periodic and Parry cases") {
    const auto gm = graph_of(CmsSpec::golden_mean(), 2);
    const auto cyc = periodic_measure(gm, {1, 2});
    const auto ind = induce_measure(cyc, 1, 5);
    REQUIRE(ind.return_words.size() == 1);
    REQUIRE(ind.return_words[0] == Word{1, 2});
    REQUIRE(ind.kac_integral == Catch::Approx(2.0));

    const auto parry = spectral_pressure(*gm, Potential::zero()).rpf.equilibrium;
    const auto indp = induce_measure(parry, 1, 64);
    REQUIRE(indp.kac_integral == Catch::Approx(1.0 / parry.cylinder_mass({1})).margin(1e-9));
    REQUIRE(entropy(indp.induced) ==
            Catch::Approx(entropy(parry) * indp.kac_integral).margin(1e-8));

    REQUIRE_THROWS_AS(induce_measure(periodic_measure(gm, {2}), 1, 10), std::invalid_argument);
}

TEST_CASE("hat measure: Kac masses, Abramov, and round trip") {
    const auto full2 = graph_of(CmsSpec::full_shift(), 2);
    const auto b = bernoulli(full2, {0.5, 0.5});
    const auto sd = subdivide_edges_fn(*full2, [](Symbol, Symbol) { return 2.0; });
    const auto hm = hat_measure(b, sd);
    REQUIRE(hm.tau_integral == Catch::Approx(2.0));
    REQUIRE(hm.hat.cylinder_mass({1}) == Catch::Approx(0.25).margin(1e-12));
    REQUIRE(entropy(hm.hat) == Catch::Approx(std::log(2.0) / 2.0).margin(1e-10));

    // identity roof: nothing changes
    const auto sd1 = subdivide_edges_fn(*full2, [](Symbol, Symbol) { return 1.0; });
    const auto hm1 = hat_measure(b, sd1);
    REQUIRE(hm1.hat.cylinder_mass({1}) == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(entropy(hm1.hat) == Catch::Approx(std::log(2.0)).margin(1e-12));

    // cylinder correspondence on all hat cylinders of depth <= 3
    const auto& hg = sd.graph;
    for (int len = 1; len <= 3; ++len)
        for (const auto& w : admissible_words(hg, len)) {
            const Word base = hat_to_base_cylinder(sd, w);
            const double lhs = hm.hat.cylinder_mass(w);
            const double rhs = b.cylinder_mass(base) / hm.tau_integral;
            if (w.size() == 1 && w[0] <= 2) {
                REQUIRE(lhs == Catch::Approx(b.cylinder_mass(base) / hm.tau_integral).margin(1e-12));
            } else {
                REQUIRE(lhs == Catch::Approx(rhs).margin(1e-12));
            }
        }

    // round trip recovers the base measure on depth-2 cylinders
    const auto back = hat_inverse(hm.hat, sd, full2);
    for (const auto& w : admissible_words(*full2, 2))
        REQUIRE(back.cylinder_mass(w) == Catch::Approx(b.cylinder_mass(w)).margin(1e-12));

    // Abramov with a non-constant integer roof on the renewal family
    const auto rg = graph_of(CmsSpec::renewal_shift(), 6);
    std::mt19937_64 rng(3);
    const auto mu = random_markov(rg, rng);
    const auto sdr = subdivide_edges_fn(*rg, [](Symbol a, Symbol b) {
        return a == 1 ? static_cast<double>(std::min<Symbol>(b, 3)) : (b % 2 == 0 ? 2.0 : 1.0);
    });
    const auto hmr = hat_measure(mu, sdr);
    REQUIRE(entropy(hmr.hat) == Catch::Approx(entropy(mu) / hmr.tau_integral).margin(1e-10));
    const auto backr = hat_inverse(hmr.hat, sdr, rg);
    for (const auto& w : admissible_words(*rg, 2))
        REQUIRE(backr.cylinder_mass(w) == Catch::Approx(mu.cylinder_mass(w)).margin(1e-12));
}

TEST_CASE("escape sequences and mass loss") {
    // single deep loop: periodic, mass of [1] = 1/n
    const auto seq = deep_loop_sequence(CmsSpec::renewal_shift(), 10);
    const auto mu5 = seq.at(5);  // loop length 15
    REQUIRE(cylinder_mass(mu5, {1}) == Catch::Approx(1.0 / 15.0));
    REQUIRE(entropy(mu5) == 0.0);

    // Bernoulli band over loops: entropy matches Kac/Abramov through the
    // induced picture: h = log(band+1) / mean length.
    const auto band = deep_loop_sequence(CmsSpec::renewal_shift(), 10, 4);
    const auto mub = band.at(0);
    const double mean_len = (10 + 11 + 12 + 13 + 14) / 5.0;
    REQUIRE(entropy(mub) == Catch::Approx(std::log(5.0) / mean_len).margin(1e-12));

    // constant sequence: mass loss table equals the tail of mu itself
    const auto full2 = graph_of(CmsSpec::full_shift(), 2);
    const auto b = Mixture::pure(bernoulli(full2, {0.5, 0.5}));
    const auto rep = mass_loss_diagnostic(constant_sequence(b), {1, 2}, 20);
    REQUIRE(rep.table[0].second == Catch::Approx(1.0));
    REQUIRE(rep.table[1].second == Catch::Approx(0.5));

    // deep loops escape: tail mass at k=10 tends to 1
    const auto esc = mass_loss_diagnostic(seq, {2, 10}, 60);
    REQUIRE(esc.table[1].second > 0.8);
    // monotone nonincreasing in k
    REQUIRE(esc.table[0].second >= esc.table[1].second);

    // convex combination declares the affine limit
    const auto mix_seq = convex_combination(0.5, b, seq, 2);
    REQUIRE(mix_seq.limit_lambda == Catch::Approx(0.5));
    REQUIRE(mix_seq.limit.mass({1}) == Catch::Approx(0.25));
    const auto m0 = mix_seq.at(0);
    REQUIRE(cylinder_mass(m0, {1}) == Catch::Approx(0.5 * 0.5 + 0.5 / 10.0));

    REQUIRE_THROWS_AS(deep_loop_sequence(CmsSpec::golden_mean(), 5), std::invalid_argument);
}

TEST_CASE("escaping integrals respect the declared limit (tired bound)") {
    // For nonnegative phi of depth d, liminf int phi dmu_n >= int phi dmu - tol,
    // with tol = sup(phi) * unresolved tail mass.
    const auto seq = deep_loop_sequence(CmsSpec::renewal_shift(), 12);
    const auto mix = convex_combination(0.4,
                                        Mixture::pure(bernoulli(graph_of(CmsSpec::full_shift(), 2),
                                                                {0.5, 0.5})),
                                        seq, 2);
    const auto phi = Potential::indicator(1);
    double liminf = std::numeric_limits<double>::infinity();
    for (int n = 30; n < 40; ++n) liminf = std::min(liminf, integrate(mix.at(n), phi));
    double limit_integral = 0.0;
    for (auto& [w, v] : mix.limit.masses)
        if (w.size() == 1) limit_integral += v * phi.eval(w);
    REQUIRE(liminf >= limit_integral - 1e-9);
}
