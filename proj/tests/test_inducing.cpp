#include <catch2/catch_amalgamated.hpp>

#include "cmsthermo/inducing.hpp"
#include "cmsthermo/measure.hpp"

using namespace cms;

namespace {
const double kLog2 = std::log(2.0);
// full 2-shift as an explicit finite family
CmsSpec full2_spec() { return CmsSpec::finite({{1, 1}, {1, 2}, {2, 1}, {2, 2}}); }
}  // namespace

TEST_CASE("return-word census") {
    const auto ind = build_induced(full2_spec(), Potential::zero(), 1, 4);
    REQUIRE(ind.return_words ==
            std::vector<Word>{{1}, {1, 2}, {1, 2, 2}, {1, 2, 2, 2}});
    REQUIRE(ind.tau == std::vector<double>{1, 2, 3, 4});

    // renewal: exactly one return word per length
    const auto rind = build_induced(CmsSpec::renewal_shift(), Potential::zero(), 1, 6);
    REQUIRE(rind.return_words.size() == 6);
    for (std::size_t k = 0; k < rind.return_words.size(); ++k)
        REQUIRE(rind.tau[k] == static_cast<double>(rind.return_words[k].size()));
    REQUIRE(rind.return_words[3] == Word{1, 4, 3, 2});

    // star: return words 1n, all of length 2
    const auto sind = build_induced(CmsSpec::star_shift(), Potential::zero(), 1, 4, 1000000, 12);
    REQUIRE(sind.return_words.size() == 11);
    for (auto t : sind.tau) REQUIRE(t == 2.0);

    // blowup guard
    REQUIRE_THROWS_AS(build_induced(CmsSpec::full_shift(), Potential::zero(), 1, 9, 100, 16),
                      std::runtime_error);
}

TEST_CASE("induced pressure curve: closed forms") {
    // full 2-shift, phi = 0: log(e^t + e^{2t}/(1-e^t)) for t < 0
    const auto ind = build_induced(full2_spec(), Potential::zero(), 1, 8);
    for (double t : {-2.0, -1.0, -0.5}) {
        const double x = std::exp(t);
        const double want = std::log(x + x * x / (1.0 - x));
        REQUIRE(induced_pressure_curve(ind, t).finite_value() == Catch::Approx(want).margin(1e-9));
    }
    REQUIRE(induced_pressure_curve(ind, 0.1).is_pos_inf());

    // renewal, phi = 0: log(e^t/(1-e^t)) for t < 0
    const auto rind = build_induced(CmsSpec::renewal_shift(), Potential::zero(), 1, 8);
    for (double t : {-1.5, -0.7}) {
        const double x = std::exp(t);
        REQUIRE(induced_pressure_curve(rind, t).finite_value() ==
                Catch::Approx(std::log(x / (1.0 - x))).margin(1e-9));
    }
    REQUIRE(induced_pressure_curve(rind, 0.2).is_pos_inf());
}

TEST_CASE("finiteness thresholds") {
    REQUIRE(induced_finiteness_threshold(build_induced(full2_spec(), Potential::zero(), 1, 8))
                .finite_value() == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(induced_finiteness_threshold(
                build_induced(CmsSpec::renewal_shift(), Potential::zero(), 1, 8))
                .finite_value() == Catch::Approx(0.0).margin(1e-9));
    // star: tau == 2 everywhere, so the series converges for every t
    const auto sind = build_induced(CmsSpec::star_shift(),
                                    Potential::depth2([](Symbol a, Symbol b) {
                                        const Symbol n = std::max(a, b);
                                        return -1.5 * std::log(static_cast<double>(n));
                                    }, 0.0, "star-3/2"),
                                    1, 4, 1000000, 64);
    REQUIRE(induced_finiteness_threshold(sind).is_pos_inf());
}

TEST_CASE("discriminant: full 2-shift and renewal recover log 2") {
    const auto ind = build_induced(full2_spec(), Potential::zero(), 1, 8);
    const auto rep = discriminant(ind);
    REQUIRE(rep.p_star.finite_value() == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(rep.delta.is_pos_inf());
    REQUIRE(rep.classification == "SPR");
    REQUIRE(rep.root.has_value());
    REQUIRE(*rep.root == Catch::Approx(-kLog2).margin(1e-9));
    REQUIRE(rep.implied_pressure.finite_value() == Catch::Approx(kLog2).margin(1e-9));

    const auto rrep = discriminant(build_induced(CmsSpec::renewal_shift(), Potential::zero(), 1, 8));
    REQUIRE(rrep.implied_pressure.finite_value() == Catch::Approx(kLog2).margin(1e-9));
    REQUIRE(rrep.classification == "SPR");
}

TEST_CASE("discriminant: star family matches the spectral route") {
    const auto phi = Potential::depth2(
        [](Symbol a, Symbol b) {
            const Symbol n = std::max(a, b);
            return n >= 2 ? -1.5 * std::log(static_cast<double>(n)) : 0.0;
        },
        0.0, "star-3/2");
    const auto ind = build_induced(CmsSpec::star_shift(), phi, 1, 4, 1000000, 1000);
    const auto rep = discriminant(ind);
    REQUIRE(rep.classification == "SPR");
    REQUIRE(rep.delta.is_pos_inf());
    const double spectral =
        spectral_pressure(build_truncation(CmsSpec::star_shift(), 1000), phi).report.value.finite_value();
    REQUIRE(rep.implied_pressure.finite_value() == Catch::Approx(spectral).margin(1e-3));
}

TEST_CASE("discriminant: transient example has Delta < 0") {
    // renewal weights: first-return series sums to 1/2 at its abscissa
    const double c = 2.0 * 1.6449340668482264;
    const auto phi = Potential::depth2(
        [c](Symbol a, Symbol b) {
            if (a == 1) return kLog2 - 2.0 * std::log(static_cast<double>(b)) - std::log(c);
            static_cast<void>(b);
            return kLog2;
        },
        kLog2, "transient-weights");
    const auto rep = discriminant(build_induced(CmsSpec::renewal_shift(), phi, 1, 8));
    REQUIRE(rep.classification == "transient");
    REQUIRE(rep.delta.is_finite());
    REQUIRE(rep.delta.finite_value() == Catch::Approx(std::log(0.5)).margin(1e-6));
    // implied pressure = -p* = log 2
    REQUIRE(rep.implied_pressure.finite_value() == Catch::Approx(kLog2).margin(1e-6));
}

TEST_CASE("discriminant: boundary case") {
    // renewal weights p_n = n^{-3/2}/zeta(3/2): sum = 1 exactly at t = 0 = p*
    const double z32 = 2.612375348685488;
    const auto phi = Potential::depth2(
        [z32](Symbol a, Symbol b) {
            if (a == 1) return -1.5 * std::log(static_cast<double>(b)) - std::log(z32);
            static_cast<void>(b);
            return 0.0;
        },
        0.0, "null-recurrent-weights");
    const auto rep = discriminant(build_induced(CmsSpec::renewal_shift(), phi, 1, 8));
    REQUIRE(rep.classification == "boundary");
    REQUIRE(rep.implied_pressure.finite_value() == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("implied pressure is independent of the base symbol") {
    for (Symbol a : {1, 2, 3}) {
        const auto rep = discriminant(build_induced(full2_spec(), Potential::zero(), std::min(a, 2), 24));
        REQUIRE(rep.implied_pressure.finite_value() == Catch::Approx(kLog2).margin(1e-3));
    }
    // golden mean from both symbols
    for (Symbol a : {1, 2}) {
        const auto rep = discriminant(build_induced(CmsSpec::golden_mean(), Potential::zero(), a, 32));
        REQUIRE(rep.implied_pressure.finite_value() ==
                Catch::Approx(std::log((1.0 + std::sqrt(5.0)) / 2.0)).margin(1e-3));
    }
}

TEST_CASE("curve is monotone increasing on its finite domain") {
    const auto ind = build_induced(CmsSpec::renewal_shift(), Potential::zero(), 1, 8);
    double prev = -1e18;
    for (double t = -3.0; t < -0.05; t += 0.25) {
        const double v = induced_pressure_curve(ind, t).finite_value();
        REQUIRE(v > prev);
        prev = v;
    }
}

TEST_CASE("Kac/Abramov closure on the induced equilibrium") {
    // equilibrium of phi = 0 on the golden mean, induced at a = 1:
    // h_bar + int (phi_bar - P tau) d mu_bar = 0
    const auto gm = std::make_shared<TruncatedGraph>(build_truncation(CmsSpec::golden_mean(), 2));
    const auto sp = spectral_pressure(*gm, Potential::zero());
    const double P = sp.report.value.finite_value();
    const auto indm = induce_measure(sp.rpf.equilibrium, 1, 64);
    const auto ind = build_induced(CmsSpec::golden_mean(), Potential::zero(), 1, 64);
    // align the census with the measure's return words
    double closure = entropy(indm.induced);
    for (std::size_t k = 0; k < indm.return_words.size(); ++k) {
        const double pw = indm.induced.pi[k];
        if (pw <= 0.0) continue;
        const double phibar = induced_value(Potential::zero(), indm.return_words[k], 1);
        closure += pw * (phibar - P * static_cast<double>(indm.return_words[k].size()));
    }
    REQUIRE(closure == Catch::Approx(0.0).margin(1e-6));
    static_cast<void>(ind);
}

TEST_CASE("SPR certificates") {
    REQUIRE(spr_certificate_induced(full2_spec(), Potential::zero(), 1).spr);
    REQUIRE(spr_certificate_induced(CmsSpec::renewal_shift(), Potential::zero(), 1).spr);
    const double z32 = 2.612375348685488;
    const auto boundary_phi = Potential::depth2(
        [z32](Symbol a, Symbol b) {
            if (a == 1) return -1.5 * std::log(static_cast<double>(b)) - std::log(z32);
            static_cast<void>(b);
            return 0.0;
        },
        0.0, "boundary");
    const auto cert = spr_certificate_induced(CmsSpec::renewal_shift(), boundary_phi, 1);
    REQUIRE(cert.conclusive);
    REQUIRE_FALSE(cert.spr);
}
