#include <catch2/catch_amalgamated.hpp>

#include "cmsthermo/graph.hpp"
#include "cmsthermo/potential.hpp"
#include "oracles.hpp"

using namespace cms;

TEST_CASE("full shift truncation is complete with period 1") {
    const auto g = build_truncation(CmsSpec::full_shift(), 2);
    REQUIRE(g.size() == 2);
    REQUIRE(g.edge_count() == 4);
    REQUIRE(g.complete);
    REQUIRE(g.period == 1);
    REQUIRE(g.core.size() == 2);
}

TEST_CASE("golden mean family forbids 11 and has period 1") {
    const auto g = build_truncation(CmsSpec::golden_mean(), 2);
    REQUIRE(g.size() == 2);
    REQUIRE_FALSE(g.has_edge(1, 1));
    REQUIRE(g.has_edge(1, 2));
    REQUIRE(g.has_edge(2, 1));
    REQUIRE(g.has_edge(2, 2));
    REQUIRE(g.period == 1);
    REQUIRE(g.core.size() == 2);
    // gcd of cycle lengths by explicit enumeration
    const auto cycles = oracle::simple_cycles(g);
    long long p = 0;
    for (auto& c : cycles) p = p == 0 ? static_cast<long long>(c.size()) : std::gcd(p, static_cast<long long>(c.size()));
    REQUIRE(p == g.period);
}

TEST_CASE("renewal truncation expands the explicit rule") {
    const auto g = build_truncation(CmsSpec::renewal_shift(), 5);
    std::vector<std::pair<Symbol, Symbol>> want;
    for (Symbol k = 1; k <= 5; ++k) want.emplace_back(1, k);
    for (Symbol k = 2; k <= 5; ++k) want.emplace_back(k, k - 1);
    std::sort(want.begin(), want.end());
    REQUIRE(g.edges() == want);
    REQUIRE(g.period == 1);
}

TEST_CASE("star family has period 2 and degenerate N=1 truncation") {
    const auto g = build_truncation(CmsSpec::star_shift(), 6);
    REQUIRE(g.period == 2);
    REQUIRE_THROWS_AS(build_truncation(CmsSpec::star_shift(), 1), DegenerateTruncation);
}

TEST_CASE("truncations are nested for every built-in family") {
    for (const auto& spec : {CmsSpec::full_shift(), CmsSpec::renewal_shift(), CmsSpec::star_shift(),
                             CmsSpec::golden_mean()}) {
        for (int N = 2; N <= 9; ++N) {
            const auto a = build_truncation(spec, N);
            const auto b = build_truncation(spec, N + 1);
            for (auto& e : a.edges()) REQUIRE(b.has_edge(e.first, e.second));
            for (auto& e : a.edges()) REQUIRE(spec.edge(e.first, e.second));
        }
    }
}

TEST_CASE("periodic counts match matrix powers and brute force") {
    const auto full2 = build_truncation(CmsSpec::full_shift(), 2);
    REQUIRE(periodic_count(full2, 1, 3) == 4.0);

    // The spec's hand computation (M^4)_11 = 5 with M = [[1,1],[1,0]]
    // places the self-loop at the first vertex; in the forbid-11 labeling
    // that vertex is symbol 2.
    const auto gm = build_truncation(CmsSpec::golden_mean(), 2);
    REQUIRE(periodic_count(gm, 2, 4) == 5.0);
    REQUIRE(periodic_count(gm, 1, 4) == 2.0);

    // no closed walk: leaf of the star at odd length
    const auto star = build_truncation(CmsSpec::star_shift(), 5);
    REQUIRE(periodic_count(star, 2, 3) == 0.0);

    // exhaustive agreement with the brute-force oracle
    for (const auto& spec : {CmsSpec::golden_mean(), CmsSpec::renewal_shift(), CmsSpec::star_shift()}) {
        const auto g = build_truncation(spec, 5);
        for (Symbol a : g.vertices)
            for (int n = 1; n <= 8; ++n)
                REQUIRE(periodic_count(g, a, n) == oracle::count_periodic(g, a, n));
    }
}

TEST_CASE("higher block recode: vertex and edge counts") {
    const auto full2 = build_truncation(CmsSpec::full_shift(), 2);
    const auto rc2 = higher_block_recode(full2, 2);
    REQUIRE(rc2.graph.size() == 4);
    REQUIRE(rc2.graph.edge_count() == 8);

    const auto gm = build_truncation(CmsSpec::golden_mean(), 2);
    const auto gm2 = higher_block_recode(gm, 2);
    REQUIRE(gm2.graph.size() == 3);
    REQUIRE(gm2.graph.edge_count() == 5);
    REQUIRE(gm2.block_words == std::vector<Word>{{1, 2}, {2, 1}, {2, 2}});

    const auto id = higher_block_recode(gm, 1);
    REQUIRE(id.graph.size() == gm.size());
    REQUIRE(id.graph.edge_count() == gm.edge_count());
}

TEST_CASE("recode preserves periodic counts in grouped cylinders") {
    const auto gm = build_truncation(CmsSpec::golden_mean(), 2);
    const int m = 2;
    const auto rc = higher_block_recode(gm, m);
    for (Symbol a : gm.vertices) {
        for (int n = m; n <= 8; ++n) {
            double grouped = 0.0;
            for (std::size_t s = 0; s < rc.block_words.size(); ++s)
                if (rc.block_words[s][0] == a)
                    grouped += periodic_count(rc.graph, static_cast<Symbol>(s + 1), n);
            REQUIRE(grouped == periodic_count(gm, a, n));
        }
    }
}

TEST_CASE("edge subdivision: identity, counts, and transitivity") {
    const auto full2 = build_truncation(CmsSpec::full_shift(), 2);
    const auto id = subdivide_edges_fn(full2, [](Symbol, Symbol) { return 1.0; });
    REQUIRE(id.graph.size() == full2.size());
    REQUIRE(id.graph.edge_count() == full2.edge_count());

    const auto sd = subdivide_edges_fn(full2, [](Symbol, Symbol) { return 2.0; });
    REQUIRE(sd.graph.size() == 6);
    REQUIRE(sd.graph.edge_count() == 8);
    REQUIRE(sd.graph.core.size() == 6);

    const auto renewal3 = build_truncation(CmsSpec::renewal_shift(), 3);
    const auto sd2 = subdivide_edges_fn(renewal3, [](Symbol a, Symbol b) {
        return a == 1 ? static_cast<double>(b) : 1.0;
    });
    REQUIRE(sd2.graph.size() == 6);

    REQUIRE_THROWS_AS(subdivide_edges_fn(full2, [](Symbol, Symbol) { return 0.5; }),
                      std::invalid_argument);
}

TEST_CASE("uniform Rome checks") {
    REQUIRE(uniform_rome_check(CmsSpec::star_shift(), {1}, 1).value);
    REQUIRE(uniform_rome_check(CmsSpec::star_shift(), {1}, 1).family_exact);
    REQUIRE_FALSE(uniform_rome_check(CmsSpec::star_shift(), {2, 3}, 10).value);
    REQUIRE_FALSE(uniform_rome_check(CmsSpec::renewal_shift(), {1, 2, 3, 4, 5}, 50).value);
    REQUIRE_FALSE(uniform_rome_check(CmsSpec::full_shift(), {1}, 3).value);

    const auto gm = build_truncation(CmsSpec::golden_mean(), 2);
    REQUIRE(uniform_rome_check(gm, {1, 2}, 0).value);  // F = V, empty complement
    // complement {2} has a self-loop: unbounded paths
    REQUIRE_FALSE(uniform_rome_check(gm, {1}, 100).value);

    const auto renewal = build_truncation(CmsSpec::renewal_shift(), 12);
    const auto rep = uniform_rome_check(renewal, std::vector<Symbol>{1}, 3);
    // descending chain 12 -> 11 -> ... -> 2 has length 10 > 3
    REQUIRE_FALSE(rep.value);
    REQUIRE(rep.longest_path == 10);
    REQUIRE(uniform_rome_check(renewal, std::vector<Symbol>{1}, 10).value);
}

TEST_CASE("F-property checks") {
    REQUIRE(f_property_check(CmsSpec::star_shift(), 1, 3, 100).verdict == FVerdict::fails);
    REQUIRE(f_property_check(CmsSpec::star_shift(), 1, 2, 100).verdict == FVerdict::holds_up_to_cap);
    REQUIRE(f_property_check(CmsSpec::renewal_shift(), 1, 6, 100).verdict ==
            FVerdict::holds_up_to_cap);
    REQUIRE(f_property_check(CmsSpec::golden_mean(), 1, 5, 100).verdict ==
            FVerdict::holds_up_to_cap);
    REQUIRE(f_property_check(CmsSpec::full_shift(), 1, 3, 100).verdict == FVerdict::fails);

    // custom rule falls back to the empirical census: a full-shift clone
    const auto clone = CmsSpec::custom([](Symbol, Symbol) { return true; }, "full-clone");
    REQUIRE(f_property_check(clone, 1, 3, 100).verdict == FVerdict::fails);
    REQUIRE_FALSE(f_property_check(clone, 1, 3, 100).family_exact);
}

TEST_CASE("truncation dump format round trips") {
    const auto g = build_truncation(CmsSpec::golden_mean(), 2);
    const std::string text = dump_truncation(g);
    REQUIRE(text.rfind("cms-truncation v2\n", 0) == 0);
    const auto parsed = parse_truncation_dump(text);
    REQUIRE(parsed.edges() == g.edges());
    REQUIRE(parsed.trunc_index == 2);
}

TEST_CASE("admissible word census") {
    const auto gm = build_truncation(CmsSpec::golden_mean(), 2);
    REQUIRE(admissible_words(gm, 1).size() == 2);
    REQUIRE(admissible_words(gm, 2).size() == 3);
    REQUIRE(admissible_words(gm, 3).size() == 5);  // Fibonacci growth
    REQUIRE(word_admissible(gm, {1, 2, 2, 1}));
    REQUIRE_FALSE(word_admissible(gm, {1, 1}));
}
