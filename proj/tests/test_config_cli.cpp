#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cmsthermo/checks.hpp"
#include "cmsthermo/config.hpp"
#include "cmsthermo/runner.hpp"
#include "cmsthermo/serialize.hpp"

using namespace cms;

namespace {
std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("cmsthermo-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
    return p.string();
}
}  // namespace

TEST_CASE("TOML subset parser") {
    const std::string text = R"(
# experiment file
[experiment]
kind = "pressure"   # trailing comment
base_symbol = 1
csv = true

[graph]
family = "golden"

[schedules]
N = [10, 20, 40]
t = [1.0, 2.0]
)";
    const auto j = parse_toml(text);
    REQUIRE(j.at("experiment").at("kind") == "pressure");
    REQUIRE(j.at("experiment").at("csv") == true);
    REQUIRE(j.at("graph").at("family") == "golden");
    REQUIRE(j.at("schedules").at("N").size() == 3);
    REQUIRE(j.at("schedules").at("N")[2] == 40);
    REQUIRE(j.at("schedules").at("t")[1] == 2.0);

    REQUIRE_THROWS_AS(parse_toml("[unterminated\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_toml("key value-without-equals\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_toml("k = \"open string\n"), ConfigError);
}

TEST_CASE("config validation reports the failing field path") {
    nlohmann::ordered_json j;
    j["experiment"] = {{"kind", "pressure"}};
    j["graph"] = {{"family", "golden"}};
    j["schedules"] = {{"N", {40, 20, 10}}};
    try {
        config_from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("schedules.N") != std::string::npos);
    }
    j["schedules"] = {{"N", {10, 20}}};
    j["experiment"] = {{"kind", "no-such-kind"}};
    REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
    j["experiment"] = {{"kind", "suspend"}};
    REQUIRE_THROWS_AS(config_from_json(j), ConfigError);  // missing roof
}

TEST_CASE("JSON mirror and TOML agree") {
    const auto dir = scratch_dir("mirror");
    const auto toml = write_file(dir / "a.toml", R"(
[experiment]
kind = "rome"
rome_set = [1]
rome_bound = 1
[graph]
family = "star"
)");
    const auto json_file = write_file(dir / "a.json", R"({
  "experiment": {"kind": "rome", "rome_set": [1], "rome_bound": 1},
  "graph": {"family": "star"}
})");
    const auto a = load_config(toml);
    const auto b = load_config(json_file);
    REQUIRE(a.kind == b.kind);
    REQUIRE(a.graph.family == b.graph.family);
    REQUIRE(a.rome_set == b.rome_set);
}

TEST_CASE("runner: golden-mean pressure experiment") {
    const auto dir = scratch_dir("run-pressure");
    ExperimentConfig cfg;
    cfg.kind = "pressure";
    cfg.graph.family = "golden";
    cfg.schedules.N = {2};
    cfg.schedules.n = {60};
    setenv("CMSTHERMO_CACHE", (dir / "cache").string().c_str(), 1);
    const auto res = run_experiment(cfg, dir);
    REQUIRE(res.exit_code == 0);
    const double val = res.report.at("limit").at("value").get<double>();
    REQUIRE(val == Catch::Approx(0.481212).margin(1e-5));
    REQUIRE(std::filesystem::exists(dir / "report.json"));
    REQUIRE(std::filesystem::exists(dir / "pressure_table.csv"));

    // determinism: identical config gives a byte-identical report modulo
    // the timestamp field
    const auto dir2 = scratch_dir("run-pressure-2");
    const auto res2 = run_experiment(cfg, dir2);
    auto a = res.report;
    auto b = res2.report;
    a.erase("timestamp");
    b.erase("timestamp");
    REQUIRE(a.dump() == b.dump());
}

TEST_CASE("runner: star pinf verdict is -inf") {
    const auto dir = scratch_dir("run-pinf");
    ExperimentConfig cfg;
    cfg.kind = "pinf";
    cfg.graph.family = "star";
    cfg.schedules.q = {1};
    cfg.schedules.M = {3};
    cfg.schedules.n = {60};
    const auto res = run_experiment(cfg, dir);
    REQUIRE(res.exit_code == 0);
    REQUIRE(res.report.at("pinf").at("value") == "-inf");
}

TEST_CASE("runner: undecided experiments exit with code 2") {
    const auto dir = scratch_dir("run-ztl");
    ExperimentConfig cfg;
    cfg.kind = "ztl";
    cfg.graph.family = "renewal";
    cfg.potential.kind = "one_minus_v";
    cfg.schedules.N = {48};
    cfg.schedules.t = {1, 2, 4};
    const auto res = run_experiment(cfg, dir);
    REQUIRE(res.exit_code == 2);  // beta_inf = beta: spr-lost
    REQUIRE(res.report.at("ztl").at("verdict") == "spr-lost");
}

TEST_CASE("partition cache: warm equals cold, corruption recovers") {
    const auto dir = scratch_dir("cache");
    PartitionCache cache(dir);
    const auto g = build_truncation(CmsSpec::golden_mean(), 2);
    const auto cold = cache.log_partition_sums(g, Potential::zero(), 1, 30);
    const auto warm = cache.log_partition_sums(g, Potential::zero(), 1, 30);
    REQUIRE(cold == warm);
    // corrupt every cache entry, then expect a clean recompute
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        std::ofstream out(e.path());
        out << "{corrupt";
    }
    bool warned = false;
    const auto again = cache.log_partition_sums(g, Potential::zero(), 1, 30, &warned);
    REQUIRE(warned);
    REQUIRE(again == cold);
}

TEST_CASE("serialization round trips and schema fields") {
    const auto gm = std::make_shared<TruncatedGraph>(build_truncation(CmsSpec::golden_mean(), 2));
    const auto parry = spectral_pressure(*gm, Potential::zero()).rpf.equilibrium;
    const auto j = to_json(parry);
    REQUIRE(j.at("order") == 1);
    REQUIRE(j.at("P").size() == 4);  // row-major 2x2
    const auto back = markov_from_json(j, gm);
    REQUIRE(entropy(back) == Catch::Approx(entropy(parry)).margin(1e-12));

    const auto cv = cylinder_vector(Mixture::pure(parry), 2);
    const auto cj = to_json(cv);
    REQUIRE(cj.at("depth") == 2);
    REQUIRE(cj.at("lambda").get<double>() == Catch::Approx(1.0));
    REQUIRE(cj.at("entries").size() == 5);  // 2 + 3 admissible words

    PressureReport rep;
    rep.value = ExtReal::pos_inf();
    rep.method = "closed-form";
    REQUIRE(to_json(rep).at("value") == "inf");
    const std::string csv = pressure_csv(rep);
    REQUIRE(csv.rfind("n,Z_n,log_Z_n_over_n", 0) == 0);
}

TEST_CASE("verify registry: family filter and negative control") {
    // empty family list after filtering: no-op pass
    const auto none = run_acceptance({"no-such-family"});
    REQUIRE(none.empty());

    // an injected wrong constant must fail with the check named
    checks_detail::Gate g;
    const auto sp = spectral_pressure(build_truncation(CmsSpec::golden_mean(), 2), Potential::zero());
    g.expect(std::abs(sp.report.value.finite_value() - 0.5) <= 1e-9,
             "golden-mean entropy equals the injected wrong constant");
    REQUIRE_FALSE(g.ok);
    REQUIRE(g.detail.str().find("injected wrong constant") != std::string::npos);
}
