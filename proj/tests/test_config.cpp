#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mgsim/config.hpp>
#include <mgsim/csv.hpp>

#include <fstream>
#include <sstream>

using namespace mgsim;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string bundled(const std::string& name) {
    return std::string(MGSIM_CONFIG_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("benchmark.cfg parses and carries the parameter tables") {
    ScenarioConfig cfg = parse_config(slurp(bundled("benchmark.cfg")));
    REQUIRE(cfg.microgrid.n_dg() == 4);
    CHECK(cfg.microgrid.dgs[0].m_p == doctest::Approx(9.4e-5));
    CHECK(cfg.microgrid.dgs[1].n_q == doctest::Approx(1.3e-3));
    CHECK(cfg.microgrid.dgs[2].m_p == doctest::Approx(12.5e-5));
    CHECK(cfg.microgrid.dgs[2].k_ic == doctest::Approx(16000.0));
    CHECK(cfg.microgrid.dgs[3].k_pv == doctest::Approx(0.05));
    CHECK(cfg.microgrid.dgs[0].omega_b == doctest::Approx(314.16));
    REQUIRE(cfg.microgrid.lines.size() == 3);
    CHECK(cfg.microgrid.lines[1].r == doctest::Approx(0.35));
    CHECK(cfg.microgrid.lines[1].l == doctest::Approx(1847e-6));
    REQUIRE(cfg.microgrid.loads.size() == 4);
    CHECK(cfg.microgrid.loads[0].r == doctest::Approx(30.0));
    CHECK(cfg.microgrid.loads[3].x == doctest::Approx(15.0));
    CHECK(cfg.attack.kind == AttackPlan::Kind::none);
}

TEST_CASE("config round-trips through serialize/parse") {
    for (const char* name :
         {"benchmark.cfg", "attack_uniform.cfg", "attack_stealthy.cfg"}) {
        std::string text = slurp(bundled(name));
        ScenarioConfig cfg = parse_config(text);
        std::string canon = serialize_config(cfg);
        ScenarioConfig cfg2 = parse_config(canon);
        CHECK(serialize_config(cfg2) == canon);
    }
}

TEST_CASE("config: empty attack section means attack-free") {
    std::string text = slurp(bundled("benchmark.cfg"));
    ScenarioConfig cfg = parse_config(text);
    CHECK(cfg.attack.kind == AttackPlan::Kind::none);
    // A plan that never fires leaves run_scenario untouched by construction.
}

TEST_CASE("config: schedule invariant violation is rejected with the path") {
    std::string text = slurp(bundled("attack_uniform.cfg"));
    // Corrupt the schedule: tau exceeds the slot gap.
    auto pos = text.find("t_k =");
    REQUIRE(pos != std::string::npos);
    std::string bad = text.substr(0, pos) +
                      "t_k = 0.4 0.5\ntau_k = 0.2 0.1\n" +
                      text.substr(text.find('\n', text.find("tau_k =")) + 1);
    CHECK_THROWS_AS(parse_config(bad), DimensionError);
}

TEST_CASE("config: unknown keys and type mismatches carry line context") {
    try {
        parse_config("[sim]\nduration = 1.0\nwibble = 3\n");
        CHECK(false);
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("sim.wibble") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }
    try {
        parse_config("[sim]\nduration = fast\n");
        CHECK(false);
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("expected a number") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("stray = 1\n"), ConfigError);
}

TEST_CASE("default channel scales map channel types to reference magnitudes") {
    MicrogridConfig mg = MicrogridConfig::benchmark();
    auto scales = default_channel_scales(mg, {3, 6, 0});
    CHECK(scales[0] == doctest::Approx(30.0 * mg.omega_ref));
    CHECK(scales[1] == doctest::Approx(30.0 * mg.v_ref_volts()));
    CHECK(scales[2] == doctest::Approx(30.0 * mg.omega_ref));
}

TEST_CASE("apply_override: valid path mutates, bad path throws") {
    ScenarioConfig cfg = parse_config(slurp(bundled("benchmark.cfg")));
    apply_override(cfg, "detector.floor", "0.125");
    CHECK(cfg.detector.settings.floor == 0.125);
    CHECK_THROWS_AS(apply_override(cfg, "detector.bogus", "1"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "nodots", "1"), ConfigError);
}

TEST_CASE("trace CSV: stable header and byte-identical reruns") {
    ScenarioConfig cfg = parse_config(slurp(bundled("attack_uniform.cfg")));
    cfg.sim.duration = 0.05;
    cfg.attack.schedule = {{0.01}, {0.03}};
    ObserverBundle bundle = make_observer_bundle(cfg);
    RunOptions opt;
    opt.duration = cfg.sim.duration;
    opt.dt = cfg.sim.dt;

    auto run_once = [&](const std::string& path) {
        SimTrace tr = run_scenario(cfg.microgrid, cfg.attack, bundle,
                                   cfg.detector.settings, opt);
        write_trace_csv(path, tr);
    };
    run_once("trace_a.csv");
    run_once("trace_b.csv");
    std::string a = slurp("trace_a.csv"), b = slurp("trace_b.csv");
    CHECK(a == b);
    CHECK(a.substr(0, a.find('\n')) == kTraceHeader);
    std::remove("trace_a.csv");
    std::remove("trace_b.csv");
}
