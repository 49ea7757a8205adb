#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mgsim/attack.hpp>
#include <mgsim/dg_model.hpp>

#include <cmath>

using namespace mgsim;

TEST_CASE("Schedule: slot structure and validation") {
    Schedule s{{0.4, 0.5333, 0.6667}, {0.0667, 0.0667, 0.0667}};
    s.validate();
    CHECK(!s.active_at(0.39));
    CHECK(s.active_at(0.4));
    CHECK(s.active_at(0.45));
    CHECK(!s.active_at(0.48));
    CHECK(s.active_at(0.55));
    CHECK(s.slot_at(0.9).value() == 2);

    Schedule bad{{0.4, 0.5}, {0.2, 0.1}};  // tau_1 > t_2 - t_1
    CHECK_THROWS_AS(bad.validate(), DimensionError);
    Schedule bad2{{0.4}, {0.0}};
    CHECK_THROWS_AS(bad2.validate(), DimensionError);
}

TEST_CASE("exemplar generator: invariance, contraction, offset ratios") {
    StealthyAttackSpec s = StealthyAttackSpec::exemplar_2state(0.2, 1.0);
    Eigen::Vector2d w(-0.4472, 0.8944);
    Eigen::Vector2d mapped = s.closed_loop() * w;
    CHECK((mapped + 2.0 * w).norm() < 1e-4);  // published values are 4-digit
    CHECK(s.delta_z.size() == 3);
    CHECK(s.delta_z[0].norm() == doctest::Approx(0.5));
    CHECK(s.delta_z[1].norm() == doctest::Approx(0.25));
    CHECK(s.delta_z[2].norm() == doctest::Approx(0.125));
    for (const auto& dz : s.delta_z) CHECK(s.v_a.contains(dz, 1e-9));
}

TEST_CASE("synthesize_stealthy: benchmark frequency-broadcast channel") {
    DgParams p = DgParams::bench_dg12();
    VectorXd row = VectorXd::Zero(4);
    row(3) = 1.0;
    DgMatrices m = build_matrices(p, row, 1.0);

    StealthyAttackSpec s =
        synthesize_stealthy(m.a, m.b, m.c, {0}, {}, {0.5, 0.25, 0.125}, 0.2);
    // The only stealthy direction is the angle state.
    CHECK(s.v_a.dim() == 1);
    CHECK(s.v_a.contains(VectorXd::Unit(15, 12), 1e-9));
    CHECK(s.used_intersection);
    // The friend's free directions admit the -2 contraction.
    VectorXd v = s.v_a.vector(0);
    CHECK((s.closed_loop() * v + 2.0 * v).norm() < 1e-8);
    // Nonzero attack: Q restricted to V_a is nonzero.
    CHECK((s.q_k * v).norm() > 1.0);
    // Exogenous gain basis exists on this channel.
    CHECK(s.l_a.cols() == 1);
}

TEST_CASE("synthesize_stealthy: neighbor-aggregate channels force a silent friend") {
    DgParams p = DgParams::bench_dg34();
    VectorXd row = VectorXd::Zero(4);
    row(0) = 1.0;
    DgMatrices m = build_matrices(p, row, 0.0);
    StealthyAttackSpec s =
        synthesize_stealthy(m.a, m.b, m.c, {3, 6}, {}, {0.1}, 0.2);
    CHECK(s.v_a.dim() == 1);
    CHECK(s.v_a.contains(VectorXd::Unit(15, 12), 1e-9));
    // Channels 4 and 7 act on measured states: invariance forces Q V_a = 0
    // and admits no exogenous direction.
    CHECK((s.q_k * s.v_a.vector(0)).norm() < 1e-8);
    CHECK(s.l_a.cols() == 0);
}

TEST_CASE("synthesize_stealthy: empty channel set is an error") {
    DgParams p = DgParams::bench_dg12();
    DgMatrices m = build_matrices(p, VectorXd::Zero(4), 1.0);
    CHECK_THROWS_AS(synthesize_stealthy(m.a, m.b, m.c, {}, {}, {0.1}, 0.2),
                    SynthesisError);
}

TEST_CASE("attack_signal: envelope and gating") {
    StealthyAttackSpec s = StealthyAttackSpec::exemplar_2state(0.2, 1.0);
    Schedule sched{{70.0, 72.0, 74.0}, {1.5, 1.5, 1.5}};
    sched.validate();

    VectorXd zeta = -s.delta_z[0];
    // At the activation instant the envelope is zero.
    CHECK(attack_signal(s, sched, 70.0, zeta).a.norm() == 0.0);
    // Before the first activation: nothing.
    CHECK(attack_signal(s, sched, 1.0, zeta).a.norm() == 0.0);
    // One second into a slot: beta = 1 - e^{-0.2}.
    AttackOutput out = attack_signal(s, sched, 71.0, zeta);
    double beta = 1.0 - std::exp(-0.2);
    CHECK(beta == doctest::Approx(0.18127).epsilon(1e-4));
    CHECK((out.a - beta * (s.q_k * zeta)).norm() < 1e-12);
    // Deactivated interval: zero regardless of zeta.
    CHECK(attack_signal(s, sched, 71.7, zeta).a.norm() == 0.0);
    CHECK(attack_signal(s, sched, 71.7, zeta).zeta_dot.norm() == 0.0);
}

TEST_CASE("attack_signal: zeta stays in span(V_a) and decays at rate 2") {
    StealthyAttackSpec s = StealthyAttackSpec::exemplar_2state(0.2, 1.0);
    Schedule sched{{70.0}, {1.0}};
    VectorXd zeta = -s.delta_z[0];
    double t = 70.0, dt = 1e-3;
    auto f = [&](double tt, const VectorXd& z) {
        return attack_signal(s, sched, tt, z).zeta_dot;
    };
    for (int i = 0; i < 1000; ++i) {
        zeta = rk4_step(f, zeta, t, dt);
        t += dt;
    }
    CHECK(s.v_a.contains(zeta, 1e-6));
    double want = s.delta_z[0].norm() * std::exp(-2.0 * (t - 70.0));
    CHECK(std::abs(zeta.norm() - want) <= 0.01 * want);
}

TEST_CASE("arbitrary_attack: degenerate sigma, support, determinism") {
    DetRng rng(7);
    ArbitraryAttack gs;
    gs.kind = ArbitraryAttack::Kind::gaussian_sine;
    gs.sigma = 0.0;
    for (int i = 0; i < 10; ++i) CHECK(arbitrary_attack(gs, 0.123 * i, rng) == 0.0);

    ArbitraryAttack uni;  // defaults: uniform(-0.01, 0.01)
    DetRng r1(99), r2(99);
    for (int i = 0; i < 1000; ++i) {
        double v = arbitrary_attack(uni, i * 1e-4, r1);
        CHECK(v >= -0.01);
        CHECK(v <= 0.01);
        CHECK(v == arbitrary_attack(uni, i * 1e-4, r2));
    }

    ArbitraryAttack bad;
    bad.lo = 0.5;
    bad.hi = 0.5;
    CHECK_THROWS_AS(bad.validate(), DimensionError);
}
