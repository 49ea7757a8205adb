#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mgsim/dg_model.hpp>

#include <random>

using namespace mgsim;

namespace {

// Independent oracle: direct transcription of the fifteen scalar state
// equations, written without reference to the matrix builder.
VectorXd scalar_equations(const VectorXd& x, const VectorXd& u, const DgParams& p,
                          double sum_a, double g) {
    VectorXd d(15);
    const double mp = p.m_p, nq = p.n_q, wc = p.omega_c, wb = p.omega_b;
    const double kpv = p.k_pv, kiv = p.k_iv, kpc = p.k_pc, kic = p.k_ic;
    const double lf = p.l_f, cf = p.c_f, lc = p.l_c, rc = p.r_c, rf = p.r_f;
    const double fi = p.f_comp, cfr = p.c_freq, cvo = p.c_volt;
    const double w_com = u(0), v_bd = u(1), v_bq = u(2);

    d(0) = -wc * x(0) + wc * x(8) * x(10) + wc * x(9) * x(11);
    d(1) = -wc * x(1) - wc * x(8) * x(11) + wc * x(9) * x(10);
    d(2) = -nq * x(1) - x(8) + x(14);
    d(3) = -x(9);
    d(4) = -kpv * nq * x(1) + kiv * x(2) - x(6) - kpv * x(8) - wb * cf * x(9) +
           fi * x(10) + kpv * x(14);
    d(5) = kiv * x(3) - x(7) + wb * cf * x(8) - kpv * x(9) + fi * x(11);
    d(6) = -(kpc * kpv / lf) * nq * x(1) + (kpc * kiv / lf) * x(2) + (kic / lf) * x(4) -
           ((rf + kpc) / lf) * x(6) - wb * x(7) - (1.0 / lf + kpc * kpv / lf) * x(8) -
           wb * (kpc / lf) * cf * x(9) + (kpc / lf) * fi * x(10) +
           (kpc * kpv / lf) * x(14) - mp * x(0) * x(7) + x(7) * x(13);
    d(7) = (kpc / lf) * kiv * x(3) + (kic / lf) * x(5) + wb * x(6) -
           ((rf + kpc) / lf) * x(7) + wb * (kpc / lf) * cf * x(8) -
           (kpc * kpv / lf + 1.0 / lf) * x(9) + (kpc / lf) * fi * x(11) +
           mp * x(0) * x(6) - x(6) * x(13);
    d(8) = (1.0 / cf) * x(6) - (1.0 / cf) * x(10) - mp * x(0) * x(9) + x(9) * x(13);
    d(9) = (1.0 / cf) * x(7) - (1.0 / cf) * x(11) + mp * x(0) * x(8) - x(8) * x(13);
    d(10) = (1.0 / lc) * x(8) - (rc / lc) * x(10) - (1.0 / lc) * v_bd -
            mp * x(0) * x(11) + x(11) * x(13);
    d(11) = (1.0 / lc) * x(9) - (rc / lc) * x(11) - (1.0 / lc) * v_bq +
            mp * x(0) * x(10) - x(10) * x(13);
    d(12) = -mp * x(0) + x(13) - w_com;
    d(13) = (mp * cfr * (sum_a + g) - cfr * sum_a * mp) * x(0) -
            cfr * (sum_a + g) * x(13) + u(3) + u(4) + u(5);
    d(14) = -cvo * nq * sum_a * x(1) - cvo * (sum_a + g) * x(8) + u(6) + u(7) + u(8);
    return d;
}

}  // namespace

TEST_CASE("build_matrices: benchmark entries") {
    DgParams p = DgParams::bench_dg12();
    VectorXd row = VectorXd::Zero(4);
    row(3) = 1.0;
    DgMatrices m = build_matrices(p, row, 1.0);

    CHECK(m.a(0, 0) == doctest::Approx(-31.41));
    CHECK(m.a(1, 1) == doctest::Approx(-31.41));
    CHECK(m.b(12, 0) == -1.0);
    CHECK(m.b(10, 1) == doctest::Approx(-1.0 / 0.35e-3));
    CHECK(m.b(11, 2) == doctest::Approx(-1.0 / 0.35e-3));

    // C selects the measured states, one unit entry per row.
    for (int i = 0; i < kDgOutputs; ++i) {
        CHECK(m.c.row(i).sum() == 1.0);
        CHECK(m.c(i, kMeasuredIdx[i]) == 1.0);
    }
    CHECK(m.c.col(2).isZero(0.0));                     // phi_d unmeasured
    CHECK(m.c(4, 8) == 1.0);                           // v_od is output 5
    CHECK((m.c * VectorXd::Unit(15, 8) - VectorXd::Unit(10, 4)).norm() == 0.0);
}

TEST_CASE("nonlinear_f: worked entries") {
    DgParams p = DgParams::bench_dg12();
    CHECK(nonlinear_f(VectorXd::Zero(15), p).norm() == 0.0);

    VectorXd x = VectorXd::Zero(15);
    x(8) = 1.0;   // v_od
    x(10) = 1.0;  // i_od
    VectorXd f = nonlinear_f(x, p);
    CHECK(f(0) == doctest::Approx(31.41));
    f(0) = 0.0;
    CHECK(f.norm() == 0.0);  // f12 needs w_n or P

    x.setZero();
    x(0) = 1.0;
    x(7) = 1.0;
    f = nonlinear_f(x, p);
    CHECK(f(6) == doctest::Approx(-9.4e-5));
}

TEST_CASE("dg_derivative: origin equilibrium and angle row") {
    DgParams p = DgParams::bench_dg12();
    VectorXd row = VectorXd::Zero(4);
    DgMatrices m = build_matrices(p, row, 0.0);
    CHECK(dg_derivative(VectorXd::Zero(15), VectorXd::Zero(9), p, m).norm() == 0.0);

    VectorXd x = VectorXd::Zero(15);
    x(13) = 1.0;  // w_n = 1
    VectorXd d = dg_derivative(x, VectorXd::Zero(9), p, m);
    CHECK(d(12) == doctest::Approx(1.0));  // ddelta = w_n - mP*P - w_com
}

TEST_CASE("dg_derivative agrees with the scalar-equation oracle") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int variant = 0; variant < 2; ++variant) {
        DgParams p = variant == 0 ? DgParams::bench_dg12() : DgParams::bench_dg34();
        VectorXd row = VectorXd::Zero(4);
        row(variant) = 1.0;
        row(3) = 0.5;
        double g = variant == 0 ? 1.0 : 0.0;
        DgMatrices m = build_matrices(p, row, g);
        for (int trial = 0; trial < 500; ++trial) {
            VectorXd x(15), in(9);
            for (int i = 0; i < 15; ++i) x(i) = 100.0 * u(rng);
            for (int i = 0; i < 9; ++i) in(i) = 100.0 * u(rng);
            VectorXd got = dg_derivative(x, in, p, m);
            VectorXd want = scalar_equations(x, in, p, row.sum(), g);
            CHECK((got - want).norm() <= 1e-9 * std::max(1.0, want.norm()));
        }
    }
}

TEST_CASE("error-term decomposition matches the expanded bilinear identity") {
    // xi' (f(x) - f(xhat)) written out term by term, with the products split
    // as x_i x_j - xh_i xh_j = xi_i x_j + xh_i xi_j.
    DgParams p = DgParams::bench_dg34();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const double wc = p.omega_c, mp = p.m_p;
    for (int trial = 0; trial < 500; ++trial) {
        VectorXd x(15), xh(15);
        for (int i = 0; i < 15; ++i) {
            x(i) = 10.0 * u(rng);
            xh(i) = 10.0 * u(rng);
        }
        VectorXd xi = x - xh;
        double lhs = xi.dot(nonlinear_f(x, p) - nonlinear_f(xh, p));
        double rhs =
            wc * xi(0) * xi(8) * x(10) + wc * xi(0) * xh(8) * xi(10) +
            wc * xi(0) * xi(9) * x(11) + wc * xi(0) * xh(9) * xi(11) -
            wc * xi(1) * xi(8) * x(11) - wc * xi(1) * xh(8) * xi(11) +
            wc * xi(1) * xi(9) * x(10) + wc * xi(1) * xh(9) * xi(10) -
            mp * xi(6) * xi(0) * x(7) + xi(6) * xh(7) * xi(13) +
            mp * xi(7) * xi(0) * x(6) - xi(7) * xh(6) * xi(13) -
            mp * xi(8) * xi(0) * x(9) + xi(8) * xh(9) * xi(13) +
            mp * xi(9) * xi(0) * x(8) - xi(9) * xh(8) * xi(13) -
            mp * xi(10) * xi(0) * x(11) + xi(10) * xh(11) * xi(13) +
            mp * xi(11) * xi(0) * x(10) - xi(11) * xh(10) * xi(13);
        CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
    }
}
