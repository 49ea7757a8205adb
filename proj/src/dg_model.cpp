#include "mgsim/dg_model.hpp"

namespace mgsim {

void DgParams::validate() const {
    if (!(l_f > 0.0 && c_f > 0.0 && l_c > 0.0 && omega_b > 0.0 && omega_c > 0.0))
        throw DimensionError("DgParams: L_f, C_f, L_c, omega_b, omega_c must be positive");
    if (m_p < 0.0 || n_q < 0.0)
        throw DimensionError("DgParams: droop gains must be nonnegative");
}

DgParams DgParams::bench_dg12() {
    DgParams p{};
    p.m_p = 9.4e-5;
    p.n_q = 1.3e-3;
    p.r_c = 0.03;
    p.l_c = 0.35e-3;
    p.r_f = 0.1;
    p.l_f = 1.35e-3;
    p.c_f = 50e-6;
    p.k_pv = 0.1;
    p.k_iv = 420.0;
    p.k_pc = 15.0;
    p.k_ic = 20000.0;
    p.omega_b = 314.16;
    p.f_comp = 0.75;
    p.omega_c = 31.41;
    p.c_freq = 30.0;
    p.c_volt = 30.0;
    p.g_pin = 0.0;
    return p;
}

DgParams DgParams::bench_dg34() {
    DgParams p = bench_dg12();
    p.m_p = 12.5e-5;
    p.n_q = 1.5e-3;
    p.k_pv = 0.05;
    p.k_iv = 390.0;
    p.k_pc = 10.5;
    p.k_ic = 16000.0;
    return p;
}

DgMatrices build_matrices(const DgParams& p, const VectorXd& adjacency_row,
                          double pinning) {
    p.validate();
    if (pinning < 0.0 || adjacency_row.minCoeff() < 0.0)
        throw DimensionError("build_matrices: adjacency and pinning must be nonnegative");
    const double sum_a = adjacency_row.sum();
    const double g = pinning;

    DgMatrices m;
    m.a = MatrixXd::Zero(kDgStates, kDgStates);
    m.b = MatrixXd::Zero(kDgStates, kDgInputs);
    m.c = output_matrix();
    MatrixXd& a = m.a;

    // Power filter
    a(0, 0) = -p.omega_c;
    a(1, 1) = -p.omega_c;
    // Voltage controller integrators
    a(2, 1) = -p.n_q;
    a(2, 8) = -1.0;
    a(2, 14) = 1.0;
    a(3, 9) = -1.0;
    // Current reference (gamma) integrators
    a(4, 1) = -p.k_pv * p.n_q;
    a(4, 2) = p.k_iv;
    a(4, 6) = -1.0;
    a(4, 8) = -p.k_pv;
    a(4, 9) = -p.omega_b * p.c_f;
    a(4, 10) = p.f_comp;
    a(4, 14) = p.k_pv;
    a(5, 3) = p.k_iv;
    a(5, 7) = -1.0;
    a(5, 8) = p.omega_b * p.c_f;
    a(5, 9) = -p.k_pv;
    a(5, 11) = p.f_comp;
    // Bridge current
    const double kc = p.k_pc / p.l_f;
    a(6, 1) = -kc * p.k_pv * p.n_q;
    a(6, 2) = kc * p.k_iv;
    a(6, 4) = p.k_ic / p.l_f;
    a(6, 6) = -(p.r_f + p.k_pc) / p.l_f;
    a(6, 7) = -p.omega_b;
    a(6, 8) = -(1.0 / p.l_f + kc * p.k_pv);
    a(6, 9) = -p.omega_b * kc * p.c_f;
    a(6, 10) = kc * p.f_comp;
    a(6, 14) = kc * p.k_pv;
    a(7, 3) = kc * p.k_iv;
    a(7, 5) = p.k_ic / p.l_f;
    a(7, 6) = p.omega_b;
    a(7, 7) = -(p.r_f + p.k_pc) / p.l_f;
    a(7, 8) = p.omega_b * kc * p.c_f;
    a(7, 9) = -(1.0 / p.l_f + kc * p.k_pv);
    a(7, 11) = kc * p.f_comp;
    // LC filter voltage
    a(8, 6) = 1.0 / p.c_f;
    a(8, 10) = -1.0 / p.c_f;
    a(9, 7) = 1.0 / p.c_f;
    a(9, 11) = -1.0 / p.c_f;
    // Output connector
    a(10, 8) = 1.0 / p.l_c;
    a(10, 10) = -p.r_c / p.l_c;
    a(11, 9) = 1.0 / p.l_c;
    a(11, 11) = -p.r_c / p.l_c;
    // Angle
    a(12, 0) = -p.m_p;
    a(12, 13) = 1.0;
    // Secondary frequency control (consensus + power sharing)
    a(13, 0) = p.m_p * p.c_freq * (sum_a + g) - p.c_freq * sum_a * p.m_p;
    a(13, 13) = -p.c_freq * (sum_a + g);
    // Secondary voltage control (consensus + reactive sharing)
    a(14, 1) = -p.c_volt * p.n_q * sum_a;
    a(14, 8) = -p.c_volt * (sum_a + g);

    MatrixXd& b = m.b;
    b(10, 1) = -1.0 / p.l_c;
    b(11, 2) = -1.0 / p.l_c;
    b(12, 0) = -1.0;
    b(13, 3) = 1.0;
    b(13, 4) = 1.0;
    b(13, 5) = 1.0;
    b(14, 6) = 1.0;
    b(14, 7) = 1.0;
    b(14, 8) = 1.0;
    return m;
}

VectorXd nonlinear_f(const VectorXd& x, const DgParams& p) {
    if (x.size() != kDgStates) throw DimensionError("nonlinear_f: state size");
    VectorXd f = VectorXd::Zero(kDgStates);
    f(0) = p.omega_c * (x(8) * x(10) + x(9) * x(11));
    f(1) = p.omega_c * (-x(8) * x(11) + x(9) * x(10));
    f(6) = -p.m_p * x(0) * x(7) + x(7) * x(13);
    f(7) = p.m_p * x(0) * x(6) - x(6) * x(13);
    f(8) = -p.m_p * x(0) * x(9) + x(9) * x(13);
    f(9) = p.m_p * x(0) * x(8) - x(8) * x(13);
    f(10) = -p.m_p * x(0) * x(11) + x(11) * x(13);
    f(11) = p.m_p * x(0) * x(10) - x(10) * x(13);
    return f;
}

VectorXd dg_derivative(const VectorXd& x, const VectorXd& u, const DgParams& p,
                       const DgMatrices& m) {
    if (u.size() != kDgInputs) throw DimensionError("dg_derivative: input size");
    return m.a * x + nonlinear_f(x, p) + m.b * u;
}

MatrixXd output_matrix() {
    MatrixXd c = MatrixXd::Zero(kDgOutputs, kDgStates);
    for (int i = 0; i < kDgOutputs; ++i) c(i, kMeasuredIdx[i]) = 1.0;
    return c;
}

}  // namespace mgsim
