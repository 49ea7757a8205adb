#pragma once

#include "mgsim/linalg.hpp"

// Per-DG 15-state nonlinear state-space model of a grid-forming inverter:
// droop + secondary control, LC filter, output connector.
//
// State vector (0-based index / symbol / unit):
//   0  P      filtered active power, W
//   1  Q      filtered reactive power, var
//   2  phi_d  voltage-controller integrator, V*s
//   3  phi_q
//   4  gam_d  current-controller integrator, A*s
//   5  gam_q
//   6  i_ld   bridge current d, A
//   7  i_lq   bridge current q, A
//   8  v_od   output voltage d, V
//   9  v_oq   output voltage q, V
//   10 i_od   output current d, A
//   11 i_oq   output current q, A
//   12 delta  angle vs. common frame, rad
//   13 w_n    secondary frequency set state, rad/s
//   14 V_n    secondary voltage set state, V
//
// Input vector (0-based):
//   0 w_com, 1 v_bd, 2 v_bq, 3 cf*sum(a_ij w_j), 4 cf*g*w_ref,
//   5 cf*sum(a_ij mP_j P_j), 6 cv*sum(a_ij vod_j), 7 cv*g*v_ref,
//   8 cv*sum(a_ij nQ_j Q_j)
//
// Measured outputs select states {0,1,6,7,8,9,10,11,13,14}.

namespace mgsim {

inline constexpr int kDgStates = 15;
inline constexpr int kDgInputs = 9;
inline constexpr int kDgOutputs = 10;

// 0-based indices of the measured states, in output order.
inline constexpr int kMeasuredIdx[kDgOutputs] = {0, 1, 6, 7, 8, 9, 10, 11, 13, 14};

struct DgParams {
    double m_p;      // active droop, rad/(s*W)
    double n_q;      // reactive droop, V/var
    double r_c;      // output connector resistance, ohm
    double l_c;      // output connector inductance, H
    double r_f;      // filter resistance, ohm
    double l_f;      // filter inductance, H
    double c_f;      // filter capacitance, F
    double k_pv, k_iv;  // voltage controller gains
    double k_pc, k_ic;  // current controller gains
    double omega_b;  // nominal angular frequency, rad/s
    double f_comp;   // current compensator
    double omega_c;  // power-filter cutoff, rad/s
    double c_freq;   // secondary frequency-control gain
    double c_volt;   // secondary voltage-control gain
    double g_pin;    // pinning gain

    void validate() const;

    // Benchmark parameter rows (DGs 1-2 and DGs 3-4).
    static DgParams bench_dg12();
    static DgParams bench_dg34();
};

struct DgMatrices {
    MatrixXd a;  // 15x15
    MatrixXd b;  // 15x9
    MatrixXd c;  // 10x15
};

/// Builds A, B, C for one DG. The secondary-control rows of A depend on the
/// DG's digraph row (neighbor weights) and pinning gain.
DgMatrices build_matrices(const DgParams& p, const VectorXd& adjacency_row,
                          double pinning);

/// Bilinear part f(x); nonzero only in components {0,1,6,7,8,9,10,11}.
VectorXd nonlinear_f(const VectorXd& x, const DgParams& p);

/// Full derivative A x + f(x) + B u.
VectorXd dg_derivative(const VectorXd& x, const VectorXd& u, const DgParams& p,
                       const DgMatrices& m);

/// 10x15 output map of the measured states.
MatrixXd output_matrix();

}  // namespace mgsim
