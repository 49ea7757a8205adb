#pragma once

#include "mgsim/microgrid.hpp"

// Small-signal analysis of operating points on the third-order reduced
// (droop + power filter) model: analytic Jacobians, state matrix via the
// algebraic Schur complement, decay-rate certificates, OPF feasibility
// checks, a penalty dispatch heuristic, and bounded worst-case attack search.
//
// Reduced state layout (n DGs): [p_1..p_n, q_1..q_n, delta_2..delta_n];
// the reference DG's angle is removed (identically zero). Algebraic vector:
// [i_od_1..n, i_oq_1..n] in the common frame.

namespace mgsim {

struct OperatingPoint {
    VectorXd p_opf;             // W
    VectorXd q_opf;             // var
    VectorXd v_opf;             // volts (per-DG terminal magnitude setpoint)
    VectorXd n_q;               // reactive droop per DG (for v_o(q))
    MatrixXcd y_kron;           // reduced admittance over DG buses
    std::vector<Complexd> z_c;  // connector impedance per DG

    int n_dg() const { return static_cast<int>(p_opf.size()); }
    /// Droop magnitude v_opf + nQ (q_opf - q) of DG i.
    double v_mag(int i, const VectorXd& q) const {
        return v_opf(i) + n_q(i) * (q_opf(i) - q(i));
    }
};

OperatingPoint make_operating_point(const MicrogridConfig& cfg,
                                    const VectorXd& p_opf, const VectorXd& q_opf,
                                    const VectorXd& v_opf);

inline int reduced_dim(int n_dg) { return 3 * n_dg - 1; }

/// Terminal voltage phasors v_o(q, delta) under reactive droop.
VectorXcd terminal_voltage(const VectorXd& x, const OperatingPoint& op);

/// Solves the (linear) algebraic constraint for the common-frame output
/// currents: z = [Re; Im]{Y (v_o - i_o z_c)}.
VectorXd solve_algebraic(const VectorXd& x, const OperatingPoint& op);

/// Algebraic residual g(x, z); zero when z solves the constraint.
VectorXd algebraic_residual(const VectorXd& x, const VectorXd& z,
                            const OperatingPoint& op);

/// Reduced dynamics f(x, z): power-filter rows plus angle rows
/// (w - w_com) * w_b with w from the droop relation.
VectorXd reduced_derivative(const VectorXd& x, const VectorXd& z,
                            const OperatingPoint& op, const MicrogridConfig& cfg);
/// Convenience overload with z solved internally.
VectorXd reduced_derivative(const VectorXd& x, const OperatingPoint& op,
                            const MicrogridConfig& cfg);

/// Droop-share matrix of the angle rows (first column -mP_1, diagonal mP_i).
MatrixXd mp_matrix(const VectorXd& m_p);

struct JacobianBlocks {
    MatrixXd df_dx, df_dz, dg_dx, dg_dz;
};
JacobianBlocks jacobians(const VectorXd& x, const VectorXd& z,
                         const OperatingPoint& op, const MicrogridConfig& cfg);

/// A_hat = df/dx - df/dz (dg/dz)^{-1} dg/dx. Throws on a singular
/// algebraic block.
MatrixXd state_matrix(const JacobianBlocks& blocks);

struct DecayCertificate {
    bool certified = false;
    double abscissa = 0.0;   // max real part of the spectrum
    MatrixXd witness;        // M > 0 with A'M + MA <= -2 eta M (when certified)
    double residual = 0.0;   // relative residual of the witness equation
};
/// Certificate via the spectral-abscissa equivalence: the matrix inequality
/// with some M > 0 holds iff abscissa < -eta; the witness solves the shifted
/// Lyapunov equation.
DecayCertificate certify_decay(const MatrixXd& a_hat, double eta_stab);

/// Droop steady state of the reduced model for given setpoints.
struct DroopEquilibrium {
    VectorXd x;      // reduced state
    VectorXd z;      // algebraic vector
    double omega;    // common steady frequency
    bool converged = false;
};
DroopEquilibrium droop_equilibrium(const MicrogridConfig& cfg,
                                   const OperatingPoint& op,
                                   const DroopEquilibrium* warm = nullptr);

struct OpfLimits {
    VectorXd alpha, beta, gamma;  // quadratic cost coefficients per DG
    VectorXd p_min, p_max;        // W
    VectorXd q_min, q_max;        // var
    double v_min_pu = 0.9, v_max_pu = 1.1;
    double line_max_va = 15000.0;
    double balance_tol_frac = 0.005;  // realized-vs-setpoint band

    static OpfLimits defaults(int n_dg);
};

struct OpfReport {
    double cost = 0.0;
    VectorXd p_realized, q_realized;
    double balance_mismatch = 0.0;  // worst |S_setpoint - S_realized|
    double balance_slack = 0.0;
    double p_box_slack = 0.0;
    double q_box_slack = 0.0;
    double line_slack = 0.0;     // VA
    double voltage_slack = 0.0;  // p.u.
    double stability_margin = 0.0;  // -abscissa of A_hat at the equilibrium
    bool feasible = false;
};
OpfReport opf_feasibility(const MicrogridConfig& cfg, const OpfLimits& limits,
                          const VectorXd& p_opf, const VectorXd& q_opf,
                          const VectorXd& v_opf);

/// Minimizer of alpha x^2 + beta x over [lo, hi].
double quadratic_box_min(double alpha, double beta, double lo, double hi);

struct DispatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DispatchResult {
    VectorXd p_opf, q_opf, v_opf;
    OpfReport report;
    int evaluations = 0;
};
/// Projected coordinate descent on the quadratic cost with quadratic
/// penalties on the feasibility slacks and a barrier on the decay margin.
/// Deterministic. Throws DispatchError when no feasible iterate is found.
DispatchResult dispatch(const MicrogridConfig& cfg, const OpfLimits& limits,
                        double eta_stab);

struct AttackSearchResult {
    double b_rate;
    double scale;
    Schedule schedule;
    double objective;       // integrated |v_od - v_ref| + w |w - w_ref|
    bool evaded_detection;  // residual never crossed the threshold
};
/// Grid/random search over (b, ||dz||-scale, schedule) within the admissible
/// bounds; each candidate is evaluated by a full scenario run on the
/// benchmark stealthy-intermittent construction.
std::vector<AttackSearchResult> worst_case_attack_search(
    const MicrogridConfig& cfg, const ObserverBundle& obs,
    const DetectorSettings& det, int budget, double horizon = 1.0,
    double dt = 2e-5, uint64_t seed = 7);

}  // namespace mgsim
