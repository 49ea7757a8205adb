#pragma once

#include "mgsim/attack.hpp"
#include "mgsim/detector.hpp"
#include "mgsim/dg_model.hpp"
#include "mgsim/observer.hpp"

#include <complex>
#include <string>
#include <vector>

// Coupled multi-DG benchmark: digraph neighbor aggregation, quasi-static
// network solution, Kron reduction, and the full plant/observer/detector
// scenario stepping.

namespace mgsim {

struct NetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, double time)
        : std::runtime_error(what), t(time) {}
    double t;
};

using Complexd = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;

struct Line {
    int from = 0, to = 0;
    double r = 0.0;  // ohm
    double l = 0.0;  // H
};

struct Load {
    int bus = 0;
    double r = 0.0;  // ohm
    double x = 0.0;  // ohm at nominal frequency
};

struct MicrogridConfig {
    std::vector<DgParams> dgs;
    MatrixXd adjacency;  // a_ij: weight of the link j -> i
    VectorXd pinning;    // g_i
    std::vector<Line> lines;
    std::vector<Load> loads;
    double v_ref_pu = 1.0;
    double v_base = 311.127;        // volts per p.u. (phase amplitude)
    double omega_ref = 314.159265358979;  // rad/s (50 Hz)
    double network_omega = 314.16;  // phasor frequency for line reactances

    int n_dg() const { return static_cast<int>(dgs.size()); }
    double v_ref_volts() const { return v_ref_pu * v_base; }
    void validate() const;

    /// Default start: electrical states at rest, primary references at
    /// nominal (w_n = omega_b, V_n = v_base).
    std::vector<VectorXd> flat_start() const;

    static MicrogridConfig benchmark();
};

/// Bus admittance matrix over the DG buses: series lines plus
/// constant-impedance loads, evaluated at the nominal frequency.
MatrixXcd bus_admittance(const MicrogridConfig& cfg);

/// Kron reduction: eliminates all buses not in `keep` via the Schur
/// complement. Throws NetworkError when the eliminated block is singular.
MatrixXcd kron_reduce(const MatrixXcd& y, const std::vector<int>& keep);

/// Solves the quasi-static network for the per-DG connector-side voltages.
/// i_o_local holds each DG's output current in its own dq frame; delta gives
/// the frame angles. Returns (v_bd, v_bq) per DG.
std::vector<Eigen::Vector2d> solve_bus_voltages(
    const std::vector<Eigen::Vector2d>& i_o_local, const VectorXd& delta,
    const MicrogridConfig& cfg);

/// Complex-power bookkeeping of one network solution.
struct PowerBalance {
    Complexd injected;
    Complexd load;
    Complexd line_loss;
};
PowerBalance power_balance(const std::vector<Eigen::Vector2d>& i_o_local,
                           const VectorXd& delta, const MicrogridConfig& cfg);

/// Neighbor aggregation of the secondary-control input vector for DG i.
VectorXd assemble_u(int i, const std::vector<VectorXd>& states,
                    const MicrogridConfig& cfg, const Eigen::Vector2d& v_b);

struct AttackPlan {
    enum class Kind { none, uniform, gaussian_sine, stealthy };
    Kind kind = Kind::none;
    std::vector<int> target_dgs;            // DGs with corrupted inputs
    std::vector<int> u_channels = {3, 6};   // corrupted input slots (0-based)
    std::vector<double> channel_scales;     // per-channel gain on raw samples
    Schedule schedule;                      // empty schedule = never active
    ArbitraryAttack arbitrary;
    StealthyAttackSpec stealthy;
    bool has_stealthy = false;
    uint64_t seed = 1;

    void validate(int n_dg) const;
};

struct ObserverBundle {
    bool enabled = true;
    ObserverVariant variant = ObserverVariant::nonlinear;
    std::vector<ObserverGain> gains;  // one per DG
};

struct DetectorSettings {
    double lambda_f = 100.0;
    double floor = 0.05;
    double chi_bar = 0.0;
    double zeta_bar = 0.0;
    double arm_time = 0.35;       // detection enabled after the startup transient
    bool mitigation = false;
    bool use_filtered_residual = false;
};

struct SimTrace {
    std::vector<double> t;                      // uniform grid, post-step times
    std::vector<std::vector<VectorXd>> x;       // [step][dg]
    std::vector<std::vector<VectorXd>> xhat;    // [step][dg]
    std::vector<std::vector<double>> r_norm;    // [step][dg]
    std::vector<std::vector<double>> eta;       // [step][dg]
    std::vector<std::vector<uint8_t>> detected;
    std::vector<std::vector<uint8_t>> mitigated;

    struct Event {
        double t;
        int dg;  // -1 for global events
        std::string what;
    };
    std::vector<Event> events;

    int steps() const { return static_cast<int>(t.size()); }
};

struct RunOptions {
    double duration = 1.0;
    double dt = 1e-4;
    std::vector<VectorXd> x0;             // optional per-DG plant start
    std::vector<VectorXd> xhat0_offset;   // added to the default observer init
};

/// Fixed-step RK4 over the coupled plant + observer + attack-generator stack.
/// Per step: network solve, input assembly (with attack corruption on the
/// plant side), integration, residual/threshold update, detection flags and
/// optional mitigation. Deterministic for a fixed seed.
SimTrace run_scenario(const MicrogridConfig& cfg, const AttackPlan& plan,
                      const ObserverBundle& obs, const DetectorSettings& det,
                      const RunOptions& opt);

/// Per-DG frequency at a state: w_i = w_n - mP * P.
double dg_frequency(const VectorXd& x, const DgParams& p);

/// Attack-free coupled plant vector field (network solved internally).
std::vector<VectorXd> plant_derivatives(const MicrogridConfig& cfg,
                                        const std::vector<VectorXd>& states);

/// Newton refinement of the coupled attack-free equilibrium, starting from
/// `guess` (typically a settled trajectory endpoint).
std::vector<VectorXd> polish_equilibrium(const MicrogridConfig& cfg,
                                         const std::vector<VectorXd>& guess,
                                         int iterations = 20);

struct RunSummary {
    std::vector<double> final_vod_dev_pu;   // |v_od - v_ref| / v_ref at the end
    std::vector<double> final_omega_dev;    // |w - w_ref| at the end, rad/s
    std::vector<double> peak_r_norm;        // post-arm residual peak
    int detection_count = 0;
    double first_detection_t = -1.0;
    double detection_latency = -1.0;        // vs. first scheduled activation
};
RunSummary summarize(const SimTrace& trace, const MicrogridConfig& cfg,
                     const AttackPlan& plan, const DetectorSettings& det);

}  // namespace mgsim
