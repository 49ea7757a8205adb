#pragma once

#include "mgsim/linalg.hpp"

#include <cstdint>
#include <optional>
#include <vector>

// Attack synthesis and evaluation: scheduled stealthy intermittent integrity
// attacks built from controlled-invariant subspaces, plus stochastic
// per-channel corruptions.

namespace mgsim {

/// Activation instants and active durations of an intermittent attack.
/// Invariant: 0 < tau_k <= t_{k+1} - t_k for all but the last slot.
struct Schedule {
    std::vector<double> t_k;
    std::vector<double> tau_k;

    void validate() const;
    std::size_t slots() const { return t_k.size(); }
    /// Slot whose implementation interval [t_k, t_{k+1}) contains t, if any.
    std::optional<std::size_t> slot_at(double t) const;
    bool active_at(double t) const;
};

/// Covert signal generator: internal state zeta evolves under the
/// friend-corrected dynamics, the emitted corruption is beta(t)*(Q zeta).
struct StealthyAttackSpec {
    MatrixXd a_gen;               // generator state matrix (n_g x n_g)
    MatrixXd b_a;                 // composite channel map [B Gamma_u, 0]
    SubspaceBasis v_a;            // stealthy subspace
    MatrixXd q_k;                 // friend, channel-space rows
    MatrixXd l_a;                 // basis of ker(D') ∩ (B_a)^{-1} V_a
    std::vector<VectorXd> delta_z;  // per-slot initial offsets
    double b_rate = 0.2;          // envelope rate
    std::vector<int> u_channels;  // 0-based input channels (Gamma_u)
    std::vector<int> y_channels;  // 0-based output channels (Gamma_y)
    bool used_intersection = true;  // V(W_a1) ∩ V(H) vs. V(W_a1) alone
    double c1 = 1e-4, c2 = 0.5;   // admissible ||delta_z|| band

    Eigen::Index gen_dim() const { return a_gen.rows(); }
    Eigen::Index channel_dim() const { return q_k.rows(); }
    MatrixXd closed_loop() const { return a_gen + b_a * q_k; }
    void validate() const;

    /// The two-state worked generator (damped oscillator, friend with
    /// contraction -2, offsets in 4:2:1 ratio). `norm_scale` multiplies the
    /// published offset norms {0.5, 0.25, 0.125}.
    static StealthyAttackSpec exemplar_2state(double b_rate, double norm_scale);
};

/// Builds a StealthyAttackSpec for (A, B, C) with the given attack channels.
/// V_a follows the subspace recipe (weakly unobservable ∩ controlled
/// invariant in the unobservable subspace, falling back to the former when
/// the intersection is trivial); Q shapes the invariant dynamics toward
/// contraction -2 where the channels allow. Throws SynthesisError when no
/// stealthy direction exists.
StealthyAttackSpec synthesize_stealthy(const MatrixXd& a, const MatrixXd& b,
                                       const MatrixXd& c,
                                       const std::vector<int>& u_channels,
                                       const std::vector<int>& y_channels,
                                       const std::vector<double>& dz_norms,
                                       double b_rate);

/// Attack value and generator derivative at time t. zeta must be reset to
/// -delta_z[k] at each activation instant t_k (the caller owns that event).
struct AttackOutput {
    VectorXd a;        // channel-space corruption (u channels then y channels)
    VectorXd zeta_dot;
};
AttackOutput attack_signal(const StealthyAttackSpec& spec, const Schedule& sched,
                           double t, const VectorXd& zeta);

/// Deterministic RNG (splitmix64 core, explicit Box-Muller) so traces are
/// byte-identical across standard libraries.
class DetRng {
  public:
    explicit DetRng(uint64_t seed) : state_(seed) {}
    double uniform01();
    double uniform(double lo, double hi);
    double gaussian();  // standard normal

  private:
    uint64_t next_u64();
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct ArbitraryAttack {
    enum class Kind { uniform, gaussian_sine };
    Kind kind = Kind::uniform;
    double lo = -0.01, hi = 0.01;   // uniform support
    double sigma = 0.0;             // gaussian std dev
    double amplitude = 1.0;         // carrier amplitude
    double freq_hz = 50.0;          // carrier frequency

    void validate() const;
};

/// One per-channel sample (held for the current step).
double arbitrary_attack(const ArbitraryAttack& kind, double t, DetRng& rng);

}  // namespace mgsim
