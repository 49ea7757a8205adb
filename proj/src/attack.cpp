#include "mgsim/attack.hpp"

#include <cmath>

namespace mgsim {

void Schedule::validate() const {
    if (t_k.size() != tau_k.size())
        throw DimensionError("Schedule: t_k and tau_k length mismatch");
    for (std::size_t k = 0; k < t_k.size(); ++k) {
        if (!(tau_k[k] > 0.0))
            throw DimensionError("Schedule: active durations must be positive");
        if (k + 1 < t_k.size()) {
            if (!(t_k[k + 1] > t_k[k]))
                throw DimensionError("Schedule: activation times must increase");
            if (tau_k[k] > t_k[k + 1] - t_k[k])
                throw DimensionError("Schedule: slot overlaps the next activation");
        }
    }
}

std::optional<std::size_t> Schedule::slot_at(double t) const {
    if (t_k.empty() || t < t_k.front()) return std::nullopt;
    for (std::size_t k = t_k.size(); k-- > 0;)
        if (t >= t_k[k]) return k;
    return std::nullopt;
}

bool Schedule::active_at(double t) const {
    auto k = slot_at(t);
    return k && t < t_k[*k] + tau_k[*k];
}

void StealthyAttackSpec::validate() const {
    if (u_channels.empty())
        throw SynthesisError("StealthyAttackSpec: no input channels");
    MatrixXd cl = closed_loop();
    for (Eigen::Index i = 0; i < v_a.dim(); ++i)
        if (!v_a.contains(cl * v_a.vector(i), 1e-8))
            throw SynthesisError("StealthyAttackSpec: friend does not keep V_a invariant");
    for (const auto& dz : delta_z) {
        if (!v_a.contains(dz, 1e-6))
            throw SynthesisError("StealthyAttackSpec: delta_z outside span(V_a)");
        double n = dz.norm();
        if (n < c1 || n > c2)
            throw SynthesisError("StealthyAttackSpec: ||delta_z|| outside [c1, c2]");
    }
}

StealthyAttackSpec StealthyAttackSpec::exemplar_2state(double b_rate,
                                                       double norm_scale) {
    StealthyAttackSpec s;
    s.a_gen.resize(2, 2);
    s.a_gen << 0.0, 1.0, -0.2, -0.1;
    s.b_a.resize(2, 2);
    s.b_a << 0.0, 0.0, 1.0, 0.0;  // input channel + inert output channel
    Eigen::Vector2d dir(-1.0, 2.0);
    dir.normalize();
    s.v_a = SubspaceBasis::from_span(dir);
    s.q_k.resize(2, 2);
    s.q_k << 0.8, -1.6, 0.4, -0.8;  // contraction -2 on V_a
    s.l_a = MatrixXd::Zero(2, 0);
    s.b_rate = b_rate;
    s.u_channels = {0};
    s.y_channels = {0};
    for (double n : {0.5, 0.25, 0.125}) s.delta_z.push_back(norm_scale * n * dir);
    s.c2 = std::max(s.c2, 0.5 * norm_scale + 1e-12);
    s.c1 = std::min(s.c1, 0.125 * norm_scale);
    s.validate();
    return s;
}

StealthyAttackSpec synthesize_stealthy(const MatrixXd& a, const MatrixXd& b,
                                       const MatrixXd& c,
                                       const std::vector<int>& u_channels,
                                       const std::vector<int>& y_channels,
                                       const std::vector<double>& dz_norms,
                                       double b_rate) {
    if (u_channels.empty())
        throw SynthesisError("synthesize_stealthy: empty input channel set");
    const Eigen::Index n = a.rows(), p = c.rows();
    const Eigen::Index ku = static_cast<Eigen::Index>(u_channels.size());
    const Eigen::Index ky = static_cast<Eigen::Index>(y_channels.size());

    // B_a = [B Gamma_u, 0], D' = [0, Gamma_y].
    MatrixXd b_a = MatrixXd::Zero(n, ku + ky);
    for (Eigen::Index j = 0; j < ku; ++j) {
        if (u_channels[j] < 0 || u_channels[j] >= b.cols())
            throw DimensionError("synthesize_stealthy: input channel out of range");
        b_a.col(j) = b.col(u_channels[j]);
    }
    MatrixXd d_prime = MatrixXd::Zero(p, ku + ky);
    for (Eigen::Index j = 0; j < ky; ++j) {
        if (y_channels[j] < 0 || y_channels[j] >= p)
            throw DimensionError("synthesize_stealthy: output channel out of range");
        d_prime(y_channels[j], ku + j) = 1.0;
    }

    SubspaceBasis v_w = weakly_unobservable(a, b_a, c, d_prime);
    SubspaceBasis h = unobservable_subspace(a, c);
    SubspaceBasis v_h = max_controlled_invariant(a, b_a, h);
    SubspaceBasis v_int = subspace_intersect(v_w, v_h);

    StealthyAttackSpec s;
    s.used_intersection = !v_int.empty();
    s.v_a = s.used_intersection ? v_int : v_w;
    if (s.v_a.empty())
        throw SynthesisError(
            "synthesize_stealthy: no stealthy direction under this channel set");

    s.a_gen = a;
    s.b_a = b_a;
    s.q_k = invariant_friend_shaped(a, b_a, s.v_a, -2.0);
    s.l_a = subspace_intersect(kernel_basis(d_prime), preimage(b_a, s.v_a)).matrix();
    s.b_rate = b_rate;
    s.u_channels = u_channels;
    s.y_channels = y_channels;
    VectorXd dir = s.v_a.vector(0);
    for (double norm : dz_norms) {
        s.delta_z.push_back(norm * dir);
        s.c2 = std::max(s.c2, norm + 1e-12);
        s.c1 = std::min(s.c1, std::max(norm - 1e-12, 0.0));
    }
    s.validate();
    return s;
}

AttackOutput attack_signal(const StealthyAttackSpec& spec, const Schedule& sched,
                           double t, const VectorXd& zeta) {
    AttackOutput out;
    out.a = VectorXd::Zero(spec.channel_dim());
    out.zeta_dot = VectorXd::Zero(spec.gen_dim());
    auto k = sched.slot_at(t);
    if (!k) return out;  // before the first activation
    double t_on = sched.t_k[*k];
    if (t < t_on + sched.tau_k[*k]) {
        double beta = 1.0 - std::exp(-spec.b_rate * (t - t_on));
        out.a = beta * (spec.q_k * zeta);  // l(t) = 0
        out.zeta_dot = spec.closed_loop() * zeta;
    }
    return out;
}

uint64_t DetRng::next_u64() {
    // splitmix64
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double DetRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double DetRng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double DetRng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

void ArbitraryAttack::validate() const {
    if (kind == Kind::uniform && !(lo < hi))
        throw DimensionError("ArbitraryAttack: uniform support needs lo < hi");
    if (sigma < 0.0) throw DimensionError("ArbitraryAttack: sigma must be nonnegative");
}

double arbitrary_attack(const ArbitraryAttack& kind, double t, DetRng& rng) {
    switch (kind.kind) {
        case ArbitraryAttack::Kind::uniform:
            return rng.uniform(kind.lo, kind.hi);
        case ArbitraryAttack::Kind::gaussian_sine:
            return kind.sigma * rng.gaussian() * kind.amplitude *
                   std::sin(2.0 * M_PI * kind.freq_hz * t);
    }
    return 0.0;
}

}  // namespace mgsim
