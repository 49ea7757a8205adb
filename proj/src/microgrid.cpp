#include "mgsim/microgrid.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace mgsim {

void MicrogridConfig::validate() const {
    const int n = n_dg();
    if (n == 0) throw DimensionError("MicrogridConfig: no DGs");
    for (const auto& p : dgs) p.validate();
    if (adjacency.rows() != n || adjacency.cols() != n)
        throw DimensionError("MicrogridConfig: adjacency must be n_dg x n_dg");
    for (int i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0.0)
            throw DimensionError("MicrogridConfig: adjacency diagonal must be zero");
        for (int j = 0; j < n; ++j)
            if (adjacency(i, j) < 0.0)
                throw DimensionError("MicrogridConfig: adjacency weights must be nonnegative");
    }
    if (pinning.size() != n || pinning.minCoeff() < 0.0 || pinning.maxCoeff() <= 0.0)
        throw DimensionError("MicrogridConfig: need nonnegative pinning with a pinned leader");
    for (const auto& l : lines)
        if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n || l.from == l.to)
            throw DimensionError("MicrogridConfig: line endpoints out of range");
    for (const auto& ld : loads)
        if (ld.bus < 0 || ld.bus >= n)
            throw DimensionError("MicrogridConfig: load bus out of range");
    // Electrical graph must connect all DG buses.
    std::vector<int> comp(n);
    for (int i = 0; i < n; ++i) comp[i] = i;
    std::function<int(int)> find = [&](int a) {
        return comp[a] == a ? a : comp[a] = find(comp[a]);
    };
    for (const auto& l : lines) comp[find(l.from)] = find(l.to);
    for (int i = 1; i < n; ++i)
        if (find(i) != find(0))
            throw DimensionError("MicrogridConfig: line graph does not connect all DG buses");
    if (!(v_base > 0.0) || !(omega_ref > 0.0) || !(network_omega > 0.0))
        throw DimensionError("MicrogridConfig: bases and references must be positive");
}

MicrogridConfig MicrogridConfig::benchmark() {
    MicrogridConfig cfg;
    cfg.dgs = {DgParams::bench_dg12(), DgParams::bench_dg12(),
               DgParams::bench_dg34(), DgParams::bench_dg34()};
    cfg.adjacency = MatrixXd::Zero(4, 4);
    // Communication ring 1 -> 2 -> 3 -> 4 -> 1, leader pinned at DG 1.
    cfg.adjacency(1, 0) = 1.0;
    cfg.adjacency(2, 1) = 1.0;
    cfg.adjacency(3, 2) = 1.0;
    cfg.adjacency(0, 3) = 1.0;
    cfg.pinning = VectorXd::Zero(4);
    cfg.pinning(0) = 1.0;
    cfg.dgs[0].g_pin = 1.0;
    cfg.lines = {{0, 1, 0.23, 318e-6}, {1, 2, 0.35, 1847e-6}, {2, 3, 0.23, 318e-6}};
    cfg.loads = {{0, 30.0, 15.0}, {1, 20.0, 10.0}, {2, 25.0, 10.0}, {3, 25.0, 15.0}};
    return cfg;
}

std::vector<VectorXd> MicrogridConfig::flat_start() const {
    std::vector<VectorXd> x0(dgs.size(), VectorXd::Zero(kDgStates));
    for (std::size_t i = 0; i < dgs.size(); ++i) {
        x0[i](13) = dgs[i].omega_b;
        x0[i](14) = v_base;
    }
    return x0;
}

MatrixXcd bus_admittance(const MicrogridConfig& cfg) {
    const int n = cfg.n_dg();
    MatrixXcd y = MatrixXcd::Zero(n, n);
    for (const auto& l : cfg.lines) {
        Complexd z(l.r, cfg.network_omega * l.l);
        if (std::abs(z) == 0.0) throw NetworkError("bus_admittance: zero line impedance");
        Complexd adm = 1.0 / z;
        y(l.from, l.from) += adm;
        y(l.to, l.to) += adm;
        y(l.from, l.to) -= adm;
        y(l.to, l.from) -= adm;
    }
    for (const auto& ld : cfg.loads) {
        Complexd z(ld.r, ld.x);
        if (std::abs(z) == 0.0) throw NetworkError("bus_admittance: zero load impedance");
        y(ld.bus, ld.bus) += 1.0 / z;
    }
    return y;
}

MatrixXcd kron_reduce(const MatrixXcd& y, const std::vector<int>& keep) {
    const Eigen::Index n = y.rows();
    if (y.cols() != n) throw DimensionError("kron_reduce: matrix not square");
    std::vector<bool> kept(n, false);
    for (int k : keep) {
        if (k < 0 || k >= n) throw DimensionError("kron_reduce: keep index out of range");
        kept[k] = true;
    }
    std::vector<int> elim;
    for (Eigen::Index i = 0; i < n; ++i)
        if (!kept[i]) elim.push_back(static_cast<int>(i));
    if (elim.empty()) return y;

    const auto nk = static_cast<Eigen::Index>(keep.size());
    const auto ne = static_cast<Eigen::Index>(elim.size());
    MatrixXcd ykk(nk, nk), yke(nk, ne), yek(ne, nk), yee(ne, ne);
    for (Eigen::Index i = 0; i < nk; ++i)
        for (Eigen::Index j = 0; j < nk; ++j) ykk(i, j) = y(keep[i], keep[j]);
    for (Eigen::Index i = 0; i < nk; ++i)
        for (Eigen::Index j = 0; j < ne; ++j) yke(i, j) = y(keep[i], elim[j]);
    for (Eigen::Index i = 0; i < ne; ++i)
        for (Eigen::Index j = 0; j < nk; ++j) yek(i, j) = y(elim[i], keep[j]);
    for (Eigen::Index i = 0; i < ne; ++i)
        for (Eigen::Index j = 0; j < ne; ++j) yee(i, j) = y(elim[i], elim[j]);

    Eigen::FullPivLU<MatrixXcd> lu(yee);
    if (!lu.isInvertible())
        throw NetworkError("kron_reduce: eliminated block is singular");
    return ykk - yke * lu.solve(yek);
}

namespace {

struct NetworkSolver {
    explicit NetworkSolver(const MicrogridConfig& cfg) : y(bus_admittance(cfg)) {
        Eigen::FullPivLU<MatrixXcd> check(y);
        if (!check.isInvertible())
            throw NetworkError("network admittance is singular at the operating frequency");
        lu.compute(y);
    }

    // Local dq currents -> global injections -> bus voltages -> local frames.
    std::vector<Eigen::Vector2d> solve(const std::vector<Eigen::Vector2d>& i_o_local,
                                       const VectorXd& delta,
                                       VectorXcd* v_global_out = nullptr,
                                       VectorXcd* i_global_out = nullptr) const {
        const auto n = static_cast<Eigen::Index>(i_o_local.size());
        VectorXcd inj(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Complexd rot = std::polar(1.0, delta(i));
            inj(i) = rot * Complexd(i_o_local[i](0), i_o_local[i](1));
        }
        VectorXcd v = lu.solve(inj);
        std::vector<Eigen::Vector2d> out(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Complexd local = std::polar(1.0, -delta(i)) * v(i);
            out[i] = Eigen::Vector2d(local.real(), local.imag());
        }
        if (v_global_out) *v_global_out = v;
        if (i_global_out) *i_global_out = inj;
        return out;
    }

    MatrixXcd y;
    Eigen::PartialPivLU<MatrixXcd> lu;
};

}  // namespace

std::vector<Eigen::Vector2d> solve_bus_voltages(
    const std::vector<Eigen::Vector2d>& i_o_local, const VectorXd& delta,
    const MicrogridConfig& cfg) {
    if (static_cast<int>(i_o_local.size()) != cfg.n_dg() || delta.size() != cfg.n_dg())
        throw DimensionError("solve_bus_voltages: per-DG inputs expected");
    return NetworkSolver(cfg).solve(i_o_local, delta);
}

PowerBalance power_balance(const std::vector<Eigen::Vector2d>& i_o_local,
                           const VectorXd& delta, const MicrogridConfig& cfg) {
    NetworkSolver net(cfg);
    VectorXcd v, inj;
    net.solve(i_o_local, delta, &v, &inj);
    PowerBalance pb{};
    for (Eigen::Index i = 0; i < v.size(); ++i) pb.injected += v(i) * std::conj(inj(i));
    for (const auto& ld : cfg.loads) {
        Complexd z(ld.r, ld.x);
        pb.load += std::norm(v(ld.bus)) / std::conj(z);
    }
    for (const auto& l : cfg.lines) {
        Complexd z(l.r, cfg.network_omega * l.l);
        Complexd i_line = (v(l.from) - v(l.to)) / z;
        pb.line_loss += std::norm(i_line) * z;
    }
    return pb;
}

VectorXd assemble_u(int i, const std::vector<VectorXd>& states,
                    const MicrogridConfig& cfg, const Eigen::Vector2d& v_b) {
    const int n = cfg.n_dg();
    if (i < 0 || i >= n) throw DimensionError("assemble_u: DG index out of range");
    const DgParams& p = cfg.dgs[i];
    const double g = cfg.pinning(i);

    double sum_w = 0.0, sum_mpp = 0.0, sum_vod = 0.0, sum_nqq = 0.0;
    for (int j = 0; j < n; ++j) {
        double a = cfg.adjacency(i, j);
        if (a == 0.0) continue;
        const DgParams& pj = cfg.dgs[j];
        sum_w += a * dg_frequency(states[j], pj);
        sum_mpp += a * pj.m_p * states[j](0);
        sum_vod += a * states[j](8);
        sum_nqq += a * pj.n_q * states[j](1);
    }

    VectorXd u(kDgInputs);
    u(0) = dg_frequency(states[0], cfg.dgs[0]);  // w_com = w_1
    u(1) = v_b(0);
    u(2) = v_b(1);
    u(3) = p.c_freq * sum_w;
    u(4) = p.c_freq * g * cfg.omega_ref;
    u(5) = p.c_freq * sum_mpp;
    u(6) = p.c_volt * sum_vod;
    u(7) = p.c_volt * g * cfg.v_ref_volts();
    u(8) = p.c_volt * sum_nqq;
    return u;
}

double dg_frequency(const VectorXd& x, const DgParams& p) {
    return x(13) - p.m_p * x(0);
}

std::vector<VectorXd> plant_derivatives(const MicrogridConfig& cfg,
                                        const std::vector<VectorXd>& states) {
    const int n = cfg.n_dg();
    if (static_cast<int>(states.size()) != n)
        throw DimensionError("plant_derivatives: one state per DG expected");
    NetworkSolver net(cfg);
    std::vector<Eigen::Vector2d> io(n);
    VectorXd delta(n);
    for (int i = 0; i < n; ++i) {
        io[i] = Eigen::Vector2d(states[i](10), states[i](11));
        delta(i) = states[i](12);
    }
    std::vector<Eigen::Vector2d> vb = net.solve(io, delta);
    std::vector<VectorXd> out(n);
    for (int i = 0; i < n; ++i) {
        DgMatrices m = build_matrices(cfg.dgs[i], cfg.adjacency.row(i), cfg.pinning(i));
        out[i] = dg_derivative(states[i], assemble_u(i, states, cfg, vb[i]),
                               cfg.dgs[i], m);
    }
    return out;
}

std::vector<VectorXd> polish_equilibrium(const MicrogridConfig& cfg,
                                         const std::vector<VectorXd>& guess,
                                         int iterations) {
    const int n = cfg.n_dg();
    const int dim = n * kDgStates;
    auto pack = [&](const std::vector<VectorXd>& s) {
        VectorXd v(dim);
        for (int i = 0; i < n; ++i) v.segment(i * kDgStates, kDgStates) = s[i];
        return v;
    };
    auto unpack = [&](const VectorXd& v) {
        std::vector<VectorXd> s(n);
        for (int i = 0; i < n; ++i) s[i] = v.segment(i * kDgStates, kDgStates);
        return s;
    };
    auto field = [&](const VectorXd& v) { return pack(plant_derivatives(cfg, unpack(v))); };

    VectorXd x = pack(guess);
    for (int it = 0; it < iterations; ++it) {
        VectorXd f = field(x);
        if (f.norm() < 1e-9) break;
        MatrixXd jac(dim, dim);
        for (int j = 0; j < dim; ++j) {
            double h = 1e-6 * std::max(1.0, std::abs(x(j)));
            VectorXd xp = x, xm = x;
            xp(j) += h;
            xm(j) -= h;
            jac.col(j) = (field(xp) - field(xm)) / (2.0 * h);
        }
        VectorXd step = jac.fullPivLu().solve(f);
        x -= step;
        if (!x.allFinite())
            throw NetworkError("polish_equilibrium: Newton iteration diverged");
    }
    return unpack(x);
}

void AttackPlan::validate(int n_dg) const {
    for (int d : target_dgs)
        if (d < 0 || d >= n_dg) throw DimensionError("AttackPlan: target DG out of range");
    for (int c : u_channels)
        if (c < 0 || c >= kDgInputs)
            throw DimensionError("AttackPlan: input channel out of range");
    if (!channel_scales.empty() && channel_scales.size() != u_channels.size())
        throw DimensionError("AttackPlan: channel_scales must match u_channels");
    if (kind != Kind::none) schedule.validate();
    if (kind == Kind::uniform || kind == Kind::gaussian_sine) arbitrary.validate();
    if (kind == Kind::stealthy && !has_stealthy)
        throw DimensionError("AttackPlan: stealthy kind without a generator spec");
}

SimTrace run_scenario(const MicrogridConfig& cfg, const AttackPlan& plan,
                      const ObserverBundle& obs, const DetectorSettings& det,
                      const RunOptions& opt) {
    cfg.validate();
    const int n = cfg.n_dg();
    plan.validate(n);
    if (!(opt.dt > 0.0) || opt.duration < opt.dt)
        throw DimensionError("run_scenario: need dt > 0 and duration >= dt");
    if (obs.enabled && static_cast<int>(obs.gains.size()) != n)
        throw DimensionError("run_scenario: observer bundle needs one gain per DG");

    std::vector<DgMatrices> mats;
    mats.reserve(n);
    for (int i = 0; i < n; ++i)
        mats.push_back(build_matrices(cfg.dgs[i], cfg.adjacency.row(i), cfg.pinning(i)));
    const MatrixXd c = output_matrix();
    NetworkSolver net(cfg);

    const int nx = n * kDgStates;
    const int no = obs.enabled ? n * kDgStates : 0;
    const bool stealthy = plan.kind == AttackPlan::Kind::stealthy;
    const int nz = stealthy ? static_cast<int>(plan.stealthy.gen_dim()) : 0;

    VectorXd state = VectorXd::Zero(nx + no + nz);
    {
        const std::vector<VectorXd>& x0 = opt.x0.empty() ? cfg.flat_start() : opt.x0;
        if (static_cast<int>(x0.size()) != n)
            throw DimensionError("run_scenario: x0 needs one state per DG");
        for (int i = 0; i < n; ++i) state.segment(i * kDgStates, kDgStates) = x0[i];
    }
    if (obs.enabled) {
        for (int i = 0; i < n; ++i) {
            VectorXd xh = VectorXd::Zero(kDgStates);
            const VectorXd xi = state.segment(i * kDgStates, kDgStates);
            for (int k = 0; k < kDgOutputs; ++k) xh(kMeasuredIdx[k]) = xi(kMeasuredIdx[k]);
            if (!opt.xhat0_offset.empty()) xh += opt.xhat0_offset[i];
            state.segment(nx + i * kDgStates, kDgStates) = xh;
        }
    }

    const std::vector<double> scales = [&] {
        if (!plan.channel_scales.empty()) return plan.channel_scales;
        return std::vector<double>(plan.u_channels.size(), 1.0);
    }();
    std::vector<bool> is_target(n, false);
    for (int d : plan.target_dgs) is_target[d] = true;

    // Mitigation guards: a DG whose alarm fires quarantines its received
    // neighbor aggregates and substitutes reconstructions from its own
    // observer estimates, bias-trimmed at handover with the pre-alarm
    // received-minus-reconstructed offset (bumpless transfer; the offset is
    // taken one hold-interval back, i.e. from clean data whenever detection
    // latency stays below the hold). Released after the residual stays low
    // for the hold interval.
    struct Guard {
        bool active = false;
        int release = 0;
        int idle = 1 << 30;          // steps since last active
        Eigen::Vector4d offset = Eigen::Vector4d::Zero();
    };
    std::vector<Guard> data_guard(n);
    const int guard_hold = std::max(1, static_cast<int>(std::llround(0.05 / opt.dt)));
    // Rolling pre-alarm window of received-minus-reconstructed aggregates.
    std::vector<std::vector<Eigen::Vector4d>> agg_window(n);

    // Estimate-based reconstruction of the neighbor aggregates of DG i
    // (channels 3, 5, 6, 8), assuming a synchronized island.
    auto reconstruct = [&](int i, const VectorXd& xh, double w_com) {
        const DgParams& p = cfg.dgs[i];
        const double sum_a = cfg.adjacency.row(i).sum();
        return Eigen::Vector4d(p.c_freq * sum_a * w_com,
                               p.c_freq * sum_a * p.m_p * xh(0),
                               p.c_volt * sum_a * xh(8),
                               p.c_volt * sum_a * p.n_q * xh(1));
    };

    DetRng rng(plan.seed);
    // Raw per-step samples, [target position][channel], held over the step.
    std::vector<std::vector<double>> samples(plan.target_dgs.size(),
                                             std::vector<double>(plan.u_channels.size(), 0.0));

    auto corruption = [&](int dg, double t, const VectorXd& zeta) {
        VectorXd a = VectorXd::Zero(kDgInputs);
        if (plan.kind == AttackPlan::Kind::none || !is_target[dg]) return a;
        if (stealthy) {
            AttackOutput ao = attack_signal(plan.stealthy, plan.schedule, t, zeta);
            const auto u_rows = static_cast<Eigen::Index>(plan.stealthy.u_channels.size());
            for (std::size_t k = 0; k < plan.u_channels.size(); ++k) {
                Eigen::Index row = std::min<Eigen::Index>(static_cast<Eigen::Index>(k),
                                                          u_rows - 1);
                a(plan.u_channels[k]) += scales[k] * ao.a(row);
            }
            return a;
        }
        if (!plan.schedule.active_at(t)) return a;
        std::size_t pos = 0;
        while (plan.target_dgs[pos] != dg) ++pos;
        for (std::size_t k = 0; k < plan.u_channels.size(); ++k)
            a(plan.u_channels[k]) += scales[k] * samples[pos][k];
        return a;
    };

    auto deriv = [&](double t, const VectorXd& xfull) {
        VectorXd dx(xfull.size());
        std::vector<VectorXd> xs(n);
        std::vector<Eigen::Vector2d> io(n);
        VectorXd delta(n);
        for (int i = 0; i < n; ++i) {
            xs[i] = xfull.segment(i * kDgStates, kDgStates);
            io[i] = Eigen::Vector2d(xs[i](10), xs[i](11));
            delta(i) = xs[i](12);
        }
        std::vector<Eigen::Vector2d> vb = net.solve(io, delta);
        VectorXd zeta = nz ? xfull.tail(nz).eval() : VectorXd();
        for (int i = 0; i < n; ++i) {
            VectorXd u = assemble_u(i, xs, cfg, vb[i]);
            VectorXd a = corruption(i, t, zeta);
            if (obs.enabled && data_guard[i].active) {
                const VectorXd xh = xfull.segment(nx + i * kDgStates, kDgStates);
                Eigen::Vector4d rec =
                    reconstruct(i, xh, u(0)) + data_guard[i].offset;
                u(3) = rec(0);
                u(5) = rec(1);
                u(6) = rec(2);
                u(8) = rec(3);
                a(3) = a(5) = a(6) = a(8) = 0.0;  // received data is discarded
            }
            dx.segment(i * kDgStates, kDgStates) =
                dg_derivative(xs[i], u + a, cfg.dgs[i], mats[i]);
            if (obs.enabled) {
                VectorXd xh = xfull.segment(nx + i * kDgStates, kDgStates);
                VectorXd y = c * xs[i];
                dx.segment(nx + i * kDgStates, kDgStates) = observer_derivative(
                    obs.variant, xh, u, y, obs.gains[i], mats[i], cfg.dgs[i]);
            }
        }
        if (nz)
            dx.tail(nz) = attack_signal(plan.stealthy, plan.schedule, t, zeta).zeta_dot;
        return dx;
    };

    const auto steps = static_cast<int>(std::llround(opt.duration / opt.dt));
    SimTrace trace;
    trace.t.reserve(steps);

    std::vector<FilterState> rfilt(n), tfilt(n);
    for (int i = 0; i < n; ++i) {
        rfilt[i].lambda_f = det.lambda_f;
        tfilt[i].lambda_f = det.lambda_f;
    }
    ThresholdParams tp;
    tp.chi_bar = det.chi_bar;
    tp.zeta_bar = det.zeta_bar;
    tp.floor = det.floor;
    std::vector<bool> was_detected(n, false);

    if (plan.kind != AttackPlan::Kind::none) {
        for (std::size_t s = 0; s < plan.schedule.slots(); ++s) {
            if (plan.schedule.t_k[s] <= opt.duration)
                trace.events.push_back({plan.schedule.t_k[s], -1, "attack_on"});
            double off = plan.schedule.t_k[s] + plan.schedule.tau_k[s];
            if (off <= opt.duration) trace.events.push_back({off, -1, "attack_off"});
        }
    }

    std::optional<std::size_t> last_slot;
    for (int s = 0; s < steps; ++s) {
        const double t = s * opt.dt;

        if (stealthy) {
            auto slot = plan.schedule.slot_at(t);
            if (slot && slot != last_slot) {
                const auto& dz = plan.stealthy.delta_z;
                const auto idx = std::min(*slot, dz.size() - 1);
                state.tail(nz) = -dz[idx];
                last_slot = slot;
            }
        }
        if ((plan.kind == AttackPlan::Kind::uniform ||
             plan.kind == AttackPlan::Kind::gaussian_sine) &&
            plan.schedule.active_at(t)) {
            for (auto& per_dg : samples)
                for (auto& v : per_dg) v = arbitrary_attack(plan.arbitrary, t, rng);
        }

        if (obs.enabled && det.mitigation) {
            // Record the aggregates each DG receives this step (the rolling
            // pre-alarm window for the quarantine hold).
            std::vector<VectorXd> xs(n);
            std::vector<Eigen::Vector2d> io(n);
            VectorXd delta(n);
            for (int i = 0; i < n; ++i) {
                xs[i] = state.segment(i * kDgStates, kDgStates);
                io[i] = Eigen::Vector2d(xs[i](10), xs[i](11));
                delta(i) = xs[i](12);
            }
            std::vector<Eigen::Vector2d> vb = net.solve(io, delta);
            VectorXd zeta = nz ? state.tail(nz).eval() : VectorXd();
            for (int i = 0; i < n; ++i) {
                VectorXd u = assemble_u(i, xs, cfg, vb[i]) + corruption(i, t, zeta);
                VectorXd xh = state.segment(nx + i * kDgStates, kDgStates);
                Eigen::Vector4d rec = reconstruct(i, xh, u(0));
                agg_window[i].push_back(
                    Eigen::Vector4d(u(3), u(5), u(6), u(8)) - rec);
                if (static_cast<int>(agg_window[i].size()) > guard_hold + 1)
                    agg_window[i].erase(agg_window[i].begin());
            }
        }

        state = rk4_step(deriv, state, t, opt.dt);
        const double t_next = (s + 1) * opt.dt;
        if (state.cwiseAbs().maxCoeff() > 1e9)
            throw DivergenceError("run_scenario: state norm exceeded 1e9", t_next);

        trace.t.push_back(t_next);
        trace.x.emplace_back();
        trace.xhat.emplace_back();
        trace.r_norm.emplace_back();
        trace.eta.emplace_back();
        trace.detected.emplace_back();
        trace.mitigated.emplace_back();
        const bool armed = t_next >= det.arm_time;

        for (int i = 0; i < n; ++i) {
            VectorXd xi = state.segment(i * kDgStates, kDgStates);
            VectorXd xh = obs.enabled
                              ? state.segment(nx + i * kDgStates, kDgStates).eval()
                              : VectorXd::Zero(kDgStates).eval();
            auto [r, rn] = residual(c * xi, c * xh);
            double filtered;
            std::tie(rfilt[i], filtered) = filter_step(rfilt[i], rn, opt.dt);
            double eta;
            std::tie(tfilt[i], eta) = threshold(tp, tfilt[i], opt.dt);

            bool fired = obs.enabled && armed &&
                         detect(det.use_filtered_residual ? filtered : rn, eta);
            bool mitigated = false;
            if (obs.enabled && det.mitigation) {
                Guard& g = data_guard[i];
                if (fired) {
                    // Trim with the oldest buffered (pre-alarm) offset; on a
                    // quick re-fire keep the original clean trim.
                    if (!g.active && g.idle >= guard_hold && !agg_window[i].empty())
                        g.offset = agg_window[i].front();
                    g.active = true;
                    g.release = guard_hold;
                } else if (g.active && rn < 0.5 * eta) {
                    if (--g.release <= 0) g.active = false;
                }
                g.idle = g.active ? 0 : std::min(g.idle + 1, 1 << 30);
                mitigated = g.active;
            }
            if (fired && !was_detected[i])
                trace.events.push_back({t_next, i, "detected"});
            was_detected[i] = fired;

            trace.x.back().push_back(std::move(xi));
            trace.xhat.back().push_back(std::move(xh));
            trace.r_norm.back().push_back(rn);
            trace.eta.back().push_back(eta);
            trace.detected.back().push_back(fired ? 1 : 0);
            trace.mitigated.back().push_back(mitigated ? 1 : 0);
        }
    }
    std::sort(trace.events.begin(), trace.events.end(),
              [](const SimTrace::Event& a, const SimTrace::Event& b) {
                  return a.t != b.t ? a.t < b.t : a.dg < b.dg;
              });
    return trace;
}

RunSummary summarize(const SimTrace& trace, const MicrogridConfig& cfg,
                     const AttackPlan& plan, const DetectorSettings& det) {
    RunSummary s;
    const int n = cfg.n_dg();
    if (trace.steps() == 0) return s;
    const int last = trace.steps() - 1;
    for (int i = 0; i < n; ++i) {
        const VectorXd& x = trace.x[last][i];
        s.final_vod_dev_pu.push_back(std::abs(x(8) - cfg.v_ref_volts()) /
                                     cfg.v_ref_volts());
        s.final_omega_dev.push_back(
            std::abs(dg_frequency(x, cfg.dgs[i]) - cfg.omega_ref));
        double peak = 0.0;
        for (int k = 0; k < trace.steps(); ++k)
            if (trace.t[k] >= det.arm_time) peak = std::max(peak, trace.r_norm[k][i]);
        s.peak_r_norm.push_back(peak);
    }
    for (int k = 0; k < trace.steps(); ++k)
        for (int i = 0; i < n; ++i)
            if (trace.detected[k][i]) {
                ++s.detection_count;
                if (s.first_detection_t < 0.0) s.first_detection_t = trace.t[k];
            }
    if (s.first_detection_t >= 0.0 && plan.kind != AttackPlan::Kind::none &&
        !plan.schedule.t_k.empty())
        s.detection_latency = s.first_detection_t - plan.schedule.t_k.front();
    return s;
}

}  // namespace mgsim
