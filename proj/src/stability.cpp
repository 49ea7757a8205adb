#include "mgsim/stability.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace mgsim {

namespace {

struct Unpacked {
    VectorXd p, q, delta;  // delta has full length, delta(0) = 0
};

Unpacked unpack(const VectorXd& x, int n) {
    if (x.size() != reduced_dim(n))
        throw DimensionError("reduced state has wrong length");
    Unpacked u;
    u.p = x.segment(0, n);
    u.q = x.segment(n, n);
    u.delta = VectorXd::Zero(n);
    u.delta.tail(n - 1) = x.segment(2 * n, n - 1);
    return u;
}

VectorXcd connector_impedances(const OperatingPoint& op) {
    return Eigen::Map<const VectorXcd>(op.z_c.data(), op.n_dg());
}

}  // namespace

OperatingPoint make_operating_point(const MicrogridConfig& cfg,
                                    const VectorXd& p_opf, const VectorXd& q_opf,
                                    const VectorXd& v_opf) {
    const int n = cfg.n_dg();
    if (p_opf.size() != n || q_opf.size() != n || v_opf.size() != n)
        throw DimensionError("make_operating_point: per-DG setpoints expected");
    OperatingPoint op;
    op.p_opf = p_opf;
    op.q_opf = q_opf;
    op.v_opf = v_opf;
    op.n_q.resize(n);
    std::vector<int> keep(n);
    for (int i = 0; i < n; ++i) {
        keep[i] = i;
        op.n_q(i) = cfg.dgs[i].n_q;
        op.z_c.emplace_back(cfg.dgs[i].r_c, cfg.network_omega * cfg.dgs[i].l_c);
    }
    op.y_kron = kron_reduce(bus_admittance(cfg), keep);
    return op;
}

VectorXcd terminal_voltage(const VectorXd& x, const OperatingPoint& op) {
    const int n = op.n_dg();
    Unpacked u = unpack(x, n);
    VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = std::polar(op.v_mag(i, u.q), u.delta(i));
    return v;
}

VectorXd solve_algebraic(const VectorXd& x, const OperatingPoint& op) {
    const int n = op.n_dg();
    // Linear in z: (I + K) z = [Re; Im]{Y v_o}, K from the connector drop.
    MatrixXd g = op.y_kron.real(), b = op.y_kron.imag();
    VectorXd rc(n), xc(n);
    for (int i = 0; i < n; ++i) {
        rc(i) = op.z_c[i].real();
        xc(i) = op.z_c[i].imag();
    }
    MatrixXd lhs(2 * n, 2 * n);
    lhs.topLeftCorner(n, n) =
        MatrixXd::Identity(n, n) + g * rc.asDiagonal() - b * xc.asDiagonal();
    lhs.topRightCorner(n, n) = -g * xc.asDiagonal() - b * rc.asDiagonal();
    lhs.bottomLeftCorner(n, n) = b * rc.asDiagonal() + g * xc.asDiagonal();
    lhs.bottomRightCorner(n, n) =
        MatrixXd::Identity(n, n) + g * rc.asDiagonal() - b * xc.asDiagonal();

    VectorXcd yv = op.y_kron * terminal_voltage(x, op);
    VectorXd rhs(2 * n);
    rhs.head(n) = yv.real();
    rhs.tail(n) = yv.imag();
    Eigen::FullPivLU<MatrixXd> lu(lhs);
    if (!lu.isInvertible())
        throw NetworkError("solve_algebraic: algebraic block singular");
    return lu.solve(rhs);
}

VectorXd algebraic_residual(const VectorXd& x, const VectorXd& z,
                            const OperatingPoint& op) {
    const int n = op.n_dg();
    if (z.size() != 2 * n) throw DimensionError("algebraic_residual: z length");
    VectorXcd io(n);
    for (int i = 0; i < n; ++i) io(i) = Complexd(z(i), z(n + i));
    VectorXcd rhs =
        op.y_kron * (terminal_voltage(x, op) - io.cwiseProduct(connector_impedances(op)));
    VectorXd out(2 * n);
    out.head(n) = z.head(n) - rhs.real();
    out.tail(n) = z.tail(n) - rhs.imag();
    return out;
}

VectorXd reduced_derivative(const VectorXd& x, const VectorXd& z,
                            const OperatingPoint& op, const MicrogridConfig& cfg) {
    const int n = op.n_dg();
    Unpacked u = unpack(x, n);
    VectorXcd vo = terminal_voltage(x, op);
    VectorXd dx(reduced_dim(n));
    VectorXd omega(n);
    for (int i = 0; i < n; ++i) {
        const DgParams& p = cfg.dgs[i];
        Complexd s = vo(i) * std::conj(Complexd(z(i), z(n + i)));
        dx(i) = -p.omega_c * u.p(i) + p.omega_c * s.real();
        dx(n + i) = -p.omega_c * u.q(i) + p.omega_c * s.imag();
        omega(i) = p.omega_b - p.m_p * u.p(i) + p.m_p * op.p_opf(i);
    }
    // Angle rows in the rad/s convention: ddelta_i = w_i - w_com. An
    // extra w_b factor belongs to the per-unit frequency form only; with
    // frequencies already in rad/s it destabilizes the benchmark spectrum.
    for (int i = 1; i < n; ++i) dx(2 * n + i - 1) = omega(i) - omega(0);
    return dx;
}

VectorXd reduced_derivative(const VectorXd& x, const OperatingPoint& op,
                            const MicrogridConfig& cfg) {
    return reduced_derivative(x, solve_algebraic(x, op), op, cfg);
}

MatrixXd mp_matrix(const VectorXd& m_p) {
    const auto n = m_p.size();
    MatrixXd m = MatrixXd::Zero(n - 1, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        m(i, 0) = -m_p(0);
        m(i, i + 1) = m_p(i + 1);
    }
    return m;
}

JacobianBlocks jacobians(const VectorXd& x, const VectorXd& z,
                         const OperatingPoint& op, const MicrogridConfig& cfg) {
    const int n = op.n_dg();
    const int nx = reduced_dim(n);
    Unpacked u = unpack(x, n);
    JacobianBlocks jb;
    jb.df_dx = MatrixXd::Zero(nx, nx);
    jb.df_dz = MatrixXd::Zero(nx, 2 * n);
    jb.dg_dx = MatrixXd::Zero(2 * n, nx);
    jb.dg_dz = MatrixXd::Zero(2 * n, 2 * n);

    VectorXd mag(n), cd(n), sd(n);
    for (int i = 0; i < n; ++i) {
        mag(i) = op.v_mag(i, u.q);
        cd(i) = std::cos(u.delta(i));
        sd(i) = std::sin(u.delta(i));
    }

    // Power-filter rows: pdot_i = -wc p + wc Re{v_o conj(i_o)} and the Im row.
    for (int i = 0; i < n; ++i) {
        const double wc = cfg.dgs[i].omega_c;
        const double re_vi = cd(i) * z(i) + sd(i) * z(n + i);   // e^{jd} conj(io) parts
        const double im_vi = sd(i) * z(i) - cd(i) * z(n + i);
        jb.df_dx(i, i) = -wc;
        jb.df_dx(i, n + i) = -wc * op.n_q(i) * re_vi;           // dV/dq = -nQ
        jb.df_dx(n + i, i) = 0.0;
        jb.df_dx(n + i, n + i) = -wc - wc * op.n_q(i) * im_vi;
        if (i >= 1) {
            jb.df_dx(i, 2 * n + i - 1) = wc * mag(i) * (-sd(i) * z(i) + cd(i) * z(n + i));
            jb.df_dx(n + i, 2 * n + i - 1) =
                wc * mag(i) * (cd(i) * z(i) + sd(i) * z(n + i));
        }
        jb.df_dz(i, i) = wc * mag(i) * cd(i);
        jb.df_dz(i, n + i) = wc * mag(i) * sd(i);
        jb.df_dz(n + i, i) = wc * mag(i) * sd(i);
        jb.df_dz(n + i, n + i) = -wc * mag(i) * cd(i);
    }
    // Angle rows: ddelta_i = w_i - w_1 with dw/dp = -mP.
    VectorXd mp(n);
    for (int i = 0; i < n; ++i) mp(i) = cfg.dgs[i].m_p;
    MatrixXd mpm = mp_matrix(mp);
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < n; ++j) jb.df_dx(2 * n + i - 1, j) = -mpm(i - 1, j);

    // Algebraic rows: g = z - [Re; Im]{Y (v_o - i_o z_c)}.
    MatrixXd g = op.y_kron.real(), b = op.y_kron.imag();
    VectorXd rc(n), xc(n);
    for (int i = 0; i < n; ++i) {
        rc(i) = op.z_c[i].real();
        xc(i) = op.z_c[i].imag();
    }
    jb.dg_dz.topLeftCorner(n, n) =
        MatrixXd::Identity(n, n) + g * rc.asDiagonal() - b * xc.asDiagonal();
    jb.dg_dz.topRightCorner(n, n) = -g * xc.asDiagonal() - b * rc.asDiagonal();
    jb.dg_dz.bottomLeftCorner(n, n) = b * rc.asDiagonal() + g * xc.asDiagonal();
    jb.dg_dz.bottomRightCorner(n, n) = jb.dg_dz.topLeftCorner(n, n);

    // d v_o / dq_i = -nQ e^{j delta}, d v_o / d delta_i = j V e^{j delta}.
    for (int j = 0; j < n; ++j) {
        VectorXcd dv = VectorXcd::Zero(n);
        dv(j) = -op.n_q(j) * Complexd(cd(j), sd(j));
        VectorXcd col = op.y_kron * dv;
        jb.dg_dx.col(n + j).head(n) = -col.real();
        jb.dg_dx.col(n + j).tail(n) = -col.imag();
    }
    for (int j = 1; j < n; ++j) {
        VectorXcd dv = VectorXcd::Zero(n);
        dv(j) = Complexd(0.0, 1.0) * mag(j) * Complexd(cd(j), sd(j));
        VectorXcd col = op.y_kron * dv;
        jb.dg_dx.col(2 * n + j - 1).head(n) = -col.real();
        jb.dg_dx.col(2 * n + j - 1).tail(n) = -col.imag();
    }
    return jb;
}

MatrixXd state_matrix(const JacobianBlocks& blocks) {
    Eigen::FullPivLU<MatrixXd> lu(blocks.dg_dz);
    if (!lu.isInvertible())
        throw NetworkError("state_matrix: algebraic block singular");
    return blocks.df_dx - blocks.df_dz * lu.solve(blocks.dg_dx);
}

DecayCertificate certify_decay(const MatrixXd& a_hat, double eta_stab) {
    if (eta_stab < 0.0) throw DimensionError("certify_decay: eta must be nonnegative");
    DecayCertificate cert;
    cert.abscissa = eigenvalues(a_hat).real().maxCoeff();
    cert.certified = cert.abscissa < -eta_stab;
    if (cert.certified) {
        const auto n = a_hat.rows();
        MatrixXd shifted = a_hat + eta_stab * MatrixXd::Identity(n, n);
        // Solve and verify in balanced coordinates; the inequality transforms
        // congruently, so the certificate carries over exactly.
        VectorXd d = balance_scaling(shifted);
        MatrixXd sb = d.cwiseInverse().asDiagonal() * shifted * d.asDiagonal();
        MatrixXd mb = solve_sylvester(sb.transpose(), -sb,
                                      -MatrixXd::Identity(n, n));
        mb = 0.5 * (mb + mb.transpose());
        MatrixXd lhs = sb.transpose() * mb + mb * sb;
        cert.residual = (lhs + MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() /
                        std::max(1.0, lhs.cwiseAbs().maxCoeff());
        MatrixXd w = d.cwiseInverse().asDiagonal() * mb * d.cwiseInverse().asDiagonal();
        cert.witness = 0.5 * (w + w.transpose());
    }
    return cert;
}

DroopEquilibrium droop_equilibrium(const MicrogridConfig& cfg,
                                   const OperatingPoint& op,
                                   const DroopEquilibrium* warm) {
    const int n = cfg.n_dg();
    // Unknowns: q (n), delta_2..n (n-1), omega (1). p follows from the droop
    // relation p_i = p_opf_i + (w_b - w)/mP_i.
    VectorXd y = VectorXd::Zero(2 * n);
    y.head(n) = op.q_opf;
    y(2 * n - 1) = cfg.dgs[0].omega_b;
    if (warm && warm->x.size() == reduced_dim(n)) {
        y.head(n) = warm->x.segment(n, n);
        y.segment(n, n - 1) = warm->x.segment(2 * n, n - 1);
        y(2 * n - 1) = warm->omega;
    }

    auto residual = [&](const VectorXd& yv) {
        VectorXd x(reduced_dim(n));
        double omega = yv(2 * n - 1);
        for (int i = 0; i < n; ++i)
            x(i) = op.p_opf(i) + (cfg.dgs[i].omega_b - omega) / cfg.dgs[i].m_p;
        x.segment(n, n) = yv.head(n);
        x.segment(2 * n, n - 1) = yv.segment(n, n - 1);
        VectorXd z = solve_algebraic(x, op);
        VectorXd f = reduced_derivative(x, z, op, cfg);
        VectorXd r(2 * n);
        r.head(n) = f.segment(0, n);      // pdot = 0
        r.tail(n) = f.segment(n, n);      // qdot = 0
        // Angle rows vanish automatically at common omega.
        return r;
    };

    DroopEquilibrium eq;
    for (int it = 0; it < 80; ++it) {
        VectorXd r = residual(y);
        if (r.norm() < 1e-8) {
            eq.converged = true;
            break;
        }
        MatrixXd jac(2 * n, 2 * n);
        for (int j = 0; j < 2 * n; ++j) {
            double h = 1e-6 * std::max(1.0, std::abs(y(j)));
            VectorXd yp = y, ym = y;
            yp(j) += h;
            ym(j) -= h;
            jac.col(j) = (residual(yp) - residual(ym)) / (2.0 * h);
        }
        VectorXd step = jac.fullPivLu().solve(r);
        // Damped update: halve until the residual improves.
        double lambda = 1.0;
        double r0 = r.norm();
        VectorXd y_next = y - step;
        for (int back = 0; back < 12; ++back) {
            if (y_next.allFinite() && residual(y_next).norm() < r0) break;
            lambda *= 0.5;
            y_next = y - lambda * step;
        }
        if (!y_next.allFinite()) break;
        y = y_next;
    }
    double omega = y(2 * n - 1);
    VectorXd x(reduced_dim(n));
    for (int i = 0; i < n; ++i)
        x(i) = op.p_opf(i) + (cfg.dgs[i].omega_b - omega) / cfg.dgs[i].m_p;
    x.segment(n, n) = y.head(n);
    x.segment(2 * n, n - 1) = y.segment(n, n - 1);
    eq.x = x;
    eq.z = solve_algebraic(x, op);
    eq.omega = omega;
    if (eq.converged) eq.converged = residual(y).norm() < 1e-8;
    return eq;
}

OpfLimits OpfLimits::defaults(int n_dg) {
    OpfLimits lim;
    lim.alpha = VectorXd::Constant(n_dg, 5e-7);
    lim.beta = VectorXd::Constant(n_dg, 0.02);
    lim.gamma = VectorXd::Zero(n_dg);
    lim.p_min = VectorXd::Zero(n_dg);
    lim.p_max = VectorXd::Constant(n_dg, 10000.0);
    lim.q_min = VectorXd::Constant(n_dg, -5000.0);
    lim.q_max = VectorXd::Constant(n_dg, 5000.0);
    return lim;
}

OpfReport opf_feasibility(const MicrogridConfig& cfg, const OpfLimits& limits,
                          const VectorXd& p_opf, const VectorXd& q_opf,
                          const VectorXd& v_opf) {
    const int n = cfg.n_dg();
    OperatingPoint op = make_operating_point(cfg, p_opf, q_opf, v_opf);
    DroopEquilibrium eq = droop_equilibrium(cfg, op);
    if (!eq.converged) {
        // Continuation from the natural droop point toward the requested
        // setpoints; collapse-adjacent targets need the walk.
        VectorXd p0 = VectorXd::Zero(n), q0 = VectorXd::Zero(n);
        VectorXd v0 = VectorXd::Constant(n, cfg.v_ref_volts());
        DroopEquilibrium prev =
            droop_equilibrium(cfg, make_operating_point(cfg, p0, q0, v0));
        for (int step = 1; step <= 8 && prev.converged; ++step) {
            double w = static_cast<double>(step) / 8.0;
            OperatingPoint blend = make_operating_point(
                cfg, (1.0 - w) * p0 + w * p_opf, (1.0 - w) * q0 + w * q_opf,
                (1.0 - w) * v0 + w * v_opf);
            prev = droop_equilibrium(cfg, blend, &prev);
        }
        if (prev.converged) eq = prev;
    }
    if (!eq.converged)
        throw NetworkError("opf_feasibility: power-flow iteration did not converge");

    OpfReport rep;
    rep.p_realized = eq.x.head(n);
    rep.q_realized = eq.x.segment(n, n);
    rep.cost = 0.0;
    for (int i = 0; i < n; ++i)
        rep.cost += limits.alpha(i) * rep.p_realized(i) * rep.p_realized(i) +
                    limits.beta(i) * rep.p_realized(i) + limits.gamma(i);

    double total_s = 0.0;
    for (int i = 0; i < n; ++i) {
        Complexd set(p_opf(i), q_opf(i));
        Complexd got(rep.p_realized(i), rep.q_realized(i));
        rep.balance_mismatch = std::max(rep.balance_mismatch, std::abs(set - got));
        total_s += std::abs(got);
    }
    rep.balance_slack =
        limits.balance_tol_frac * std::max(total_s, 1.0) - rep.balance_mismatch;

    rep.p_box_slack = std::numeric_limits<double>::infinity();
    rep.q_box_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        rep.p_box_slack = std::min({rep.p_box_slack,
                                    rep.p_realized(i) - limits.p_min(i),
                                    limits.p_max(i) - rep.p_realized(i)});
        rep.q_box_slack = std::min({rep.q_box_slack,
                                    rep.q_realized(i) - limits.q_min(i),
                                    limits.q_max(i) - rep.q_realized(i)});
    }

    // Bus voltages and line flows at the equilibrium.
    VectorXcd vo = terminal_voltage(eq.x, op);
    VectorXcd io(n);
    for (int i = 0; i < n; ++i) io(i) = Complexd(eq.z(i), eq.z(n + i));
    VectorXcd vbus = vo - io.cwiseProduct(connector_impedances(op));
    rep.voltage_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double pu = std::abs(vbus(i)) / cfg.v_base;
        rep.voltage_slack =
            std::min({rep.voltage_slack, pu - limits.v_min_pu, limits.v_max_pu - pu});
    }
    rep.line_slack = std::numeric_limits<double>::infinity();
    for (const auto& l : cfg.lines) {
        Complexd zline(l.r, cfg.network_omega * l.l);
        Complexd i_line = (vbus(l.from) - vbus(l.to)) / zline;
        double flow = std::max(std::abs(vbus(l.from) * std::conj(i_line)),
                               std::abs(vbus(l.to) * std::conj(i_line)));
        rep.line_slack = std::min(rep.line_slack, limits.line_max_va - flow);
    }

    JacobianBlocks jb = jacobians(eq.x, eq.z, op, cfg);
    rep.stability_margin = -certify_decay(state_matrix(jb), 0.0).abscissa;

    rep.feasible = rep.balance_slack >= -1e-8 && rep.p_box_slack >= -1e-8 &&
                   rep.q_box_slack >= -1e-8 && rep.line_slack >= -1e-8 &&
                   rep.voltage_slack >= -1e-8;
    return rep;
}

double quadratic_box_min(double alpha, double beta, double lo, double hi) {
    if (!(lo <= hi)) throw DimensionError("quadratic_box_min: empty box");
    double x = alpha > 0.0 ? -beta / (2.0 * alpha) : (beta >= 0.0 ? lo : hi);
    return std::clamp(x, lo, hi);
}

DispatchResult dispatch(const MicrogridConfig& cfg, const OpfLimits& limits,
                        double eta_stab) {
    const int n = cfg.n_dg();

    auto penalty = [&](const VectorXd& p, const VectorXd& q, const VectorXd& v,
                       OpfReport* out) {
        OpfReport rep;
        try {
            rep = opf_feasibility(cfg, limits, p, q, v);
        } catch (const NetworkError&) {
            // No power-flow solution at this iterate.
            if (out) *out = OpfReport{};
            return std::numeric_limits<double>::infinity();
        }
        double pen = 0.0;
        auto hinge = [](double slack) { return slack < 0.0 ? slack * slack : 0.0; };
        pen += 1e2 * hinge(rep.balance_slack);
        pen += 1e2 * hinge(rep.p_box_slack);
        pen += 1e2 * hinge(rep.q_box_slack);
        pen += 1e2 * hinge(rep.line_slack);
        pen += 1e8 * hinge(rep.voltage_slack);
        double margin_gap = rep.stability_margin - eta_stab;
        pen += 1e8 * hinge(margin_gap);
        if (out) *out = rep;
        return rep.cost + pen;
    };

    // Warm start: droop-natural share of the present loading, nudged toward
    // the per-DG unconstrained cost minimizers.
    VectorXd p = VectorXd::Zero(n), q = VectorXd::Zero(n);
    VectorXd v = VectorXd::Constant(n, cfg.v_ref_volts());
    {
        OpfReport rep = opf_feasibility(cfg, limits, p, q, v);
        p = rep.p_realized;
        q = rep.q_realized;
        for (int i = 0; i < n; ++i) {
            double pref = quadratic_box_min(limits.alpha(i), limits.beta(i),
                                            limits.p_min(i), limits.p_max(i));
            p(i) = 0.5 * (p(i) + pref);
        }
    }

    DispatchResult best;
    best.p_opf = p;
    best.q_opf = q;
    best.v_opf = v;
    double best_val = penalty(p, q, v, &best.report);
    best.evaluations = 1;

    double step_p = 500.0, step_q = 250.0, step_v = 2.0;
    for (int sweep = 0; sweep < 12; ++sweep) {
        bool improved = false;
        for (int i = 0; i < n; ++i) {
            struct Cand {
                VectorXd* vec;
                int idx;
                double step;
                double lo, hi;
            };
            Cand cands[] = {
                {&p, i, step_p, limits.p_min(i), limits.p_max(i)},
                {&q, i, step_q, limits.q_min(i), limits.q_max(i)},
                {&v, i, step_v, 0.9 * cfg.v_ref_volts(), 1.1 * cfg.v_ref_volts()}};
            for (auto& c : cands) {
                for (double dir : {1.0, -1.0}) {
                    double old = (*c.vec)(c.idx);
                    double trial = std::clamp(old + dir * c.step, c.lo, c.hi);
                    if (trial == old) continue;
                    (*c.vec)(c.idx) = trial;
                    OpfReport rep;
                    double val = penalty(p, q, v, &rep);
                    ++best.evaluations;
                    if (val < best_val - 1e-9) {
                        best_val = val;
                        best.p_opf = p;
                        best.q_opf = q;
                        best.v_opf = v;
                        best.report = rep;
                        improved = true;
                    } else {
                        (*c.vec)(c.idx) = old;
                    }
                }
            }
        }
        if (!improved) {
            step_p *= 0.5;
            step_q *= 0.5;
            step_v *= 0.5;
        }
    }
    if (!best.report.feasible || best.report.stability_margin < eta_stab)
        throw DispatchError("dispatch: no feasible iterate found (best margin " +
                            std::to_string(best.report.stability_margin) + ")");
    return best;
}

std::vector<AttackSearchResult> worst_case_attack_search(
    const MicrogridConfig& cfg, const ObserverBundle& obs,
    const DetectorSettings& det, int budget, double horizon, double dt,
    uint64_t seed) {
    if (budget < 1) throw DimensionError("worst_case_attack_search: budget >= 1");
    DetRng rng(seed);
    std::vector<AttackSearchResult> results;

    const double b_grid[] = {0.1, 0.2, 0.4};
    const double scale_grid[] = {100.0, 300.0, 1000.0};
    int idx = 0;
    for (int k = 0; k < budget; ++k) {
        AttackSearchResult cand;
        if (idx < 9) {
            cand.b_rate = b_grid[idx / 3];
            cand.scale = scale_grid[idx % 3];
        } else {
            cand.b_rate = rng.uniform(0.05, 0.6);
            cand.scale = rng.uniform(50.0, 2000.0);
        }
        ++idx;
        // Three slots squeezed into [0.4, 0.8] at 50% duty.
        cand.schedule = Schedule{{0.4, 0.4 + 2.0 / 15.0, 0.4 + 4.0 / 15.0},
                                 {1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0}};

        AttackPlan plan;
        plan.kind = AttackPlan::Kind::stealthy;
        plan.target_dgs = {3};
        plan.u_channels = {3, 6};
        plan.channel_scales = {cand.scale, cand.scale};
        plan.schedule = cand.schedule;
        plan.stealthy = StealthyAttackSpec::exemplar_2state(cand.b_rate, 1.0);
        plan.has_stealthy = true;
        plan.seed = seed;

        RunOptions opt;
        opt.duration = horizon;
        opt.dt = dt;
        SimTrace tr = run_scenario(cfg, plan, obs, det, opt);

        cand.objective = 0.0;
        cand.evaded_detection = true;
        const double vref = cfg.v_ref_volts();
        for (int s = 0; s < tr.steps(); ++s) {
            const VectorXd& x = tr.x[s][3];
            cand.objective += dt * (std::abs(x(8) - vref) / vref +
                                    std::abs(dg_frequency(x, cfg.dgs[3]) -
                                             cfg.omega_ref));
            for (int i = 0; i < cfg.n_dg(); ++i)
                if (tr.detected[s][i]) cand.evaded_detection = false;
        }
        results.push_back(std::move(cand));
    }
    std::sort(results.begin(), results.end(),
              [](const AttackSearchResult& a, const AttackSearchResult& b) {
                  return a.objective > b.objective;
              });
    return results;
}

}  // namespace mgsim
