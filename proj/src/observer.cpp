#include "mgsim/observer.hpp"

#include <Eigen/QR>
#include <sstream>

namespace mgsim {

namespace {
constexpr int kDelta = 12;
}

ReducedPair reduce_delta(const MatrixXd& a, const MatrixXd& c) {
    ReducedPair r;
    r.a.resize(kDgStates - 1, kDgStates - 1);
    r.c.resize(kDgOutputs, kDgStates - 1);
    int ri = 0;
    for (int i = 0; i < kDgStates; ++i) {
        if (i == kDelta) continue;
        int rj = 0;
        for (int j = 0; j < kDgStates; ++j) {
            if (j == kDelta) continue;
            r.a(ri, rj) = a(i, j);
            ++rj;
        }
        ++ri;
    }
    int rj = 0;
    for (int j = 0; j < kDgStates; ++j) {
        if (j == kDelta) continue;
        r.c.col(rj++) = c.col(j);
    }
    return r;
}

VectorXcd ObserverGain::reduced_spectrum(const DgMatrices& m) const {
    ReducedPair r = reduce_delta(m.a + d, m.c);
    MatrixXd lr(kDgStates - 1, kDgOutputs);
    int ri = 0;
    for (int i = 0; i < kDgStates; ++i) {
        if (i == kDelta) continue;
        lr.row(ri++) = l_prime.row(i);
    }
    return eigenvalues(r.a - lr * r.c);
}

ObserverGain design_gain(const DgMatrices& m, const DgParams& p, double xbar11,
                         double xbar12,
                         const std::vector<std::complex<double>>& poles) {
    if (xbar11 < 0.0 || xbar12 < 0.0)
        throw DesignError("design_gain: state bounds must be nonnegative");
    ObserverGain g;
    g.xbar11 = xbar11;
    g.xbar12 = xbar12;
    g.poles = poles;
    g.d = MatrixXd::Zero(kDgStates, kDgStates);
    const double dii = p.omega_c * (xbar11 + xbar12);
    for (int i : {0, 1, 8, 9}) g.d(i, i) = dii;

    ReducedPair r = reduce_delta(m.a + g.d, m.c);
    MatrixXd l_red;
    try {
        l_red = place_poles(r.a, r.c, poles);
    } catch (const PlacementError& e) {
        // Name the modes that block assignment (PBH rank test).
        std::ostringstream msg;
        msg << "design_gain: placement failed (" << e.what() << ")";
        VectorXcd ev = eigenvalues(r.a);
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            Eigen::MatrixXcd pbh(r.a.rows() + r.c.rows(), r.a.cols());
            pbh.topRows(r.a.rows()) =
                ev(i) * Eigen::MatrixXcd::Identity(r.a.rows(), r.a.cols()) -
                r.a.cast<std::complex<double>>();
            pbh.bottomRows(r.c.rows()) = r.c.cast<std::complex<double>>();
            if (Eigen::ColPivHouseholderQR<Eigen::MatrixXcd>(pbh).rank() < r.a.rows())
                msg << "; unobservable mode at " << ev(i).real() << "+"
                    << ev(i).imag() << "i";
        }
        throw DesignError(msg.str());
    }

    g.l_prime = MatrixXd::Zero(kDgStates, kDgOutputs);
    int ri = 0;
    for (int i = 0; i < kDgStates; ++i) {
        if (i == kDelta) continue;
        g.l_prime.row(i) = l_red.row(ri++);
    }
    g.hurwitz = g.reduced_spectrum(m).real().maxCoeff() < 0.0;
    return g;
}

std::vector<std::complex<double>> default_observer_poles() {
    std::vector<std::complex<double>> poles{{-50.0, 10.0}, {-50.0, -10.0}};
    for (int k = 0; k < 12; ++k) poles.push_back({-60.0 - 10.0 * k, 0.0});
    return poles;
}

std::vector<std::complex<double>> recommended_observer_poles(
    const DgMatrices& m, const DgParams& p, double xbar11, double xbar12,
    double floor_re, double step) {
    MatrixXd d = MatrixXd::Zero(kDgStates, kDgStates);
    for (int i : {0, 1, 8, 9}) d(i, i) = p.omega_c * (xbar11 + xbar12);
    ReducedPair r = reduce_delta(m.a + d, m.c);
    VectorXcd ev = eigenvalues(r.a);

    std::vector<std::complex<double>> out;
    int shifted = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        std::complex<double> lambda = ev(i);
        bool pair = false;
        // Sorted by (re, im): a conjugate pair sits adjacent, -im first.
        if (i + 1 < ev.size() && std::abs(lambda.imag()) > 1e-9 &&
            std::abs(ev(i + 1).real() - lambda.real()) < 1e-9 &&
            std::abs(ev(i + 1).imag() + lambda.imag()) < 1e-9)
            pair = true;
        if (lambda.real() <= floor_re) {
            out.push_back(lambda);
            if (pair) out.push_back(ev(++i));
            continue;
        }
        double re = floor_re - step * shifted++;
        if (pair) {
            out.push_back({re, -std::abs(lambda.imag())});
            out.push_back({re, std::abs(lambda.imag())});
            ++i;
        } else {
            out.push_back({re, 0.0});
        }
    }
    return out;
}

MatrixXd nonlinear_gain_L2(const VectorXd& xhat, const DgParams& p) {
    if (xhat.size() != kDgStates) throw DimensionError("nonlinear_gain_L2: state size");
    MatrixXd l = MatrixXd::Zero(kDgStates, kDgOutputs);
    const double wc = p.omega_c, mp = p.m_p;
    // Output columns: 6 -> i_od, 7 -> i_oq, 8 -> w_n, 0 -> P.
    // Signs follow the cancellation identity
    //   xi'(f(x) - f(xhat)) - xi' L'' C xi = wc(xi1 xi9 x11 + xi1 xi10 x12
    //                                          - xi2 xi9 x12 + xi2 xi10 x11).
    l(0, 6) = wc * xhat(8);
    l(0, 7) = wc * xhat(9);
    l(1, 7) = -wc * xhat(8);
    l(1, 6) = wc * xhat(9);
    l(6, 8) = xhat(7);
    l(7, 8) = -xhat(6);
    l(8, 8) = xhat(9);
    l(9, 8) = -xhat(8);
    l(10, 8) = xhat(11);
    l(11, 8) = -xhat(10);
    l(6, 0) = -mp * xhat(7);
    l(7, 0) = mp * xhat(6);
    l(8, 0) = -mp * xhat(9);
    l(9, 0) = mp * xhat(8);
    l(10, 0) = -mp * xhat(11);
    l(11, 0) = mp * xhat(10);
    return l;
}

VectorXd observer_derivative(ObserverVariant variant, const VectorXd& xhat,
                             const VectorXd& u, const VectorXd& y,
                             const ObserverGain& gain, const DgMatrices& m,
                             const DgParams& p) {
    VectorXd innovation = y - m.c * xhat;
    if (variant == ObserverVariant::nonlinear) {
        MatrixXd l = gain.l_prime + nonlinear_gain_L2(xhat, p);
        return m.a * xhat + nonlinear_f(xhat, p) + m.b * u + l * innovation;
    }
    // Output injection: every state entering f is measured, so f can be
    // evaluated on the plant's own measurements.
    VectorXd xf = xhat;
    for (int i = 0; i < kDgOutputs; ++i) xf(kMeasuredIdx[i]) = y(i);
    return m.a * xhat + nonlinear_f(xf, p) + m.b * u + gain.l_prime * innovation;
}

ObserverState observer_step(ObserverVariant variant, const ObserverState& obs,
                            const VectorXd& u, const VectorXd& y,
                            const ObserverGain& gain, const DgMatrices& m,
                            const DgParams& p, double t, double dt) {
    auto f = [&](double, const VectorXd& xh) {
        return observer_derivative(variant, xh, u, y, gain, m, p);
    };
    ObserverState next;
    next.xhat = rk4_step(f, obs.xhat, t, dt);
    if (!next.xhat.allFinite())
        throw IntegrationError("observer_step: estimate diverged", t);
    next.residual = y - m.c * next.xhat;
    return next;
}

}  // namespace mgsim
