#pragma once

#include "mgsim/dg_model.hpp"

#include <complex>
#include <vector>

// Nonlinear Luenberger-like observer with constructive gain: constant part
// from eigenvalue assignment on the delta-reduced pair, state-dependent part
// cancelling the bilinear error terms, Young-bound matrix D.

namespace mgsim {

struct DesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ObserverVariant { nonlinear, output_injection };

struct ObserverGain {
    MatrixXd l_prime;   // 15x10 constant gain, delta row identically zero
    MatrixXd d;         // 15x15 diagonal Young-bound matrix
    double xbar11 = 0.0, xbar12 = 0.0;  // output-current magnitude bounds
    std::vector<std::complex<double>> poles;  // requested reduced spectrum
    bool hurwitz = false;  // reduced (A + D - L'C) Hurwitz

    VectorXcd reduced_spectrum(const DgMatrices& m) const;
};

/// Matrices with state 12 (delta) removed: the mode is unmeasured and
/// input-decoupled, so it is excluded from correction and run open-loop.
struct ReducedPair {
    MatrixXd a;  // 14x14
    MatrixXd c;  // 10x14
};
ReducedPair reduce_delta(const MatrixXd& a, const MatrixXd& c);

/// Places the reduced spectrum of (A + D - L'C). A pole set with
/// nonnegative real parts is accepted but leaves gain.hurwitz false.
/// Throws DesignError when the reduced pair is not detectable for the
/// requested spectrum, naming the offending modes.
ObserverGain design_gain(const DgMatrices& m, const DgParams& p, double xbar11,
                         double xbar12,
                         const std::vector<std::complex<double>>& poles);

/// Default 14-pole observer spectrum: -50 +- 10i and -60..-170.
std::vector<std::complex<double>> default_observer_poles();

/// Pole set that keeps open-loop modes already faster than `floor_re` and
/// shifts the slow ones to floor_re, floor_re - step, ... Keeping the fast
/// modes avoids the large gains (and violent error transients) of a full
/// spectrum drag.
std::vector<std::complex<double>> recommended_observer_poles(
    const DgMatrices& m, const DgParams& p, double xbar11, double xbar12,
    double floor_re = -120.0, double step = 10.0);

/// State-dependent gain L''(xhat): the bilinear-cancellation pattern
/// (16 fixed entries, everything else identically zero).
MatrixXd nonlinear_gain_L2(const VectorXd& xhat, const DgParams& p);

/// Observer vector field. The nonlinear variant uses f(xhat) and
/// L' + L''(xhat); output injection evaluates f on the measured components
/// of y (all states entering f are measured) with constant gain.
VectorXd observer_derivative(ObserverVariant variant, const VectorXd& xhat,
                             const VectorXd& u, const VectorXd& y,
                             const ObserverGain& gain, const DgMatrices& m,
                             const DgParams& p);

struct ObserverState {
    VectorXd xhat;      // 15
    VectorXd residual;  // 10
};

/// One RK4 step of the observer with u and y held over the step.
ObserverState observer_step(ObserverVariant variant, const ObserverState& obs,
                            const VectorXd& u, const VectorXd& y,
                            const ObserverGain& gain, const DgMatrices& m,
                            const DgParams& p, double t, double dt);

}  // namespace mgsim
