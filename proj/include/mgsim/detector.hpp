#pragma once

#include "mgsim/linalg.hpp"

#include <array>
#include <utility>
#include <vector>

// Residual evaluation, filtered-residual thresholding and detection logic,
// detectability margin, and mitigation by estimate substitution.

namespace mgsim {

/// First-order low-pass 1/(1 + s/lambda): BIBO, DC gain one.
struct FilterState {
    double lambda_f = 100.0;  // pole, 1/s
    double z = 0.0;           // internal state

    void validate() const {
        if (!(lambda_f > 0.0))
            throw DimensionError("FilterState: filter pole must be positive");
    }
};

struct ThresholdParams {
    double chi_bar = 0.0;   // bound on the system/observer mismatch term
    double zeta_bar = 0.0;  // bound on known disturbances
    double floor = 0.05;    // minimum threshold

    void validate() const {
        if (chi_bar < 0.0 || zeta_bar < 0.0 || floor < 0.0)
            throw DimensionError("ThresholdParams: bounds must be nonnegative");
    }
};

/// Componentwise difference and Euclidean norm.
std::pair<VectorXd, double> residual(const VectorXd& y, const VectorXd& yhat);

/// One RK4 step of zdot = -lambda (z - input); returns (state', output).
std::pair<FilterState, double> filter_step(const FilterState& fs, double input,
                                           double dt);

/// Threshold update: the filter applied to the constant bound chi+zeta,
/// clamped below by the floor.
std::pair<FilterState, double> threshold(const ThresholdParams& tp,
                                         const FilterState& fs, double dt);

/// Attack detected iff the residual strictly exceeds the threshold.
inline bool detect(double r_norm, double eta) { return r_norm > eta; }

/// Offline detectability margin: evaluates
///   | integral_{T_o}^{t} h_p(t - tau) (1 - e^{-b (tau - T_o)}) a_u(tau) dtau |
/// by trapezoid rule on a uniform grid starting at T_o and reports whether it
/// exceeds 2 eta(t) at any grid point. h_p is the impulse response of the
/// first-order filter with pole lambda_f.
bool detectability_margin(const std::vector<double>& a_u, double lambda_f,
                          double b_rate, const std::vector<double>& eta,
                          double dt);

/// Flagged measurement channels replaced by the estimate's outputs.
VectorXd mitigate(const VectorXd& y, const VectorXd& y_from_estimate,
                  const std::array<bool, 10>& flags);

}  // namespace mgsim
