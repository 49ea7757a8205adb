#include "mgsim/detector.hpp"

#include <cmath>

namespace mgsim {

std::pair<VectorXd, double> residual(const VectorXd& y, const VectorXd& yhat) {
    if (y.size() != yhat.size()) throw DimensionError("residual: length mismatch");
    VectorXd r = y - yhat;
    return {r, r.norm()};
}

std::pair<FilterState, double> filter_step(const FilterState& fs, double input,
                                           double dt) {
    fs.validate();
    if (!(dt > 0.0)) throw DimensionError("filter_step: dt must be positive");
    auto f = [&](double, const VectorXd& z) {
        return VectorXd::Constant(1, fs.lambda_f * (input - z(0))).eval();
    };
    FilterState next = fs;
    next.z = rk4_step(f, VectorXd::Constant(1, fs.z), 0.0, dt)(0);
    return {next, next.z};
}

std::pair<FilterState, double> threshold(const ThresholdParams& tp,
                                         const FilterState& fs, double dt) {
    tp.validate();
    auto [next, out] = filter_step(fs, tp.chi_bar + tp.zeta_bar, dt);
    return {next, std::max(out, tp.floor)};
}

bool detectability_margin(const std::vector<double>& a_u, double lambda_f,
                          double b_rate, const std::vector<double>& eta,
                          double dt) {
    if (a_u.empty() || a_u.size() != eta.size())
        throw DimensionError("detectability_margin: empty or mismatched sample window");
    if (!(dt > 0.0) || !(lambda_f > 0.0))
        throw DimensionError("detectability_margin: dt and lambda_f must be positive");
    const std::size_t n = a_u.size();
    // integrand(tau; t) = h_p(t - tau) beta(tau) a_u(tau), grid tau_i = i dt.
    for (std::size_t it = 1; it < n; ++it) {
        double t = static_cast<double>(it) * dt;
        double acc = 0.0;
        for (std::size_t i = 0; i < it; ++i) {
            auto point = [&](std::size_t j) {
                double tau = static_cast<double>(j) * dt;
                double hp = lambda_f * std::exp(-lambda_f * (t - tau));
                double beta = 1.0 - std::exp(-b_rate * tau);
                return hp * beta * a_u[j];
            };
            acc += 0.5 * dt * (point(i) + point(i + 1));
        }
        if (std::abs(acc) > 2.0 * eta[it]) return true;
    }
    return false;
}

VectorXd mitigate(const VectorXd& y, const VectorXd& y_from_estimate,
                  const std::array<bool, 10>& flags) {
    if (y.size() != 10 || y_from_estimate.size() != 10)
        throw DimensionError("mitigate: expected 10 measurement channels");
    VectorXd out = y;
    for (int i = 0; i < 10; ++i)
        if (flags[i]) out(i) = y_from_estimate(i);
    return out;
}

}  // namespace mgsim
