#pragma once

#include "mgsim/microgrid.hpp"
#include "mgsim/observer.hpp"

#include <string>

// Deterministic CSV export: fixed headers, %.17g floats, byte-identical
// across runs with the same inputs.

namespace mgsim {

inline constexpr const char* kTraceHeader =
    "t,dg,x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,x11,x12,x13,x14,x15,r_norm,eta,"
    "detected,mitigated";

/// One row per (step, dg).
void write_trace_csv(const std::string& path, const SimTrace& trace);

/// Peak deviations, detection latency and count, eigenvalue margin.
void write_summary_csv(const std::string& path, const RunSummary& summary,
                       double stability_margin);

/// Rows of (re, im, scenario tag).
struct EigenRow {
    double re, im;
    std::string tag;
};
void write_eigen_csv(const std::string& path, const std::vector<EigenRow>& rows);

/// Constant observer gains and the Young matrix diagonal, for audit.
void write_gains_csv(const std::string& path,
                     const std::vector<ObserverGain>& gains);

std::string format_double(double v);

}  // namespace mgsim
