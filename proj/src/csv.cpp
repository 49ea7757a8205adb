#include "mgsim/csv.hpp"

#include <cstdio>
#include <fstream>

namespace mgsim {

namespace {

struct FileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // fixed newlines everywhere
    if (!out) throw FileError("cannot open output file: " + path);
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(const std::string& path, const SimTrace& trace) {
    std::ofstream out = open_out(path);
    out << kTraceHeader << "\n";
    for (int k = 0; k < trace.steps(); ++k) {
        for (std::size_t i = 0; i < trace.x[k].size(); ++i) {
            out << format_double(trace.t[k]) << ',' << i + 1;
            const VectorXd& x = trace.x[k][i];
            for (int s = 0; s < kDgStates; ++s) out << ',' << format_double(x(s));
            out << ',' << format_double(trace.r_norm[k][i]) << ','
                << format_double(trace.eta[k][i]) << ','
                << int(trace.detected[k][i]) << ',' << int(trace.mitigated[k][i])
                << "\n";
        }
    }
    if (!out) throw FileError("write failed: " + path);
}

void write_summary_csv(const std::string& path, const RunSummary& summary,
                       double stability_margin) {
    std::ofstream out = open_out(path);
    out << "dg,final_vod_dev_pu,final_omega_dev,peak_r_norm\n";
    for (std::size_t i = 0; i < summary.final_vod_dev_pu.size(); ++i)
        out << i + 1 << ',' << format_double(summary.final_vod_dev_pu[i]) << ','
            << format_double(summary.final_omega_dev[i]) << ','
            << format_double(summary.peak_r_norm[i]) << "\n";
    out << "detection_count," << summary.detection_count << ",,\n";
    out << "first_detection_t," << format_double(summary.first_detection_t)
        << ",,\n";
    out << "detection_latency," << format_double(summary.detection_latency)
        << ",,\n";
    out << "stability_margin," << format_double(stability_margin) << ",,\n";
    if (!out) throw FileError("write failed: " + path);
}

void write_eigen_csv(const std::string& path, const std::vector<EigenRow>& rows) {
    std::ofstream out = open_out(path);
    out << "re,im,scenario\n";
    for (const auto& r : rows)
        out << format_double(r.re) << ',' << format_double(r.im) << ',' << r.tag
            << "\n";
    if (!out) throw FileError("write failed: " + path);
}

void write_gains_csv(const std::string& path,
                     const std::vector<ObserverGain>& gains) {
    std::ofstream out = open_out(path);
    out << "dg,row,col,l_prime,d_diag\n";
    for (std::size_t g = 0; g < gains.size(); ++g)
        for (int i = 0; i < kDgStates; ++i)
            for (int j = 0; j < kDgOutputs; ++j)
                out << g + 1 << ',' << i + 1 << ',' << j + 1 << ','
                    << format_double(gains[g].l_prime(i, j)) << ','
                    << (j == 0 ? format_double(gains[g].d(i, i)) : "") << "\n";
    if (!out) throw FileError("write failed: " + path);
}

}  // namespace mgsim
