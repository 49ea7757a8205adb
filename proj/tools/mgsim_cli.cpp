// mgsim: scenario runner and trace exporter for the microgrid
// attack-detection toolkit.
//
//   mgsim run <cfg>       simulate and write trace + summary CSVs
//   mgsim validate <cfg>  parse and check a scenario file
//   mgsim sweep <cfg> --param section.key --values v1,v2,...
//   mgsim eigen <cfg>     small-signal spectra for the four scenario tags
//
// Exit codes: 0 ok, 1 scenario error, 2 usage error.

#include <CLI11.hpp>

#include <mgsim/config.hpp>
#include <mgsim/csv.hpp>
#include <mgsim/stability.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace mgsim;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("MGSIM_OUT_DIR")) return env;
    return ".";
}

// Peak of the filtered residual norm after the arm time, across DGs.
double calibration_peak(const SimTrace& trace, const DetectorSettings& det,
                        double dt) {
    double peak = 0.0;
    if (trace.steps() == 0) return peak;
    const std::size_t n = trace.x[0].size();
    std::vector<FilterState> f(n);
    for (auto& fs : f) fs.lambda_f = det.lambda_f;
    for (int k = 0; k < trace.steps(); ++k)
        for (std::size_t i = 0; i < n; ++i) {
            double out;
            std::tie(f[i], out) = filter_step(f[i], trace.r_norm[k][i], dt);
            if (trace.t[k] >= det.arm_time) peak = std::max(peak, out);
        }
    return peak;
}

DetectorSettings resolve_detector(const ScenarioConfig& cfg,
                                  const ObserverBundle& bundle) {
    DetectorSettings det = cfg.detector.settings;
    if (!cfg.detector.chi_auto || !bundle.enabled) return det;
    ScenarioConfig clean = cfg;
    clean.attack = AttackPlan{};
    DetectorSettings calib = det;
    calib.mitigation = false;
    RunOptions opt;
    opt.duration = cfg.sim.duration;
    opt.dt = cfg.sim.dt;
    SimTrace trace = run_scenario(clean.microgrid, clean.attack, bundle, calib, opt);
    det.chi_bar = 1.2 * calibration_peak(trace, det, cfg.sim.dt);
    return det;
}

double margin_at(const MicrogridConfig& cfg, const std::vector<VectorXd>& states) {
    const int n = cfg.n_dg();
    VectorXd p(n), q(n), v(n);
    for (int i = 0; i < n; ++i) {
        p(i) = states[i](0);
        q(i) = states[i](1);
        v(i) = std::hypot(states[i](8), states[i](9));
    }
    OperatingPoint op = make_operating_point(cfg, p, q, v);
    VectorXd x(reduced_dim(n));
    x.head(n) = p;
    x.segment(n, n) = q;
    for (int i = 1; i < n; ++i)
        x(2 * n + i - 1) = states[i](12) - states[0](12);
    VectorXd z = solve_algebraic(x, op);
    return -certify_decay(state_matrix(jacobians(x, z, op, cfg)), 0.0).abscissa;
}

struct RunOutputs {
    SimTrace trace;
    RunSummary summary;
    double margin = 0.0;
};

RunOutputs execute(const ScenarioConfig& cfg) {
    ObserverBundle bundle = make_observer_bundle(cfg);
    DetectorSettings det = resolve_detector(cfg, bundle);
    RunOptions opt;
    opt.duration = cfg.sim.duration;
    opt.dt = cfg.sim.dt;
    RunOutputs out;
    out.trace = run_scenario(cfg.microgrid, cfg.attack, bundle, det, opt);
    out.summary = summarize(out.trace, cfg.microgrid, cfg.attack, det);
    try {
        out.margin = margin_at(cfg.microgrid, out.trace.x.back());
    } catch (const std::exception&) {
        out.margin = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

void write_outputs(const ScenarioConfig& cfg, const RunOutputs& out,
                   const std::string& dir, const std::string& suffix,
                   bool gains) {
    fs::create_directories(dir);
    std::string base = (fs::path(dir) / (cfg.sim.output + suffix)).string();
    write_trace_csv(base + "_trace.csv", out.trace);
    write_summary_csv(base + "_summary.csv", out.summary, out.margin);
    if (gains) write_gains_csv(base + "_gains.csv", make_observer_bundle(cfg).gains);
    std::cout << base << "_trace.csv\n" << base << "_summary.csv\n";
}

// Mean reduced state over [t0, t1], linearized against the given setpoints.
std::vector<EigenRow> window_spectrum(const MicrogridConfig& cfg,
                                      const SimTrace& trace,
                                      const OperatingPoint& op, double t0,
                                      double t1, const std::string& tag) {
    const int n = cfg.n_dg();
    VectorXd x = VectorXd::Zero(reduced_dim(n));
    int count = 0;
    for (int k = 0; k < trace.steps(); ++k) {
        if (trace.t[k] < t0 || trace.t[k] > t1) continue;
        for (int i = 0; i < n; ++i) {
            x(i) += trace.x[k][i](0);
            x(n + i) += trace.x[k][i](1);
            if (i >= 1)
                x(2 * n + i - 1) += trace.x[k][i](12) - trace.x[k][0](12);
        }
        ++count;
    }
    if (count == 0) throw ConfigError("eigen: empty averaging window");
    x /= count;
    VectorXd z = solve_algebraic(x, op);
    VectorXcd ev = eigenvalues(state_matrix(jacobians(x, z, op, cfg)));
    std::vector<EigenRow> rows;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        rows.push_back({ev(i).real(), ev(i).imag(), tag});
    return rows;
}

int cmd_run(const std::string& cfg_path, const std::string& out_flag, bool gains) {
    ScenarioConfig cfg = parse_config(read_file(cfg_path));
    RunOutputs out = execute(cfg);
    write_outputs(cfg, out, output_dir(out_flag), "", gains);
    return 0;
}

int cmd_validate(const std::string& cfg_path) {
    ScenarioConfig cfg = parse_config(read_file(cfg_path));
    std::cout << "ok: " << cfg.microgrid.n_dg() << " DGs, duration "
              << cfg.sim.duration << " s, dt " << cfg.sim.dt << " s\n";
    return 0;
}

int cmd_sweep(const std::string& cfg_path, const std::string& param,
              const std::string& values_csv, const std::string& out_flag,
              int jobs) {
    std::string text = read_file(cfg_path);
    std::vector<std::string> values;
    std::istringstream is(values_csv);
    std::string tok;
    while (std::getline(is, tok, ',')) values.push_back(tok);
    if (values.empty()) throw ConfigError("sweep: no values given");

    std::string tag = param;
    for (char& c : tag)
        if (c == '.') c = '-';

    std::vector<std::exception_ptr> errors(values.size());
    auto work = [&](std::size_t i) {
        try {
            ScenarioConfig cfg = parse_config(text);
            apply_override(cfg, param, values[i]);
            RunOutputs out = execute(cfg);
            write_outputs(cfg, out, output_dir(out_flag), "_" + tag + "_" + values[i],
                          false);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (jobs <= 1) {
        for (std::size_t i = 0; i < values.size(); ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < values.size(); i += jobs) work(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return 0;
}

int cmd_eigen(const std::string& cfg_path, const std::string& out_flag) {
    ScenarioConfig cfg = parse_config(read_file(cfg_path));
    std::vector<EigenRow> rows;

    // Setpoints from the attack-free settled point.
    ScenarioConfig clean = cfg;
    clean.attack = AttackPlan{};
    RunOutputs free_run = execute(clean);
    const int n = cfg.microgrid.n_dg();
    VectorXd p(n), q(n), v(n);
    auto xf = polish_equilibrium(cfg.microgrid, free_run.trace.x.back());
    for (int i = 0; i < n; ++i) {
        p(i) = xf[i](0);
        q(i) = xf[i](1);
        v(i) = std::hypot(xf[i](8), xf[i](9));
    }
    OperatingPoint op = make_operating_point(cfg.microgrid, p, q, v);

    Schedule sched = cfg.attack.schedule;
    if (sched.t_k.empty()) sched = Schedule{{0.4, 8.0 / 15.0, 2.0 / 3.0},
                                            {1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0}};
    const double w0 = sched.t_k.front();
    const double w1 = sched.t_k.back() + sched.tau_k.back();
    rows = window_spectrum(cfg.microgrid, free_run.trace, op, w0, w1, "attack_free");

    auto attacked = [&](const Schedule& s, bool mitigation, const std::string& tag) {
        ScenarioConfig variant = cfg;
        variant.attack.kind = AttackPlan::Kind::stealthy;
        if (variant.attack.target_dgs.empty()) variant.attack.target_dgs = {n - 1};
        if (variant.attack.channel_scales.empty())
            variant.attack.channel_scales =
                default_channel_scales(variant.microgrid, variant.attack.u_channels);
        variant.attack.schedule = s;
        variant.attack.stealthy = StealthyAttackSpec::exemplar_2state(
            cfg.attack.stealthy.b_rate > 0 ? cfg.attack.stealthy.b_rate : 0.2,
            cfg.attack_dz_scale);
        variant.attack.has_stealthy = true;
        variant.detector.settings.mitigation = mitigation;
        RunOutputs out = execute(variant);
        auto r = window_spectrum(variant.microgrid, out.trace, op, w0, w1, tag);
        rows.insert(rows.end(), r.begin(), r.end());
    };
    // Stealthy-only: one continuous slot over the window.
    attacked(Schedule{{w0}, {w1 - w0}}, false, "stealthy");
    attacked(sched, false, "stealthy_intermittent");
    attacked(sched, true, "mitigated");

    fs::create_directories(output_dir(out_flag));
    std::string path =
        (fs::path(output_dir(out_flag)) / (cfg.sim.output + "_eigen.csv")).string();
    write_eigen_csv(path, rows);
    std::cout << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"microgrid attack-detection scenario toolkit"};
    app.require_subcommand(1);

    std::string cfg_path, out_dir, param, values;
    bool gains = false;
    int jobs = 1;

    CLI::App* run = app.add_subcommand("run", "simulate a scenario");
    run->add_option("cfg", cfg_path, "scenario config file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--gains", gains, "also export observer gains");

    CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("cfg", cfg_path, "scenario config file")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("cfg", cfg_path, "scenario config file")->required();
    sweep->add_option("--param", param, "override path, e.g. attack.b_rate")
        ->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--jobs", jobs, "parallel scenario workers");

    CLI::App* eigen = app.add_subcommand("eigen", "scenario spectra CSV");
    eigen->add_option("cfg", cfg_path, "scenario config file")->required();
    eigen->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(cfg_path, out_dir, gains);
        if (validate->parsed()) return cmd_validate(cfg_path);
        if (sweep->parsed()) return cmd_sweep(cfg_path, param, values, out_dir, jobs);
        if (eigen->parsed()) return cmd_eigen(cfg_path, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
