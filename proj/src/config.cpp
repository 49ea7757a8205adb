#include "mgsim/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace mgsim {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double to_double(const std::string& s, const std::string& path) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(path + ": expected a number, got '" + s + "'");
    }
}

int to_int(const std::string& s, const std::string& path) {
    double v = to_double(s, path);
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError(path + ": expected an integer, got '" + s + "'");
    return i;
}

bool to_bool(const std::string& s, const std::string& path) {
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    throw ConfigError(path + ": expected on/off, got '" + s + "'");
}

VectorXd to_vector(const std::string& s, const std::string& path) {
    auto toks = split_ws(s);
    VectorXd v(static_cast<Eigen::Index>(toks.size()));
    for (std::size_t i = 0; i < toks.size(); ++i) v(i) = to_double(toks[i], path);
    return v;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(v(i));
    }
    return out;
}

// Handlers keyed by "section.key"; `dg` sections are matched by prefix.
using Handler = std::function<void(ScenarioConfig&, const std::string&,
                                   const std::string&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h = [] {
        std::map<std::string, Handler> m;
        auto num = [](auto member) {
            return [member](ScenarioConfig& c, const std::string& v,
                            const std::string& path) { member(c) = to_double(v, path); };
        };
        m["sim.duration"] = num([](ScenarioConfig& c) -> double& { return c.sim.duration; });
        m["sim.dt"] = num([](ScenarioConfig& c) -> double& { return c.sim.dt; });
        m["sim.seed"] = [](ScenarioConfig& c, const std::string& v, const std::string& p) {
            c.sim.seed = static_cast<uint64_t>(to_double(v, p));
        };
        m["sim.output"] = [](ScenarioConfig& c, const std::string& v, const std::string&) {
            c.sim.output = v;
        };

        m["microgrid.v_ref_pu"] =
            num([](ScenarioConfig& c) -> double& { return c.microgrid.v_ref_pu; });
        m["microgrid.v_base"] =
            num([](ScenarioConfig& c) -> double& { return c.microgrid.v_base; });
        m["microgrid.omega_ref"] =
            num([](ScenarioConfig& c) -> double& { return c.microgrid.omega_ref; });
        m["microgrid.network_omega"] =
            num([](ScenarioConfig& c) -> double& { return c.microgrid.network_omega; });
        m["microgrid.n_dg"] = [](ScenarioConfig& c, const std::string& v,
                                 const std::string& p) {
            int n = to_int(v, p);
            if (n < 1) throw ConfigError(p + ": need at least one DG");
            c.microgrid.dgs.assign(n, DgParams::bench_dg12());
            c.microgrid.adjacency = MatrixXd::Zero(n, n);
            c.microgrid.pinning = VectorXd::Zero(n);
        };
        m["microgrid.adjacency"] = [](ScenarioConfig& c, const std::string& v,
                                      const std::string& p) {
            int n = c.microgrid.n_dg();
            if (n == 0) throw ConfigError(p + ": set n_dg before adjacency");
            std::vector<std::string> rows;
            std::string row;
            std::istringstream is(v);
            while (std::getline(is, row, ';')) rows.push_back(row);
            if (static_cast<int>(rows.size()) != n)
                throw ConfigError(p + ": expected " + std::to_string(n) + " rows");
            for (int i = 0; i < n; ++i) {
                VectorXd r = to_vector(rows[i], p);
                if (r.size() != n) throw ConfigError(p + ": row length mismatch");
                c.microgrid.adjacency.row(i) = r;
            }
        };
        m["microgrid.pinning"] = [](ScenarioConfig& c, const std::string& v,
                                    const std::string& p) {
            VectorXd r = to_vector(v, p);
            if (r.size() != c.microgrid.n_dg())
                throw ConfigError(p + ": one pinning gain per DG");
            c.microgrid.pinning = r;
        };

        m["lines.line"] = [](ScenarioConfig& c, const std::string& v,
                             const std::string& p) {
            auto toks = split_ws(v);
            if (toks.size() != 4)
                throw ConfigError(p + ": expected 'from to R L'");
            Line l;
            l.from = to_int(toks[0], p);
            l.to = to_int(toks[1], p);
            l.r = to_double(toks[2], p);
            l.l = to_double(toks[3], p);
            c.microgrid.lines.push_back(l);
        };
        m["loads.load"] = [](ScenarioConfig& c, const std::string& v,
                             const std::string& p) {
            auto toks = split_ws(v);
            if (toks.size() != 3) throw ConfigError(p + ": expected 'bus R X'");
            Load l;
            l.bus = to_int(toks[0], p);
            l.r = to_double(toks[1], p);
            l.x = to_double(toks[2], p);
            c.microgrid.loads.push_back(l);
        };

        m["attack.kind"] = [](ScenarioConfig& c, const std::string& v,
                              const std::string& p) {
            if (v == "none") c.attack.kind = AttackPlan::Kind::none;
            else if (v == "uniform") c.attack.kind = AttackPlan::Kind::uniform;
            else if (v == "gaussian_sine") c.attack.kind = AttackPlan::Kind::gaussian_sine;
            else if (v == "stealthy") c.attack.kind = AttackPlan::Kind::stealthy;
            else throw ConfigError(p + ": unknown attack kind '" + v + "'");
        };
        m["attack.targets"] = [](ScenarioConfig& c, const std::string& v,
                                 const std::string& p) {
            c.attack.target_dgs.clear();
            for (const auto& t : split_ws(v)) c.attack.target_dgs.push_back(to_int(t, p));
        };
        m["attack.channels"] = [](ScenarioConfig& c, const std::string& v,
                                  const std::string& p) {
            c.attack.u_channels.clear();
            for (const auto& t : split_ws(v)) c.attack.u_channels.push_back(to_int(t, p));
        };
        m["attack.scales"] = [](ScenarioConfig& c, const std::string& v,
                                const std::string& p) {
            c.attack.channel_scales.clear();
            if (v == "auto") return;  // resolved after parsing
            for (const auto& t : split_ws(v))
                c.attack.channel_scales.push_back(to_double(t, p));
        };
        m["attack.t_k"] = [](ScenarioConfig& c, const std::string& v,
                             const std::string& p) {
            c.attack.schedule.t_k.clear();
            for (const auto& t : split_ws(v))
                c.attack.schedule.t_k.push_back(to_double(t, p));
        };
        m["attack.tau_k"] = [](ScenarioConfig& c, const std::string& v,
                               const std::string& p) {
            c.attack.schedule.tau_k.clear();
            for (const auto& t : split_ws(v))
                c.attack.schedule.tau_k.push_back(to_double(t, p));
        };
        m["attack.lo"] = num([](ScenarioConfig& c) -> double& { return c.attack.arbitrary.lo; });
        m["attack.hi"] = num([](ScenarioConfig& c) -> double& { return c.attack.arbitrary.hi; });
        m["attack.sigma"] =
            num([](ScenarioConfig& c) -> double& { return c.attack.arbitrary.sigma; });
        m["attack.amplitude"] =
            num([](ScenarioConfig& c) -> double& { return c.attack.arbitrary.amplitude; });
        m["attack.freq_hz"] =
            num([](ScenarioConfig& c) -> double& { return c.attack.arbitrary.freq_hz; });
        m["attack.b_rate"] = [](ScenarioConfig& c, const std::string& v,
                                const std::string& p) {
            c.attack.stealthy.b_rate = to_double(v, p);
        };
        m["attack.dz_scale"] =
            num([](ScenarioConfig& c) -> double& { return c.attack_dz_scale; });
        m["attack.seed"] = [](ScenarioConfig& c, const std::string& v,
                              const std::string& p) {
            c.attack.seed = static_cast<uint64_t>(to_double(v, p));
        };

        m["observer.enabled"] = [](ScenarioConfig& c, const std::string& v,
                                   const std::string& p) {
            c.observer.enabled = to_bool(v, p);
        };
        m["observer.variant"] = [](ScenarioConfig& c, const std::string& v,
                                   const std::string& p) {
            if (v == "nonlinear") c.observer.variant = ObserverVariant::nonlinear;
            else if (v == "output_injection")
                c.observer.variant = ObserverVariant::output_injection;
            else throw ConfigError(p + ": unknown observer variant '" + v + "'");
        };
        m["observer.xbar11"] =
            num([](ScenarioConfig& c) -> double& { return c.observer.xbar11; });
        m["observer.xbar12"] =
            num([](ScenarioConfig& c) -> double& { return c.observer.xbar12; });
        m["observer.pole_floor"] =
            num([](ScenarioConfig& c) -> double& { return c.observer.pole_floor; });
        m["observer.pole_step"] =
            num([](ScenarioConfig& c) -> double& { return c.observer.pole_step; });

        m["detector.lambda_f"] =
            num([](ScenarioConfig& c) -> double& { return c.detector.settings.lambda_f; });
        m["detector.floor"] =
            num([](ScenarioConfig& c) -> double& { return c.detector.settings.floor; });
        m["detector.zeta_bar"] =
            num([](ScenarioConfig& c) -> double& { return c.detector.settings.zeta_bar; });
        m["detector.arm_time"] =
            num([](ScenarioConfig& c) -> double& { return c.detector.settings.arm_time; });
        m["detector.chi_bar"] = [](ScenarioConfig& c, const std::string& v,
                                   const std::string& p) {
            if (v == "auto") {
                c.detector.chi_auto = true;
                c.detector.settings.chi_bar = 0.0;
            } else {
                c.detector.chi_auto = false;
                c.detector.settings.chi_bar = to_double(v, p);
            }
        };
        m["detector.mitigation"] = [](ScenarioConfig& c, const std::string& v,
                                      const std::string& p) {
            c.detector.settings.mitigation = to_bool(v, p);
        };
        m["detector.use_filtered_residual"] = [](ScenarioConfig& c, const std::string& v,
                                                 const std::string& p) {
            c.detector.settings.use_filtered_residual = to_bool(v, p);
        };
        return m;
    }();
    return h;
}

void set_dg_param(DgParams& d, const std::string& key, double v,
                  const std::string& path) {
    if (key == "m_p") d.m_p = v;
    else if (key == "n_q") d.n_q = v;
    else if (key == "r_c") d.r_c = v;
    else if (key == "l_c") d.l_c = v;
    else if (key == "r_f") d.r_f = v;
    else if (key == "l_f") d.l_f = v;
    else if (key == "c_f") d.c_f = v;
    else if (key == "k_pv") d.k_pv = v;
    else if (key == "k_iv") d.k_iv = v;
    else if (key == "k_pc") d.k_pc = v;
    else if (key == "k_ic") d.k_ic = v;
    else if (key == "omega_b") d.omega_b = v;
    else if (key == "f_comp") d.f_comp = v;
    else if (key == "omega_c") d.omega_c = v;
    else if (key == "c_freq") d.c_freq = v;
    else if (key == "c_volt") d.c_volt = v;
    else throw ConfigError(path + ": unknown DG parameter");
}

void dispatch_key(ScenarioConfig& cfg, const std::string& section,
                  const std::string& key, const std::string& value,
                  const std::string& where) {
    const std::string path = section + "." + key + where;
    if (section.rfind("dg", 0) == 0 && section.size() > 2) {
        int idx = 0;
        auto [p, ec] = std::from_chars(section.data() + 2,
                                       section.data() + section.size(), idx);
        if (ec != std::errc() || p != section.data() + section.size())
            throw ConfigError(path + ": bad DG section name");
        if (idx < 1 || idx > cfg.microgrid.n_dg())
            throw ConfigError(path + ": DG index out of range (set n_dg first)");
        set_dg_param(cfg.microgrid.dgs[idx - 1], key, to_double(value, path), path);
        return;
    }
    if (section == "lines" || section == "loads") {
        // Keys are line1, line2, ... / load1, ...; the suffix orders entries.
        std::string base = section == "lines" ? "line" : "load";
        if (key.rfind(base, 0) != 0)
            throw ConfigError(path + ": unknown key in [" + section + "]");
        handlers().at(section + "." + base)(cfg, value, path);
        return;
    }
    auto it = handlers().find(section + "." + key);
    if (it == handlers().end()) throw ConfigError(path + ": unknown key");
    it->second(cfg, value, path);
}

}  // namespace

void ScenarioConfig::validate() const {
    microgrid.validate();
    attack.validate(microgrid.n_dg());
    if (!(sim.dt > 0.0) || sim.duration < sim.dt)
        throw ConfigError("sim: need dt > 0 and duration >= dt");
    if (attack_dz_scale <= 0.0) throw ConfigError("attack.dz_scale must be positive");
}

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    cfg.microgrid.dgs.clear();
    cfg.microgrid.adjacency.resize(0, 0);
    cfg.microgrid.pinning.resize(0);

    std::istringstream is(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = " (line " + std::to_string(lineno) + ")";
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header" + where);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'" + where);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key outside any section" + where);
        dispatch_key(cfg, section, key, value, where);
    }

    // Resolve deferred defaults.
    if (cfg.attack.kind != AttackPlan::Kind::none) {
        if (cfg.attack.channel_scales.empty())
            cfg.attack.channel_scales =
                default_channel_scales(cfg.microgrid, cfg.attack.u_channels);
        if (cfg.attack.kind == AttackPlan::Kind::stealthy) {
            cfg.attack.stealthy = StealthyAttackSpec::exemplar_2state(
                cfg.attack.stealthy.b_rate, cfg.attack_dz_scale);
            cfg.attack.has_stealthy = true;
        }
    }
    cfg.validate();
    return cfg;
}

std::vector<double> default_channel_scales(const MicrogridConfig& cfg,
                                           const std::vector<int>& channels) {
    std::vector<double> scales;
    double cf = cfg.dgs.empty() ? 30.0 : cfg.dgs[0].c_freq;
    double cv = cfg.dgs.empty() ? 30.0 : cfg.dgs[0].c_volt;
    for (int ch : channels) {
        if (ch == 0 || ch == 3 || ch == 4 || ch == 5)
            scales.push_back(cf * cfg.omega_ref);  // frequency-type channel
        else if (ch == 6 || ch == 7 || ch == 8)
            scales.push_back(cv * cfg.v_ref_volts());  // voltage-type channel
        else
            scales.push_back(1.0);  // bus-voltage inputs: raw volts
    }
    return scales;
}

std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << "[sim]\n";
    os << "duration = " << fmt(cfg.sim.duration) << "\n";
    os << "dt = " << fmt(cfg.sim.dt) << "\n";
    os << "seed = " << cfg.sim.seed << "\n";
    os << "output = " << cfg.sim.output << "\n\n";

    const MicrogridConfig& mg = cfg.microgrid;
    os << "[microgrid]\n";
    os << "n_dg = " << mg.n_dg() << "\n";
    os << "v_ref_pu = " << fmt(mg.v_ref_pu) << "\n";
    os << "v_base = " << fmt(mg.v_base) << "\n";
    os << "omega_ref = " << fmt(mg.omega_ref) << "\n";
    os << "network_omega = " << fmt(mg.network_omega) << "\n";
    os << "adjacency = ";
    for (int i = 0; i < mg.n_dg(); ++i) {
        if (i) os << " ; ";
        os << fmt(VectorXd(mg.adjacency.row(i)));
    }
    os << "\n";
    os << "pinning = " << fmt(mg.pinning) << "\n\n";

    for (int i = 0; i < mg.n_dg(); ++i) {
        const DgParams& d = mg.dgs[i];
        os << "[dg" << i + 1 << "]\n";
        os << "m_p = " << fmt(d.m_p) << "\n";
        os << "n_q = " << fmt(d.n_q) << "\n";
        os << "r_c = " << fmt(d.r_c) << "\n";
        os << "l_c = " << fmt(d.l_c) << "\n";
        os << "r_f = " << fmt(d.r_f) << "\n";
        os << "l_f = " << fmt(d.l_f) << "\n";
        os << "c_f = " << fmt(d.c_f) << "\n";
        os << "k_pv = " << fmt(d.k_pv) << "\n";
        os << "k_iv = " << fmt(d.k_iv) << "\n";
        os << "k_pc = " << fmt(d.k_pc) << "\n";
        os << "k_ic = " << fmt(d.k_ic) << "\n";
        os << "omega_b = " << fmt(d.omega_b) << "\n";
        os << "f_comp = " << fmt(d.f_comp) << "\n";
        os << "omega_c = " << fmt(d.omega_c) << "\n";
        os << "c_freq = " << fmt(d.c_freq) << "\n";
        os << "c_volt = " << fmt(d.c_volt) << "\n\n";
    }

    os << "[lines]\n";
    for (std::size_t i = 0; i < mg.lines.size(); ++i)
        os << "line" << i + 1 << " = " << mg.lines[i].from << " " << mg.lines[i].to
           << " " << fmt(mg.lines[i].r) << " " << fmt(mg.lines[i].l) << "\n";
    os << "\n[loads]\n";
    for (std::size_t i = 0; i < mg.loads.size(); ++i)
        os << "load" << i + 1 << " = " << mg.loads[i].bus << " "
           << fmt(mg.loads[i].r) << " " << fmt(mg.loads[i].x) << "\n";

    const AttackPlan& at = cfg.attack;
    os << "\n[attack]\n";
    os << "kind = ";
    switch (at.kind) {
        case AttackPlan::Kind::none: os << "none"; break;
        case AttackPlan::Kind::uniform: os << "uniform"; break;
        case AttackPlan::Kind::gaussian_sine: os << "gaussian_sine"; break;
        case AttackPlan::Kind::stealthy: os << "stealthy"; break;
    }
    os << "\n";
    if (!at.target_dgs.empty()) {
        os << "targets =";
        for (int d : at.target_dgs) os << " " << d;
        os << "\n";
    }
    os << "channels =";
    for (int c : at.u_channels) os << " " << c;
    os << "\n";
    if (!at.channel_scales.empty()) {
        os << "scales =";
        for (double s : at.channel_scales) os << " " << fmt(s);
        os << "\n";
    }
    if (!at.schedule.t_k.empty()) {
        os << "t_k =";
        for (double t : at.schedule.t_k) os << " " << fmt(t);
        os << "\ntau_k =";
        for (double t : at.schedule.tau_k) os << " " << fmt(t);
        os << "\n";
    }
    os << "lo = " << fmt(at.arbitrary.lo) << "\n";
    os << "hi = " << fmt(at.arbitrary.hi) << "\n";
    os << "sigma = " << fmt(at.arbitrary.sigma) << "\n";
    os << "amplitude = " << fmt(at.arbitrary.amplitude) << "\n";
    os << "freq_hz = " << fmt(at.arbitrary.freq_hz) << "\n";
    os << "b_rate = " << fmt(at.stealthy.b_rate) << "\n";
    os << "dz_scale = " << fmt(cfg.attack_dz_scale) << "\n";
    os << "seed = " << at.seed << "\n";

    os << "\n[observer]\n";
    os << "enabled = " << (cfg.observer.enabled ? "on" : "off") << "\n";
    os << "variant = "
       << (cfg.observer.variant == ObserverVariant::nonlinear ? "nonlinear"
                                                              : "output_injection")
       << "\n";
    os << "xbar11 = " << fmt(cfg.observer.xbar11) << "\n";
    os << "xbar12 = " << fmt(cfg.observer.xbar12) << "\n";
    os << "pole_floor = " << fmt(cfg.observer.pole_floor) << "\n";
    os << "pole_step = " << fmt(cfg.observer.pole_step) << "\n";

    const DetectorSettings& ds = cfg.detector.settings;
    os << "\n[detector]\n";
    os << "lambda_f = " << fmt(ds.lambda_f) << "\n";
    os << "floor = " << fmt(ds.floor) << "\n";
    os << "chi_bar = "
       << (cfg.detector.chi_auto ? std::string("auto") : fmt(ds.chi_bar)) << "\n";
    os << "zeta_bar = " << fmt(ds.zeta_bar) << "\n";
    os << "arm_time = " << fmt(ds.arm_time) << "\n";
    os << "mitigation = " << (ds.mitigation ? "on" : "off") << "\n";
    os << "use_filtered_residual = " << (ds.use_filtered_residual ? "on" : "off")
       << "\n";
    return os.str();
}

void apply_override(ScenarioConfig& cfg, const std::string& path,
                    const std::string& value) {
    auto dot = path.find('.');
    if (dot == std::string::npos)
        throw ConfigError("override path must be section.key: " + path);
    dispatch_key(cfg, path.substr(0, dot), path.substr(dot + 1), value,
                 " (override)");
    if (cfg.attack.kind == AttackPlan::Kind::stealthy) {
        cfg.attack.stealthy = StealthyAttackSpec::exemplar_2state(
            cfg.attack.stealthy.b_rate, cfg.attack_dz_scale);
        cfg.attack.has_stealthy = true;
    }
    cfg.validate();
}

namespace {

// Local error dynamics at the nominal reference point. The designed spectrum
// of (A + D - L'C) does not pin the actual convergence rate: around an
// operating point the bilinear terms contribute df/dx and the state-dependent
// gain, and particular L' choices can leave (or even destabilize) slow
// effective modes. Checked at design time against the nominal references.
double effective_abscissa(const DgMatrices& m, const DgParams& p,
                          const ObserverGain& gain, double v_nom, double w_nom) {
    VectorXd x = VectorXd::Zero(kDgStates);
    x(8) = v_nom;   // v_od
    x(13) = w_nom;  // w_n
    x(14) = v_nom;  // V_n
    MatrixXd fx = MatrixXd::Zero(kDgStates, kDgStates);
    const double h = 1e-6 * std::max(1.0, v_nom);
    for (int j = 0; j < kDgStates; ++j) {
        VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fx.col(j) = (nonlinear_f(xp, p) - nonlinear_f(xm, p)) / (2.0 * h);
    }
    MatrixXd c = output_matrix();
    MatrixXd aeff = m.a + fx - (gain.l_prime + nonlinear_gain_L2(x, p)) * c;
    ReducedPair rp = reduce_delta(aeff, c);
    return eigenvalues(rp.a).real().maxCoeff();
}

}  // namespace

ObserverBundle make_observer_bundle(const ScenarioConfig& cfg) {
    ObserverBundle bundle;
    bundle.enabled = cfg.observer.enabled;
    bundle.variant = cfg.observer.variant;
    if (!bundle.enabled) return bundle;
    for (int i = 0; i < cfg.microgrid.n_dg(); ++i) {
        const DgParams& p = cfg.microgrid.dgs[i];
        DgMatrices m = build_matrices(p, cfg.microgrid.adjacency.row(i),
                                      cfg.microgrid.pinning(i));
        double x11 = cfg.observer.xbar11, x12 = cfg.observer.xbar12;
        if (cfg.observer.variant == ObserverVariant::output_injection)
            x11 = x12 = 0.0;  // plain placement per the output-injection design
        ObserverGain gain;
        bool ok = false;
        for (double floor = cfg.observer.pole_floor; floor > -400.0;
             floor -= 60.0) {
            gain = design_gain(m, p, x11, x12,
                               recommended_observer_poles(m, p, x11, x12, floor,
                                                          cfg.observer.pole_step));
            if (effective_abscissa(m, p, gain, cfg.microgrid.v_base,
                                   p.omega_b) <= -50.0) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw DesignError(
                "make_observer_bundle: no pole floor gave fast local error "
                "dynamics for DG " +
                std::to_string(i + 1));
        bundle.gains.push_back(std::move(gain));
    }
    return bundle;
}

ScenarioConfig ScenarioConfig::benchmark() {
    ScenarioConfig cfg;
    cfg.microgrid = MicrogridConfig::benchmark();
    cfg.sim.output = "benchmark";
    cfg.attack.u_channels = {3, 6};
    return cfg;
}

}  // namespace mgsim
