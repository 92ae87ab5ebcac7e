#pragma once

// Command-line front end: verbs, run directories, run.json records, plot data
// and run comparison.

#include "dglab/checks.hpp"
#include "dglab/coefficients.hpp"
#include "dglab/io.hpp"
#include "dglab/linear_dynamics.hpp"
#include "dglab/nonlinear.hpp"
#include "dglab/oracle.hpp"
#include "dglab/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace dglab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdict = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;
inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr const char* kOutRootEnv = "DGLAB_OUT_ROOT";

/// Bad verb, flag or input file. `path` is a JSON pointer into the run
/// configuration ("/parameters/T", "/init/amplitudes/3", ...).
class UsageError : public std::runtime_error {
public:
    UsageError(std::string path, const std::string& msg) : std::runtime_error(msg), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// ---------------------------------------------------------------------------
// Records

struct RunConfig {
    std::string command;
    json parameters = json::object();
    long seed = 0;
    std::string out_dir;

    json to_json() const
    {
        return json{{"command", command}, {"parameters", parameters}, {"seed", seed}, {"out_dir", out_dir}};
    }
};

struct FileEntry {
    std::string path;
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunRecord {
    RunConfig config;
    std::string started;
    std::string finished;
    std::string artifact_version = kArtifactVersion;
    std::vector<Verdict> verdicts;
    std::vector<FileEntry> files;

    bool passed() const { return all_pass(verdicts); }

    json to_json() const
    {
        json v = json::object();
        for (const auto& x : verdicts) {
            v[x.name] = json{{"pass", x.pass}, {"value", x.value}, {"tolerance", x.tolerance}, {"detail", x.detail}};
        }
        json f = json::array();
        for (const auto& e : files) {
            f.push_back(json{{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
        }
        return json{{"config", config.to_json()},
                    {"started", started},
                    {"finished", finished},
                    {"artifact_version", artifact_version},
                    {"verdicts", v},
                    {"status", passed() ? "pass" : "fail"},
                    {"files", f}};
    }
};

inline std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes files under one run directory and keeps the manifest. run.json is
/// written by finish() and is always the last file.
class RunWriter {
public:
    explicit RunWriter(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

    const fs::path& root() const { return root_; }

    void write(const std::string& rel, const std::string& text)
    {
        io::write_text(root_ / rel, text);
        files_.push_back({rel, io::sha256_hex(text), text.size()});
    }

    void finish(RunRecord& rec)
    {
        rec.files = files_;
        rec.finished = utc_now();
        io::write_text(root_ / "run.json", rec.to_json().dump(2) + "\n");
    }

private:
    fs::path root_;
    std::vector<FileEntry> files_;
};

inline fs::path resolve_out_dir(const std::string& flag, const std::string& verb)
{
    if (!flag.empty()) {
        return flag;
    }
    if (const char* root = std::getenv(kOutRootEnv); root && *root) {
        return fs::path(root) / verb;
    }
    return fs::path("runs") / verb;
}

// ---------------------------------------------------------------------------
// Plot data

struct PlotSeries {
    std::string name;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::vector<double> y;
};

inline std::string svg_plot(const PlotSeries& s)
{
    const double W = 640, H = 400, pad = 40;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!s.x.empty()) {
        x0 = *std::min_element(s.x.begin(), s.x.end());
        x1 = *std::max_element(s.x.begin(), s.x.end());
        y0 = *std::min_element(s.y.begin(), s.y.end());
        y1 = *std::max_element(s.y.begin(), s.y.end());
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double px = pad + (s.x[i] - x0) / (x1 - x0) * (W - 2 * pad);
        const double py = H - pad - (s.y[i] - y0) / (y1 - y0) * (H - 2 * pad);
        pts += io::format_double(px) + "," + io::format_double(py) + " ";
    }
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
    out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    out += "<polyline fill=\"none\" stroke=\"black\" points=\"" + pts + "\"/>\n";
    out += "<text x=\"40\" y=\"20\">" + s.name + " (" + s.y_label + " vs " + s.x_label + ")</text>\n";
    out += "<text x=\"40\" y=\"395\">" + io::format_double(x0) + "</text>\n";
    out += "<text x=\"560\" y=\"395\">" + io::format_double(x1) + "</text>\n";
    out += "<text x=\"2\" y=\"360\">" + io::format_double(y0) + "</text>\n";
    out += "<text x=\"2\" y=\"50\">" + io::format_double(y1) + "</text>\n";
    out += "</svg>\n";
    return out;
}

/// One two-column CSV per series under plot_data/. Returns the written
/// relative paths; an empty set writes nothing and warns.
inline std::vector<std::string> emit_plot_data(RunWriter& w, const std::vector<PlotSeries>& series, bool svg = false,
                                               std::ostream& warn = std::cerr)
{
    std::vector<std::string> written;
    if (series.empty()) {
        warn << "warning: no plot series in this run; nothing written\n";
        return written;
    }
    for (const auto& s : series) {
        io::CsvWriter csv({s.x_label, s.y_label});
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            csv.row({s.x[i], s.y[i]});
        }
        const std::string rel = "plot_data/" + s.name + ".csv";
        w.write(rel, csv.str());
        written.push_back(rel);
        if (svg) {
            const std::string srel = "plot_data/" + s.name + ".svg";
            w.write(srel, svg_plot(s));
            written.push_back(srel);
        }
    }
    return written;
}

// ---------------------------------------------------------------------------
// Input files

inline json load_json(const std::string& file, const std::string& pointer)
{
    std::string text;
    try {
        text = io::read_text(file);
    } catch (const std::exception& e) {
        throw UsageError(pointer, e.what());
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError(pointer, std::string("invalid JSON in ") + file + ": " + e.what());
    }
}

inline InitialDataSpec parse_init_spec(const json& j, const std::string& ptr = "/init")
{
    if (!j.is_object()) {
        throw UsageError(ptr, "initial data must be a JSON object");
    }
    for (const auto& [key, val] : j.items()) {
        if (key != "kind" && key != "amplitudes" && key != "window") {
            throw UsageError(ptr + "/" + key, "unknown key");
        }
    }
    InitialDataSpec spec;
    if (!j.contains("kind") || !j["kind"].is_string()) {
        throw UsageError(ptr + "/kind", "required string: single_mode, two_mode, even_family or custom");
    }
    try {
        spec.kind = parse_initial_kind(j["kind"].get<std::string>());
    } catch (const std::exception& e) {
        throw UsageError(ptr + "/kind", e.what());
    }
    if (j.contains("window")) {
        if (!j["window"].is_boolean()) {
            throw UsageError(ptr + "/window", "must be a boolean");
        }
        spec.window = j["window"].get<bool>();
    }
    if (!j.contains("amplitudes") || !j["amplitudes"].is_object() || j["amplitudes"].empty()) {
        throw UsageError(ptr + "/amplitudes", "required non-empty object index -> amplitude");
    }
    for (const auto& [key, val] : j["amplitudes"].items()) {
        long k = 0;
        try {
            std::size_t used = 0;
            k = std::stol(key, &used);
            if (used != key.size()) {
                throw std::invalid_argument(key);
            }
        } catch (const std::exception&) {
            throw UsageError(ptr + "/amplitudes/" + key, "index must be an integer");
        }
        if (!val.is_number()) {
            throw UsageError(ptr + "/amplitudes/" + key, "amplitude must be a number");
        }
        spec.amplitudes[k] = val.get<double>();
    }
    return spec;
}

inline json init_spec_json(const InitialDataSpec& s)
{
    json a = json::object();
    for (const auto& [k, v] : s.amplitudes) {
        a[std::to_string(k)] = v;
    }
    return json{{"kind", to_string(s.kind)}, {"amplitudes", a}, {"window", s.window}};
}

inline TildeSeries checked_initial_data(const InitialDataSpec& spec, const std::string& ptr = "/init")
{
    try {
        return build_initial_data(spec);
    } catch (const std::exception& e) {
        throw UsageError(ptr, e.what());
    }
}

inline SolverConfig parse_solver_config(const json& j, SolverConfig cfg = {}, const std::string& ptr = "/config")
{
    if (!j.is_object()) {
        throw UsageError(ptr, "solver config must be a JSON object");
    }
    auto number = [&](const std::string& key) {
        if (!j[key].is_number()) {
            throw UsageError(ptr + "/" + key, "must be a number");
        }
        return j[key].get<double>();
    };
    auto count = [&](const std::string& key) {
        if (!j[key].is_number_unsigned()) {
            throw UsageError(ptr + "/" + key, "must be a non-negative integer");
        }
        return j[key].get<std::size_t>();
    };
    for (const auto& [key, val] : j.items()) {
        if (key == "M") {
            cfg.M = count(key);
        } else if (key == "modes") {
            cfg.modes = count(key);
        } else if (key == "dt") {
            cfg.dt = number(key);
        } else if (key == "a") {
            cfg.a = number(key);
        } else if (key == "sample_every") {
            cfg.sample_every = count(key);
        } else if (key == "snapshot_every") {
            cfg.snapshot_every = count(key);
        } else if (key == "guard_sup") {
            cfg.guard_sup = number(key);
        } else if (key == "dealias") {
            const std::string s = val.is_string() ? val.get<std::string>() : "";
            if (s == "two_thirds") {
                cfg.dealias = Dealias::TwoThirds;
            } else if (s == "none") {
                cfg.dealias = Dealias::None;
            } else {
                throw UsageError(ptr + "/dealias", "must be \"two_thirds\" or \"none\"");
            }
        } else if (key == "formulation") {
            const std::string s = val.is_string() ? val.get<std::string>() : "";
            if (s == "perturbation") {
                cfg.formulation = Formulation::Perturbation;
            } else if (s == "vorticity") {
                cfg.formulation = Formulation::Vorticity;
            } else {
                throw UsageError(ptr + "/formulation", "must be \"perturbation\" or \"vorticity\"");
            }
        } else if (key == "gauge") {
            if (!val.is_string() || val.get<std::string>() != "u_at_zero") {
                throw UsageError(ptr + "/gauge", "only \"u_at_zero\" is supported");
            }
        } else {
            throw UsageError(ptr + "/" + key, "unknown key");
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(':');
        const std::string field = msg.rfind("config.", 0) == 0 && colon != std::string::npos ? msg.substr(7, colon - 7) : "";
        throw UsageError(ptr + (field.empty() ? "" : "/" + field), msg);
    }
    return cfg;
}

inline json solver_config_json(const SolverConfig& c)
{
    return json{{"M", c.M},
                {"modes", c.modes},
                {"dt", c.dt},
                {"a", c.a},
                {"dealias", to_string(c.dealias)},
                {"formulation", to_string(c.formulation)},
                {"gauge", "u_at_zero"},
                {"sample_every", c.sample_every},
                {"snapshot_every", c.snapshot_every},
                {"guard_sup", c.guard_sup}};
}

inline void require_positive(double v, const std::string& name)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw UsageError("/parameters/" + name, name + " must be positive");
    }
}

inline void require_step_multiple(double T, double dt, const std::string& name)
{
    if (!is_step_multiple(T, dt)) {
        throw UsageError("/parameters/" + name, name + " must be a whole number of time steps");
    }
}

inline json verdicts_json(const std::vector<Verdict>& vs)
{
    json v = json::object();
    for (const auto& x : vs) {
        v[x.name] = json{{"pass", x.pass}, {"value", x.value}, {"tolerance", x.tolerance}, {"detail", x.detail}};
    }
    return v;
}

// ---------------------------------------------------------------------------
// coeffs / verify-bounds

inline json coeff_record_json(const CoeffRecord& r)
{
    return json{{"k", r.k},
                {"d", fraction_string(r.d)},
                {"diff", fraction_string(r.diff)},
                {"a", fraction_string(r.a)},
                {"eps", fraction_string(r.eps)},
                {"lam1", r.lam1},
                {"lam2", r.lam2}};
}

inline json certificate_json(const BoundsCertificate& c)
{
    return json{{"k_min", c.k_min},
                {"k_max", c.k_max},
                {"lower", fraction_string(c.lower)},
                {"upper", fraction_string(c.upper)},
                {"a_lower", fraction_string(c.a_lower)},
                {"a_upper", fraction_string(c.a_upper)},
                {"verified", c.verified},
                {"failures", c.failures}};
}

struct ExactConstant {
    std::string name;
    Rational value;
    Rational expected;
};

inline std::vector<ExactConstant> exact_constants()
{
    return {
        {"diff_1", diff_coeff(1), Rational(11, 18)},
        {"diff_2", diff_coeff(2), Rational(-3, 8)},
        {"diff_5", diff_coeff(5), Rational(-1269, 2450)},
        {"f_6", f_envelope_exact(6), Rational(-149, 288)},
        {"eps_1", eps_coeff(1), Rational(62, 405)},
        {"d_2", d_coeff(2), Rational(0)},
    };
}

inline std::vector<Verdict> constants_verdicts(const io::Table& t)
{
    std::vector<Verdict> out;
    const std::size_t cv = t.column("value");
    const std::size_t ce = t.column("expected");
    const std::size_t cn = t.column("name");
    for (const auto& r : t.rows) {
        out.push_back({"exact_" + r[cn], r[cv] == r[ce], r[cv] == r[ce] ? 0.0 : 1.0, 0.0, r[cv] + " vs " + r[ce]});
    }
    return out;
}

inline Verdict lamb1_range_verdict(const std::vector<double>& lam1)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : lam1) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const bool ok = !lam1.empty() && lo > lambda_lower_d() && hi < lambda_upper_d();
    return {"lamb1_in_bracket", ok, lo, lambda_lower_d(), "min lam1 (max " + io::format_double(hi) + ") inside (1/50, 3/5)"};
}

struct CoeffsOptions {
    std::optional<long> k;
    bool table = false;
    long kmax = 100;
    std::string out;
    bool svg = false;
};

inline RunRecord run_coeffs_table(const CoeffsOptions& o, RunConfig cfg)
{
    fs::path table_path;
    fs::path dir;
    if (!o.out.empty() && fs::path(o.out).extension() == ".csv") {
        table_path = o.out;
        dir = table_path.has_parent_path() ? table_path.parent_path() : fs::path(".");
    } else {
        dir = resolve_out_dir(o.out, "coeffs");
        table_path = dir / "coeffs.csv";
    }
    cfg.out_dir = dir.string();
    RunRecord rec;
    rec.config = cfg;
    rec.started = utc_now();
    RunWriter w(dir);

    std::string table = "k,d_k,diff_k,a_k,eps_k,lam1,lam2\n";
    std::vector<PlotSeries> plots = {{"dk_diff", "k", "diff_k", {}, {}},
                                     {"ak", "k", "a_k", {}, {}},
                                     {"epsk", "k", "eps_k", {}, {}},
                                     {"lamb1", "k", "lam1", {}, {}},
                                     {"lamb2", "k", "lam2", {}, {}}};
    for (long k = 1; k <= o.kmax; ++k) {
        const CoeffRecord r = coeff_record(k);
        const double vals[] = {r.diff.get_d(), r.a.get_d(), r.eps.get_d(), r.lam1, r.lam2};
        table += std::to_string(k) + "," + io::format_g17(r.d.get_d()) + "," + io::format_g17(vals[0]) + ","
                 + io::format_g17(vals[1]) + "," + io::format_g17(vals[2]) + "," + io::format_g17(vals[3]) + ","
                 + io::format_g17(vals[4]) + "\n";
        for (std::size_t p = 0; p < plots.size(); ++p) {
            plots[p].x.push_back(static_cast<double>(k));
            plots[p].y.push_back(vals[p]);
        }
    }
    w.write(fs::relative(table_path, dir).string(), table);

    io::CsvWriter consts({"name", "value", "expected"});
    for (const auto& c : exact_constants()) {
        consts.raw_row({c.name, fraction_string(c.value), fraction_string(c.expected)});
    }
    w.write("constants.csv", consts.str());
    emit_plot_data(w, plots, o.svg);

    io::Table ct;
    ct.header = {"name", "value", "expected"};
    for (const auto& c : exact_constants()) {
        ct.rows.push_back({c.name, fraction_string(c.value), fraction_string(c.expected)});
    }
    rec.verdicts = constants_verdicts(ct);
    rec.verdicts.push_back(lamb1_range_verdict(plots[3].y));
    w.finish(rec);
    return rec;
}

struct BoundsOptions {
    long kmax = 100000;
    std::string out;
};

inline std::vector<Verdict> bounds_verdicts(const io::Table& summary)
{
    const auto fails = summary.numbers("failures");
    const auto kmax = summary.numbers("k_max");
    const bool ok = !fails.empty() && fails[0] == 0.0;
    return {{"bounds_certified", ok, fails.empty() ? 1.0 : fails[0], 0.0,
             "exact minor tests on k = 1.." + (kmax.empty() ? std::string("?") : io::format_double(kmax[0]))}};
}

// ---------------------------------------------------------------------------
// evolve-linear

struct LinearOptions {
    std::string init;
    double T = 10.0;
    double dt = 1e-3;
    long N = 256;
    long sample_every = 10;
    long snapshot_every = 100;
    std::string out;
    bool svg = false;
};

inline bool even_only(const TildeSeries& s)
{
    for (std::size_t k = 1; k <= s.size(); ++k) {
        if (k % 2 == 1 && s.coeffs[k - 1] != 0.0) {
            return false;
        }
    }
    return true;
}

inline std::string linear_trajectory_csv(const TrajectoryRecord& r)
{
    io::CsvWriter w({"time", "energy", "rayleigh", "j1", "j2", "tail_flux", "tail_mass"});
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        w.row({r.times[i], r.energy[i], r.rayleigh[i], r.j1[i], r.j2[i], r.tail_flux[i], r.tail_mass[i]});
    }
    return w.str();
}

inline std::vector<Verdict> linear_verdicts_from_table(const io::Table& t, const TildeSeries& eta0,
                                                       bool guard_tripped)
{
    std::vector<Verdict> v = checks::linear_verdicts(t.numbers("time"), t.numbers("energy"), t.numbers("j1"),
                                                     t.numbers("j2"), rayleigh(eta0) >= 0.0, even_only(eta0));
    v.insert(v.begin(), Verdict{"run_completed", !guard_tripped, guard_tripped ? 1.0 : 0.0, 0.0, "energy guard"});
    return v;
}

// ---------------------------------------------------------------------------
// nonlinear runs

inline std::string nonlinear_trajectory_csv(const NonlinearRun& run)
{
    io::CsvWriter w({"time", "hdw_norm", "u_l2", "l2_norm", "sup_norm", "omega_sup", "parity_leak", "tail_mass",
                     "hdw_residual"});
    for (const auto& s : run.samples) {
        const auto& d = s.diag;
        w.row({s.t, d.hdw_norm, d.u_l2, d.l2_norm, d.sup_norm, d.omega_sup, d.parity_leak, d.tail_mass,
               d.hdw_residual});
    }
    return w.str();
}

inline std::vector<PlotSeries> nonlinear_plots(const NonlinearRun& run)
{
    std::vector<PlotSeries> p = {{"hdw_norm", "time", "hdw_norm", {}, {}},
                                 {"sup_norm", "time", "sup_norm", {}, {}},
                                 {"parity_leak", "time", "parity_leak", {}, {}}};
    for (const auto& s : run.samples) {
        for (auto& q : p) {
            q.x.push_back(s.t);
        }
        p[0].y.push_back(s.diag.hdw_norm);
        p[1].y.push_back(s.diag.sup_norm);
        p[2].y.push_back(s.diag.parity_leak);
    }
    return p;
}

inline std::vector<Verdict> stability_verdicts_from_table(const io::Table& t, double T)
{
    const auto time = t.numbers("time");
    const auto norm = t.numbers("hdw_norm");
    const auto leak = t.numbers("parity_leak");
    const RateFit fit = fit_log_rate(time, norm, 0.5 * T, T);
    double worst_bound = 0.0;
    double worst_leak = 0.0;
    for (std::size_t i = 0; i < time.size(); ++i) {
        worst_bound = std::max(worst_bound, norm[i] / (norm[0] * std::exp(kStabilityRate * time[i])));
        worst_leak = std::max(worst_leak, leak[i]);
    }
    const bool completed = !time.empty() && std::abs(time.back() - T) < 1e-9 * std::max(1.0, T);
    return {{"run_completed", completed, completed ? 0.0 : 1.0, 0.0, "trajectory reaches T"},
            {"decay_rate", completed && fit.rate <= kStabilityRate + kRateTolerance, fit.rate,
             kStabilityRate + kRateTolerance, "fit of log hdw_norm over [T/2, T]"},
            {"decay_bound", completed && worst_bound <= kStabilityConstant, worst_bound, kStabilityConstant,
             "max of hdw_norm / (hdw_norm0 exp(-3t/8))"},
            {"parity_leak", worst_leak < kParityTolerance, worst_leak, kParityTolerance, "max odd-frequency mass"}};
}

inline json report_json(const ExperimentReport& r)
{
    json j{{"label", r.label}, {"config", solver_config_json(r.config)}, {"T", r.T}, {"verdicts", verdicts_json(r.verdicts)}};
    if (r.label == "stability") {
        j["fit"] = json{{"window", {r.fit.window_start, r.fit.window_end}},
                        {"rate", r.fit.rate},
                        {"intercept", r.fit.intercept},
                        {"residual", r.fit.residual},
                        {"points", r.fit.points}};
        j["guard_tripped"] = r.run.guard_tripped;
        j["guard_reason"] = r.run.guard_reason;
    }
    if (r.label == "instability") {
        json e = json::array();
        for (const auto& x : r.eps) {
            e.push_back(json{{"epsilon", x.epsilon},
                             {"horizon", x.horizon},
                             {"crossed", x.crossed},
                             {"crossing_time", x.crossed ? json(x.crossing_time) : json(nullptr)},
                             {"final_ratio", x.final_ratio},
                             {"guard_tripped", x.guard_tripped}});
        }
        j["epsilons"] = e;
        j["cross_check"] = json{{"epsilon", r.cross_check.epsilon},
                                {"max_relative_diff", r.cross_check.max_relative_diff},
                                {"min_envelope_margin", r.cross_check.min_envelope_margin},
                                {"crossing_time", r.cross_check.crossing_time}};
    }
    return j;
}

inline std::vector<Verdict> instability_verdicts_from_tables(const io::Table& crossings, const io::Table& check,
                                                             double tolerance = 0.01)
{
    std::vector<Verdict> out;
    const auto eps = crossings.numbers("epsilon");
    const auto crossed = crossings.numbers("crossed");
    const auto when = crossings.numbers("crossing_time");
    const auto ratio = crossings.numbers("final_ratio");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "%g", eps[i]);
        const bool ok = crossed[i] == 1.0;
        out.push_back({std::string("crosses_K_eps_") + tag, ok, ok ? when[i] : ratio[i], crossings.numbers("K")[i],
                       "first time ratio > K"});
    }
    const auto nl = check.numbers("ratio_nonlinear");
    const auto lin = check.numbers("ratio_linear");
    const auto env = check.numbers("ratio_envelope");
    double diff = 0.0;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nl.size(); ++i) {
        diff = std::max(diff, std::abs(nl[i] - lin[i]) / lin[i]);
        margin = std::min(margin, nl[i] / env[i] - 1.0);
    }
    const bool reached = !nl.empty() && nl.back() > crossings.numbers("K").front();
    out.push_back({"linear_cross_check", reached && diff < tolerance, diff, tolerance,
                   "max |ratio_nl - ratio_lin| / ratio_lin up to crossing"});
    out.push_back({"linear_envelope", margin > -tolerance, margin, -tolerance, "min of ratio_nl / sqrt(J1 / E0) - 1"});
    return out;
}

// ---------------------------------------------------------------------------
// verify --cross-check

struct CrossCheckResult {
    std::string check;
    long index = 0;
    double value = 0.0;
};

inline TildeSeries random_tilde(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TildeSeries s(n);
    for (auto& c : s.coeffs) {
        c = u(rng);
    }
    return s;
}

/// Relative gaps between oracle and fast paths. Check names: collocation_L,
/// quadrature_hdw, formulations.
inline std::vector<CrossCheckResult> cross_check_values(std::size_t samples, std::uint64_t seed,
                                                        double formulation_T = 1.0)
{
    std::vector<CrossCheckResult> out;
    std::mt19937_64 rng(seed);
    const std::size_t M = 128;
    const GridTransform grid(M);
    for (std::size_t s = 0; s < samples; ++s) {
        const TildeSeries eta = random_tilde(rng, 24);
        const FourierField f = to_fourier(tilde_to_sine(eta));
        const GridField g = grid.to_grid_field(f);
        const GridField Lc = oracle::collocation_apply_L(g);
        const LTildeResult Lt = apply_L_tilde(eta, eta.size() + 2);
        const std::vector<double> fast = grid.to_grid((-1.0) * to_fourier(tilde_to_sine(Lt.value)));
        double num = 0.0;
        double den = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            num = std::max(num, std::abs(Lc.values[m] - fast[m]));
            den = std::max(den, std::abs(fast[m]));
        }
        out.push_back({"collocation_L", static_cast<long>(s), num / den});

        const auto q = oracle::quadrature_hdw(g);
        const double e = hdw_norm_squared(eta);
        out.push_back({"quadrature_hdw", static_cast<long>(s), std::abs(q.value - e) / e});
    }

    SolverConfig cfg;
    cfg.sample_every = 100;
    cfg.snapshot_every = 1;
    TildeSeries eta0(4);
    eta0.at(1) = 0.3;
    eta0.at(2) = 0.2;
    eta0.at(4) = -0.1;
    cfg.formulation = Formulation::Perturbation;
    const NonlinearRun a = evolve_nonlinear(NonlinearState::perturbation(eta0), cfg, formulation_T);
    cfg.formulation = Formulation::Vorticity;
    const NonlinearRun b = evolve_nonlinear(NonlinearState::vorticity_from_tilde(eta0, cfg.modes), cfg, formulation_T);
    const GridTransform big(cfg.M);
    for (std::size_t i = 0; i < std::min(a.snapshots.size(), b.snapshots.size()); ++i) {
        const auto ga = big.to_grid(perturbation_field(a.snapshots[i], cfg.modes));
        const auto gb = big.to_grid(perturbation_field(b.snapshots[i], cfg.modes));
        double gap = 0.0;
        for (std::size_t m = 0; m < ga.size(); ++m) {
            gap = std::max(gap, std::abs(ga[m] - gb[m]));
        }
        out.push_back({"formulations", static_cast<long>(i), gap});
    }
    return out;
}

inline constexpr double kCollocationTol = 1e-11;
inline constexpr double kQuadratureTol = 1e-8;
inline constexpr double kFormulationTol = 1e-10;

inline std::vector<Verdict> cross_check_verdicts(const io::Table& t)
{
    std::map<std::string, double> worst;
    const std::size_t cc = t.column("check");
    const std::size_t cv = t.column("value");
    for (const auto& r : t.rows) {
        worst[r[cc]] = std::max(worst[r[cc]], io::parse_double(r[cv]));
    }
    auto make = [&](const std::string& name, double tol, const std::string& what) {
        const bool present = worst.count(name) > 0;
        const double v = present ? worst[name] : 1.0;
        return Verdict{name, present && v < tol, v, tol, what};
    };
    return {make("collocation_L", kCollocationTol, "max relative gap, collocation vs tilde route"),
            make("quadrature_hdw", kQuadratureTol, "max relative gap, quadrature vs coefficient norm"),
            make("formulations", kFormulationTol, "max sup-norm gap, perturbation vs vorticity over [0, 1]")};
}

// ---------------------------------------------------------------------------
// compare

struct ColumnDiff {
    std::string file;
    std::string column;
    double max_relative_diff = 0.0;
};

struct CompareReport {
    std::string command;
    std::vector<ColumnDiff> columns;
    std::vector<std::string> only_in_a;
    std::vector<std::string> only_in_b;

    json to_json() const
    {
        json cols = json::array();
        for (const auto& c : columns) {
            cols.push_back(json{{"file", c.file}, {"column", c.column}, {"max_relative_diff", c.max_relative_diff}});
        }
        return json{{"command", command}, {"columns", cols}, {"only_in_a", only_in_a}, {"only_in_b", only_in_b}};
    }
};

inline std::vector<std::string> csv_files(const fs::path& root)
{
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") {
            out.push_back(fs::relative(e.path(), root).generic_string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Per-column max relative difference over the CSV files both runs share.
/// Shared files must have equal headers and row counts.
inline CompareReport compare_runs(const fs::path& a, const fs::path& b)
{
    const json ra = load_json((a / "run.json").string(), "/a");
    const json rb = load_json((b / "run.json").string(), "/b");
    const std::string ca = ra.at("config").at("command").get<std::string>();
    const std::string cb = rb.at("config").at("command").get<std::string>();
    if (ca != cb) {
        throw UsageError("/b/config/command", "runs use different verbs: '" + ca + "' vs '" + cb + "'");
    }
    CompareReport rep;
    rep.command = ca;
    const auto fa = csv_files(a);
    const auto fb = csv_files(b);
    std::set_difference(fa.begin(), fa.end(), fb.begin(), fb.end(), std::back_inserter(rep.only_in_a));
    std::set_difference(fb.begin(), fb.end(), fa.begin(), fa.end(), std::back_inserter(rep.only_in_b));
    std::vector<std::string> shared;
    std::set_intersection(fa.begin(), fa.end(), fb.begin(), fb.end(), std::back_inserter(shared));
    for (const auto& f : shared) {
        const io::Table ta = io::read_csv(a / f);
        const io::Table tb = io::read_csv(b / f);
        if (ta.header != tb.header) {
            throw UsageError("/files/" + f, "column headers differ");
        }
        if (ta.rows.size() != tb.rows.size()) {
            throw UsageError("/files/" + f, "row counts differ (" + std::to_string(ta.rows.size()) + " vs "
                                                + std::to_string(tb.rows.size()) + ")");
        }
        for (std::size_t c = 0; c < ta.header.size(); ++c) {
            ColumnDiff d{f, ta.header[c], 0.0};
            bool numeric = true;
            for (std::size_t r = 0; r < ta.rows.size() && numeric; ++r) {
                const std::string& sa = ta.rows[r].at(c);
                const std::string& sb = tb.rows[r].at(c);
                if (sa == sb) {
                    continue;
                }
                try {
                    const double x = io::parse_double(sa);
                    const double y = io::parse_double(sb);
                    const double scale = std::max({std::abs(x), std::abs(y), std::numeric_limits<double>::min()});
                    d.max_relative_diff = std::max(d.max_relative_diff, std::abs(x - y) / scale);
                } catch (const std::invalid_argument&) {
                    numeric = false;
                    d.max_relative_diff = std::numeric_limits<double>::infinity();
                }
            }
            rep.columns.push_back(d);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Dispatcher

namespace detail {

inline void add_json_flag(CLI::App* sub, bool& flag)
{
    sub->add_flag("--json", flag, "Stream the run record as JSON to standard output");
}

inline int finish_run(const RunRecord& rec, bool as_json, std::ostream& out)
{
    if (as_json) {
        out << rec.to_json().dump(2) << "\n";
    } else {
        std::size_t ok = 0;
        for (const auto& v : rec.verdicts) {
            ok += v.pass ? 1 : 0;
            out << (v.pass ? "PASS " : "FAIL ") << v.name << " value=" << io::format_double(v.value)
                << " tol=" << io::format_double(v.tolerance) << "\n";
        }
        out << rec.config.command << ": " << ok << "/" << rec.verdicts.size() << " verdicts pass -> "
            << rec.config.out_dir << "\n";
    }
    return rec.passed() ? kExitOk : kExitVerdict;
}

inline RunRecord start_record(const std::string& command, json params, const fs::path& dir, long seed = 0)
{
    RunRecord rec;
    rec.config.command = command;
    rec.config.parameters = std::move(params);
    rec.config.seed = seed;
    rec.config.out_dir = dir.string();
    rec.started = utc_now();
    return rec;
}

} // namespace detail

/// Parses argv and runs one verb. Exit codes: 0 all verdicts pass, 2 a verdict
/// failed, 64 usage error (nothing written), 70 internal error.
inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Linear and nonlinear dynamics around the excited state -sin(2 theta)", "dglab"};
    app.require_subcommand(1);
    bool as_json = false;

    CoeffsOptions co;
    long k_flag = 0;
    auto* coeffs = app.add_subcommand("coeffs", "Exact chain coefficients");
    auto* k_opt = coeffs->add_option("--k", k_flag, "Print one coefficient record");
    coeffs->add_flag("--table", co.table, "Write the coefficient table and plot data");
    coeffs->add_option("--kmax", co.kmax, "Largest k in the table");
    coeffs->add_option("--out", co.out, "Table path (*.csv) or run directory");
    coeffs->add_flag("--svg", co.svg, "Also write SVG line plots");
    detail::add_json_flag(coeffs, as_json);

    BoundsOptions bo;
    auto* bounds = app.add_subcommand("verify-bounds", "Certify the eigenvalue and a_k brackets");
    bounds->add_option("--kmax", bo.kmax, "Largest k to certify");
    bounds->add_option("--out", bo.out, "Run directory");
    detail::add_json_flag(bounds, as_json);

    LinearOptions lo;
    auto* lin = app.add_subcommand("evolve-linear", "Integrate the truncated linear chain");
    lin->add_option("--init", lo.init, "Initial data spec (JSON); default single mode e~_1");
    lin->add_option("--T", lo.T, "Final time");
    lin->add_option("--dt", lo.dt, "Time step");
    lin->add_option("--N", lo.N, "Tilde truncation");
    lin->add_option("--sample-every", lo.sample_every, "Steps between samples");
    lin->add_option("--snapshot-every", lo.snapshot_every, "Samples between state snapshots (0: none)");
    lin->add_option("--out", lo.out, "Run directory");
    lin->add_flag("--svg", lo.svg, "Also write SVG line plots");
    detail::add_json_flag(lin, as_json);

    std::string nl_config, nl_init, nl_out;
    double nl_T = 0.0;
    bool nl_svg = false;
    auto* nl = app.add_subcommand("evolve-nonlinear", "Run the pseudo-spectral solver");
    nl->add_option("--config", nl_config, "Solver config (JSON)");
    nl->add_option("--init", nl_init, "Initial perturbation spec (JSON)")->required();
    nl->add_option("--T", nl_T, "Final time")->required();
    nl->add_option("--out", nl_out, "Run directory");
    nl->add_flag("--svg", nl_svg, "Also write SVG line plots");
    detail::add_json_flag(nl, as_json);

    auto* exp = app.add_subcommand("experiment", "Stability or instability experiment");
    exp->require_subcommand(1);
    std::string ex_config, ex_out, ex_init;
    bool ex_svg = false;
    double st_amp = 0.01, st_T = 20.0, st_dt = 1e-3;
    std::vector<long> st_modes{2};
    std::size_t st_M = 512, st_retained = 170;
    auto* stab = exp->add_subcommand("stability", "Small even data decays like exp(-3t/8)");
    stab->add_option("--amplitude", st_amp, "Amplitude on each listed tilde index");
    stab->add_option("--modes", st_modes, "Even tilde indices")->delimiter(',');
    stab->add_option("--T", st_T, "Final time");
    stab->add_option("--M", st_M, "Grid size");
    stab->add_option("--retained", st_retained, "Retained Fourier modes");
    stab->add_option("--dt", st_dt, "Time step");
    stab->add_option("--config", ex_config, "Solver config (JSON); flags override");
    stab->add_option("--out", ex_out, "Run directory");
    stab->add_flag("--svg", ex_svg, "Also write SVG line plots");
    detail::add_json_flag(stab, as_json);

    std::vector<double> in_eps{1e-2, 1e-3, 1e-4};
    InstabilityOptions in_opt;
    auto* inst = exp->add_subcommand("instability", "Scaled data leave a K-neighbourhood");
    inst->add_option("--eps", in_eps, "Scalings of the initial data")->delimiter(',');
    inst->add_option("--K", in_opt.K, "Growth ratio threshold");
    inst->add_option("--horizon", in_opt.horizon, "Per-epsilon time limit");
    inst->add_option("--cross-eps", in_opt.cross_check_epsilon, "Scaling for the linear cross-check");
    inst->add_option("--init", ex_init, "Initial data spec (JSON); default window two-mode a_1 = 1, k = 2");
    inst->add_option("--config", ex_config, "Solver config (JSON)");
    inst->add_option("--out", ex_out, "Run directory");
    inst->add_flag("--svg", ex_svg, "Also write SVG line plots");
    detail::add_json_flag(inst, as_json);

    bool vf_cross = false;
    std::size_t vf_samples = 100;
    long vf_seed = 1;
    std::string vf_out;
    auto* verify = app.add_subcommand("verify", "Cross-check fast paths against the reference oracle");
    verify->add_flag("--cross-check", vf_cross, "Run the oracle comparisons")->required();
    verify->add_option("--samples", vf_samples, "Random fields per check");
    verify->add_option("--seed", vf_seed, "Seed for the random fields");
    verify->add_option("--out", vf_out, "Run directory");
    detail::add_json_flag(verify, as_json);

    std::string cmp_a, cmp_b;
    auto* cmp = app.add_subcommand("compare", "Column-wise differences between two run directories");
    cmp->add_option("a", cmp_a, "First run directory")->required();
    cmp->add_option("b", cmp_b, "Second run directory")->required();

    if (argc > 1 && argv[1][0] != '-') {
        const std::string verb = argv[1];
        bool known = false;
        for (const auto* sub : app.get_subcommands({})) {
            known = known || sub->get_name() == verb;
        }
        if (!known) {
            err << "usage error at /command: unknown verb '" << verb << "'\n";
            return kExitUsage;
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        // ---- coeffs
        if (coeffs->parsed()) {
            if (*k_opt) {
                if (k_flag < 1) {
                    throw UsageError("/parameters/k", "k must be >= 1");
                }
                co.k = k_flag;
            }
            if (!co.k && !co.table) {
                throw UsageError("/parameters", "coeffs needs --k <k> or --table");
            }
            if (co.table && co.kmax < 1) {
                throw UsageError("/parameters/kmax", "kmax must be >= 1");
            }
            if (co.k && !co.table) {
                out << coeff_record_json(coeff_record(*co.k)).dump(2) << "\n";
                return kExitOk;
            }
            RunConfig cfg;
            cfg.command = "coeffs";
            cfg.parameters = json{{"table", true}, {"kmax", co.kmax}};
            const RunRecord rec = run_coeffs_table(co, cfg);
            return detail::finish_run(rec, as_json, out);
        }

        // ---- verify-bounds
        if (bounds->parsed()) {
            if (bo.kmax < 1) {
                throw UsageError("/parameters/kmax", "kmax must be >= 1");
            }
            const BoundsCertificate cert = certify_bounds(bo.kmax);
            const json cj = certificate_json(cert);
            if (bo.out.empty()) {
                out << cj.dump(2) << "\n";
                return cert.verified ? kExitOk : kExitVerdict;
            }
            RunRecord rec = detail::start_record("verify-bounds", json{{"kmax", bo.kmax}}, bo.out);
            RunWriter w(bo.out);
            io::CsvWriter summary({"k_min", "k_max", "failures"});
            summary.row({static_cast<double>(cert.k_min), static_cast<double>(cert.k_max),
                         static_cast<double>(cert.failures.size())});
            w.write("certificate.csv", summary.str());
            io::CsvWriter fails({"k"});
            for (auto k : cert.failures) {
                fails.row({static_cast<double>(k)});
            }
            w.write("failures.csv", fails.str());
            w.write("certificate.json", cj.dump(2) + "\n");
            io::Table t;
            t.header = {"k_min", "k_max", "failures"};
            t.rows.push_back({std::to_string(cert.k_min), std::to_string(cert.k_max),
                              std::to_string(cert.failures.size())});
            rec.verdicts = bounds_verdicts(t);
            w.finish(rec);
            if (!as_json) {
                out << cj.dump(2) << "\n";
            }
            return detail::finish_run(rec, as_json, out);
        }

        // ---- evolve-linear
        if (lin->parsed()) {
            require_positive(lo.T, "T");
            require_positive(lo.dt, "dt");
            require_step_multiple(lo.T, lo.dt, "T");
            if (lo.sample_every < 1) {
                throw UsageError("/parameters/sample_every", "must be >= 1");
            }
            if (lo.snapshot_every < 0) {
                throw UsageError("/parameters/snapshot_every", "must be >= 0");
            }
            InitialDataSpec spec;
            spec.amplitudes[1] = 1.0;
            if (!lo.init.empty()) {
                spec = parse_init_spec(load_json(lo.init, "/init"));
            }
            const TildeSeries eta0 = checked_initial_data(spec);
            std::size_t active = 0;
            for (std::size_t i = 0; i < eta0.size(); ++i) {
                if (eta0.coeffs[i] != 0.0) {
                    active = i + 1;
                }
            }
            if (active == 0) {
                throw UsageError("/init/amplitudes", "initial data must be nonzero");
            }
            if (lo.N < static_cast<long>(active) + 4) {
                throw UsageError("/parameters/N", "N must be at least the highest active index + 4");
            }
            LinearRunOptions opt;
            opt.T = lo.T;
            opt.dt = lo.dt;
            opt.N = static_cast<std::size_t>(lo.N);
            opt.sample_every = static_cast<std::size_t>(lo.sample_every);
            opt.snapshot_every = static_cast<std::size_t>(lo.snapshot_every);

            const fs::path dir = resolve_out_dir(lo.out, "evolve-linear");
            RunRecord rec = detail::start_record("evolve-linear",
                                                 json{{"init", init_spec_json(spec)},
                                                      {"T", lo.T},
                                                      {"dt", lo.dt},
                                                      {"N", lo.N},
                                                      {"sample_every", lo.sample_every},
                                                      {"snapshot_every", lo.snapshot_every}},
                                                 dir);
            const TrajectoryRecord tr = evolve_linear(eta0, opt);
            RunWriter w(dir);
            const std::string traj = linear_trajectory_csv(tr);
            w.write("trajectory.csv", traj);
            io::CsvWriter idx({"snapshot", "time"});
            for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "states/%04zu.csv", i);
                w.write(name, io::series_csv(tr.snapshots[i]));
                idx.row({static_cast<double>(i), tr.snapshot_times[i]});
            }
            if (!tr.snapshots.empty()) {
                w.write("states/index.csv", idx.str());
            }
            std::vector<PlotSeries> plots = {{"energy", "time", "energy", tr.times, tr.energy},
                                             {"j1", "time", "j1", tr.times, tr.j1},
                                             {"j2", "time", "j2", tr.times, tr.j2},
                                             {"rayleigh", "time", "rayleigh", tr.times, tr.rayleigh},
                                             {"tail_flux", "time", "tail_flux", tr.times, tr.tail_flux}};
            emit_plot_data(w, plots, lo.svg, err);
            io::Table t;
            {
                std::istringstream ss(traj);
                std::string line;
                std::getline(ss, line);
                t.header = io::split_line(line);
                while (std::getline(ss, line)) {
                    t.rows.push_back(io::split_line(line));
                }
            }
            rec.verdicts = linear_verdicts_from_table(t, eta0, tr.guard_tripped);
            w.finish(rec);
            return detail::finish_run(rec, as_json, out);
        }

        // ---- evolve-nonlinear
        if (nl->parsed()) {
            require_positive(nl_T, "T");
            SolverConfig cfg;
            if (!nl_config.empty()) {
                cfg = parse_solver_config(load_json(nl_config, "/config"));
            }
            const InitialDataSpec spec = parse_init_spec(load_json(nl_init, "/init"));
            const TildeSeries eta0 = checked_initial_data(spec);
            if (eta0.size() > cfg.tilde_size()) {
                throw UsageError("/init/amplitudes", "indices exceed modes - 2");
            }
            require_step_multiple(nl_T, cfg.dt, "T");
            const fs::path dir = resolve_out_dir(nl_out, "evolve-nonlinear");
            RunRecord rec = detail::start_record(
                "evolve-nonlinear",
                json{{"config", solver_config_json(cfg)}, {"init", init_spec_json(spec)}, {"T", nl_T}}, dir);
            const NonlinearState s0 = cfg.formulation == Formulation::Perturbation
                                          ? NonlinearState::perturbation(eta0)
                                          : NonlinearState::vorticity_from_tilde(eta0, cfg.modes);
            const NonlinearRun run = evolve_nonlinear(s0, cfg, nl_T);
            RunWriter w(dir);
            w.write("trajectory.csv", nonlinear_trajectory_csv(run));
            if (run.final_state.formulation == Formulation::Perturbation) {
                w.write("final_state.csv", io::series_csv(run.final_state.eta));
            } else {
                w.write("final_state.csv", io::series_csv(run.final_state.omega));
            }
            emit_plot_data(w, nonlinear_plots(run), nl_svg, err);
            rec.verdicts.push_back({"run_completed", !run.guard_tripped, run.guard_tripped ? 1.0 : 0.0, 0.0,
                                    run.guard_tripped ? run.guard_reason : "reached T"});
            ExperimentReport rep;
            rep.label = "evolve";
            rep.config = cfg;
            rep.T = nl_T;
            rep.verdicts = rec.verdicts;
            json rj = report_json(rep);
            rj["guard_tripped"] = run.guard_tripped;
            rj["guard_reason"] = run.guard_reason;
            rj["final_time"] = run.final_state.t;
            w.write("report.json", rj.dump(2) + "\n");
            w.finish(rec);
            return detail::finish_run(rec, as_json, out);
        }

        // ---- experiment
        if (exp->parsed()) {
            SolverConfig cfg;
            if (!ex_config.empty()) {
                cfg = parse_solver_config(load_json(ex_config, "/config"));
            }
            if (stab->parsed()) {
                if (stab->count("--M")) cfg.M = st_M;
                if (stab->count("--retained")) cfg.modes = st_retained;
                if (stab->count("--dt")) cfg.dt = st_dt;
                cfg.formulation = Formulation::Perturbation;
                try {
                    cfg.validate();
                } catch (const std::invalid_argument& e) {
                    throw UsageError("/parameters", e.what());
                }
                require_positive(st_T, "T");
                require_step_multiple(st_T, cfg.dt, "T");
                if (st_amp == 0.0 || !std::isfinite(st_amp)) {
                    throw UsageError("/parameters/amplitude", "amplitude must be nonzero (zero data)");
                }
                std::set<long> modes;
                for (long k : st_modes) {
                    if (k < 2 || k % 2 != 0) {
                        throw UsageError("/parameters/modes", "modes must be even indices >= 2");
                    }
                    if (k > static_cast<long>(cfg.tilde_size())) {
                        throw UsageError("/parameters/modes", "index exceeds the tilde truncation");
                    }
                    modes.insert(k);
                }
                const fs::path dir = resolve_out_dir(ex_out, "experiment-stability");
                RunRecord rec = detail::start_record("experiment",
                                                     json{{"experiment", "stability"},
                                                          {"amplitude", st_amp},
                                                          {"modes", std::vector<long>(modes.begin(), modes.end())},
                                                          {"T", st_T},
                                                          {"config", solver_config_json(cfg)}},
                                                     dir);
                const ExperimentReport rep = stability_experiment(st_amp, modes, st_T, cfg);
                RunWriter w(dir);
                const std::string traj = nonlinear_trajectory_csv(rep.run);
                w.write("trajectory.csv", traj);
                auto plots = nonlinear_plots(rep.run);
                PlotSeries bound{"decay_bound", "time", "bound", {}, {}};
                const double n0 = rep.run.samples.empty() ? 0.0 : rep.run.samples.front().diag.hdw_norm;
                for (const auto& s : rep.run.samples) {
                    bound.x.push_back(s.t);
                    bound.y.push_back(kStabilityConstant * n0 * std::exp(kStabilityRate * s.t));
                }
                plots.push_back(bound);
                emit_plot_data(w, plots, ex_svg, err);
                w.write("report.json", report_json(rep).dump(2) + "\n");
                rec.verdicts = rep.verdicts;
                w.finish(rec);
                return detail::finish_run(rec, as_json, out);
            }
            if (inst->parsed()) {
                cfg.formulation = Formulation::Perturbation;
                InitialDataSpec spec = window_two_mode(1.0, 2);
                if (!ex_init.empty()) {
                    spec = parse_init_spec(load_json(ex_init, "/init"));
                }
                const TildeSeries eta0 = checked_initial_data(spec);
                try {
                    require_instability_hypothesis(eta0);
                } catch (const std::exception& e) {
                    throw UsageError("/init", e.what());
                }
                for (double e : in_eps) {
                    require_positive(e, "eps");
                }
                require_positive(in_opt.K, "K");
                require_positive(in_opt.horizon, "horizon");
                require_step_multiple(in_opt.horizon, cfg.dt, "horizon");
                require_positive(in_opt.cross_check_epsilon, "cross_eps");
                const fs::path dir = resolve_out_dir(ex_out, "experiment-instability");
                RunRecord rec = detail::start_record("experiment",
                                                     json{{"experiment", "instability"},
                                                          {"eps", in_eps},
                                                          {"K", in_opt.K},
                                                          {"horizon", in_opt.horizon},
                                                          {"cross_eps", in_opt.cross_check_epsilon},
                                                          {"init", init_spec_json(spec)},
                                                          {"config", solver_config_json(cfg)}},
                                                     dir);
                const ExperimentReport rep = instability_experiment(in_eps, spec, cfg, in_opt);
                RunWriter w(dir);
                io::CsvWriter cross({"epsilon", "K", "crossed", "crossing_time", "final_ratio", "guard_tripped"});
                io::CsvWriter ratios({"epsilon", "time", "ratio"});
                std::vector<PlotSeries> plots;
                for (const auto& e : rep.eps) {
                    cross.row({e.epsilon, in_opt.K, e.crossed ? 1.0 : 0.0, e.crossing_time, e.final_ratio,
                               e.guard_tripped ? 1.0 : 0.0});
                    char tag[32];
                    std::snprintf(tag, sizeof tag, "ratio_eps_%g", e.epsilon);
                    plots.push_back({tag, "time", "ratio", e.times, e.ratio});
                    for (std::size_t i = 0; i < e.times.size(); ++i) {
                        ratios.row({e.epsilon, e.times[i], e.ratio[i]});
                    }
                }
                io::CsvWriter check({"time", "ratio_nonlinear", "ratio_linear", "ratio_envelope"});
                const auto& cc = rep.cross_check;
                for (std::size_t i = 0; i < cc.times.size(); ++i) {
                    check.row({cc.times[i], cc.ratio_nonlinear[i], cc.ratio_linear[i], cc.ratio_envelope[i]});
                }
                plots.push_back({"cross_check_nonlinear", "time", "ratio", cc.times, cc.ratio_nonlinear});
                plots.push_back({"cross_check_linear", "time", "ratio", cc.times, cc.ratio_linear});
                w.write("crossings.csv", cross.str());
                w.write("ratios.csv", ratios.str());
                w.write("cross_check.csv", check.str());
                emit_plot_data(w, plots, ex_svg, err);
                w.write("report.json", report_json(rep).dump(2) + "\n");
                rec.verdicts = rep.verdicts;
                w.finish(rec);
                return detail::finish_run(rec, as_json, out);
            }
        }

        // ---- verify
        if (verify->parsed()) {
            if (vf_samples < 1) {
                throw UsageError("/parameters/samples", "must be >= 1");
            }
            const fs::path dir = resolve_out_dir(vf_out, "verify");
            RunRecord rec = detail::start_record("verify", json{{"cross_check", true}, {"samples", vf_samples}}, dir,
                                                 vf_seed);
            const auto vals = cross_check_values(vf_samples, static_cast<std::uint64_t>(vf_seed));
            RunWriter w(dir);
            io::CsvWriter csv({"check", "case", "value"});
            io::Table t;
            t.header = {"check", "case", "value"};
            for (const auto& v : vals) {
                csv.raw_row({v.check, std::to_string(v.index), io::format_double(v.value)});
                t.rows.push_back({v.check, std::to_string(v.index), io::format_double(v.value)});
            }
            w.write("cross_check.csv", csv.str());
            rec.verdicts = cross_check_verdicts(t);
            w.finish(rec);
            return detail::finish_run(rec, as_json, out);
        }

        // ---- compare
        if (cmp->parsed()) {
            const CompareReport rep = compare_runs(cmp_a, cmp_b);
            out << rep.to_json().dump(2) << "\n";
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "usage error at " << e.path() << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    err << app.help();
    return kExitUsage;
}

} // namespace dglab::cli
