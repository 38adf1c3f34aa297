// phasetunnel: command-line front end.
//
// Exit codes: 0 success, 1 a check failed, 2 usage or input error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <locale>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phasetunnel/config.hpp"
#include "phasetunnel/errors.hpp"
#include "phasetunnel/instanton.hpp"
#include "phasetunnel/spectral.hpp"
#include "phasetunnel/transform.hpp"
#include "phasetunnel/verify.hpp"
#include "phasetunnel/weber.hpp"
#include "phasetunnel/width_fit.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace phasetunnel;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

struct Context {
    RunConfig config;
    std::string output_file;
    fs::path cache_dir;
};

fs::path cache_dir_from_env() {
    if (const char* env = std::getenv("PHASETUNNEL_CACHE_DIR"); env && *env) return env;
    return "phasetunnel-cache";
}

// Writes `text` to stdout and, when configured, to the output file.
void emit(const Context& ctx, const std::string& text) {
    std::cout << text;
    if (!ctx.output_file.empty()) {
        std::ofstream out(ctx.output_file);
        if (!out) throw InputError("cannot write output file '" + ctx.output_file + "'");
        out << text;
    }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json complex_json(cd z) { return json::array({z.real(), z.imag()}); }

json vector_json(const VecR& v) {
    json a = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
    return a;
}

json report_json(const VerifyReport& rep) {
    json checks = json::array();
    for (const CheckResult& c : rep.checks) {
        json j;
        j["name"] = c.name;
        j["passed"] = c.passed;
        j["mandatory"] = c.mandatory;
        j["measured"] = std::isfinite(c.measured) ? json(c.measured) : json(nullptr);
        j["threshold"] = c.threshold;
        j["seconds"] = c.seconds;
        if (!c.detail.empty()) j["detail"] = c.detail;
        checks.push_back(j);
    }
    json j;
    j["fingerprint"] = rep.fingerprint;
    j["passed"] = rep.passed();
    j["checks"] = checks;
    return j;
}

GridPolicy policy_of(const RunConfig& c) {
    GridPolicy p;
    p.n1_half_width = c.n1_half_width;
    p.n1_max_points = c.n1_max_points;
    p.n2_half_width = c.n2_half_width;
    p.n2_points = c.n2_points;
    p.stencil_order = c.stencil_order;
    return p;
}

// Scan window used when the config lists no h values: 2S/h in [4, 10] for
// n = 1, the coarse n = 2 window otherwise.
std::vector<double> default_h_list(const Model& model) {
    if (model.params.n == 2) return {1e-3, 9e-4, 8e-4, 7e-4, 6e-4};
    const EikonalField field(model);
    const double s = geometric_action(field).S;
    std::vector<double> h;
    for (int k = 4; k <= 10; ++k) h.push_back(2.0 * s / k);
    return h;
}

fs::path scan_cache_path(const Context& ctx) {
    if (!ctx.config.cache_file.empty()) return ctx.config.cache_file;
    return ctx.cache_dir / ("scan_n" + std::to_string(ctx.config.params.n) + ".csv");
}

fs::path action_cache_path(const Context& ctx) {
    return ctx.cache_dir / ("action_n" + std::to_string(ctx.config.params.n) + ".json");
}

std::vector<ScanSample> load_scan(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read scan cache '" + path.string() + "'");
    return read_scan_csv(in);
}

// --- subcommands -----------------------------------------------------------

int run_action(const Context& ctx, bool both) {
    const Model model = ctx.config.model();
    EikonalOptions eo;
    eo.eikonal_tol = ctx.config.tol_eikonal;
    const EikonalField field(model, eo);
    CorrespondenceOptions co;
    co.tol = ctx.config.tol_pair;
    const CorrespondencePair pair = find_correspondence_pair(field, co);
    const ActionResult act = action(build_broken_path(field, pair));

    json j;
    j["fingerprint"] = ctx.config.fingerprint();
    j["n"] = model.params.n;
    j["mu"] = model.params.mu;
    j["tau"] = model.params.tau;
    j["x_plus"] = vector_json(pair.x_plus);
    j["eta"] = pair.eta;
    j["t_corr"] = complex_json(pair.t_corr);
    j["loop_imag"] = act.loop_imag;
    j["S"] = act.S;
    j["per_segment_imag"] = json::array({act.per_segment[0].imag(), act.per_segment[1].imag(),
                                         act.per_segment[2].imag()});
    if (model.potential.family == PotentialFamily::RadialGaussianWell)
        j["S_radial_oracle"] = action_radial_oracle(model).S;
    bool ok = true;
    if (both) {
        const TransformedPhases phases(field);
        const CausticResult cr = phases.caustic_and_S();
        const double gap = std::abs(cr.S_mu - act.S) / act.S;
        j["S_geometry"] = act.S;
        j["S_transform"] = cr.S_mu;
        j["y_prime_mu"] = vector_json(cr.y_prime_mu);
        j["relative_gap"] = gap;
        ok = gap <= 1e-4;
    }
    fs::create_directories(ctx.cache_dir);
    std::ofstream(action_cache_path(ctx)) << dump(j);
    emit(ctx, dump(j));
    return ok ? kOk : kCheckFailed;
}

int run_transform_check(const Context& ctx) {
    const Model model = ctx.config.model();
    const EikonalField field(model);
    const TransformedPhases phases(field);
    VerifyReport rep = transform_battery(phases);
    rep.fingerprint = ctx.config.fingerprint();
    emit(ctx, dump(report_json(rep)));
    return rep.passed() ? kOk : kCheckFailed;
}

int run_weber(const Context& ctx, double epsilon, int k_max, double z_min, double z_max, double tol) {
    const WeberEval ev = weber_family(epsilon, k_max, z_min, z_max, tol);
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17);
    os << "# fingerprint=" << ctx.config.fingerprint() << "\n# epsilon=" << epsilon << " tol=" << tol;
    for (int k = 0; k <= k_max; ++k) os << " residual_" << k << "=" << ev.residuals[k];
    os << "\nz";
    for (int k = 0; k <= k_max; ++k) os << ",Y" << k;
    for (int k = 0; k <= k_max; ++k) os << ",dY" << k;
    os << "\n";
    for (std::size_t i = 0; i < ev.z_grid.size(); ++i) {
        os << ev.z_grid[i];
        for (int k = 0; k <= k_max; ++k) os << "," << ev.values[k][i];
        for (int k = 0; k <= k_max; ++k) os << "," << ev.derivatives[k][i];
        os << "\n";
    }
    emit(ctx, os.str());
    for (double r : ev.residuals)
        if (!(r <= tol)) return kCheckFailed;
    return kOk;
}

int run_resonance(const Context& ctx, std::optional<double> h, std::optional<double> theta,
                  std::optional<int> points, std::optional<double> half_width, std::optional<double> c,
                  bool iterative) {
    Model model = ctx.config.model();
    if (h) model.params.planck_h = *h;
    if (c) model.params.coupling_c = *c;
    const double hh = model.params.planck_h;
    GridSpec grid = grid_policy(model, hh, policy_of(ctx.config));
    if (points) grid.points = *points;
    if (half_width) grid.half_width = *half_width;
    const double th = theta.value_or(ctx.config.theta > 0.0 ? ctx.config.theta : default_theta(hh));
    ResonanceOptions ro;
    ro.tol = ctx.config.tol_resonance;
    if (iterative) ro.solver = LinearSolverKind::Iterative;
    const ResonanceResult r = compute_resonance(model, grid, th, std::nullopt, ctx.config.level, ro);
    AcceptanceRule rule;
    rule.max_residual = ctx.config.tol_residual;
    rule.drift_fraction = ctx.config.tol_drift;
    std::string why;
    const bool accepted = accept_sample(r, rule, &why);

    json j;
    j["fingerprint"] = ctx.config.fingerprint();
    j["h"] = hh;
    j["c"] = model.params.coupling_c;
    j["n"] = grid.n;
    j["N"] = grid.points;
    j["L"] = grid.half_width;
    j["rho"] = complex_json(r.rho);
    j["eigvec_residual"] = r.eigvec_residual;
    j["theta_used"] = r.theta_used;
    j["theta_drift"] = r.theta_drift;
    j["iterations"] = r.iterations;
    j["boundary_decay"] = boundary_decay(model, grid, hh);
    j["accepted"] = accepted;
    if (!accepted) j["rejected_by"] = why;
    emit(ctx, dump(j));
    return accepted ? kOk : kCheckFailed;
}

int run_scan(const Context& ctx, int workers) {
    const Model model = ctx.config.model();
    if (model.params.coupling_c == 0.0) throw InputError("scan requires a non-zero coupling c");
    const std::vector<double> h_list = ctx.config.h_list.empty() ? default_h_list(model) : ctx.config.h_list;
    ScanOptions opt;
    opt.workers = workers > 0 ? workers : ctx.config.workers;
    opt.level = ctx.config.level;
    opt.cache_path = scan_cache_path(ctx).string();
    opt.fingerprint = ctx.config.fingerprint();
    opt.resonance.tol = ctx.config.tol_resonance;
    opt.rule.max_residual = ctx.config.tol_residual;
    opt.rule.drift_fraction = ctx.config.tol_drift;
    const GridPolicy policy = policy_of(ctx.config);
    opt.policy = [policy](const Model& m, double h) { return grid_policy(m, h, policy); };
    fs::create_directories(fs::path(opt.cache_path).parent_path().empty() ? fs::path(".")
                                                                          : fs::path(opt.cache_path).parent_path());
    const std::vector<ScanSample> samples = width_scan(model, h_list, opt);

    json rows = json::array();
    int accepted = 0;
    for (const ScanSample& s : samples) {
        json r;
        r["h"] = s.h;
        r["N"] = s.grid.points;
        r["L"] = s.grid.half_width;
        r["ok"] = s.ok;
        r["accepted"] = s.accepted;
        if (s.ok) {
            r["rho"] = complex_json(s.result.rho);
            r["residual"] = s.result.eigvec_residual;
            r["theta_drift"] = s.result.theta_drift;
        }
        accepted += s.accepted ? 1 : 0;
        rows.push_back(r);
    }
    json j;
    j["fingerprint"] = ctx.config.fingerprint();
    j["cache"] = opt.cache_path;
    j["samples"] = rows;
    j["accepted"] = accepted;
    emit(ctx, dump(j));
    return accepted == static_cast<int>(samples.size()) ? kOk : kCheckFailed;
}

json fit_json(const WidthFit& f) {
    json j;
    j["samples_used"] = f.samples.size();
    j["samples_excluded"] = f.excluded;
    j["S_fit"] = f.S_fit;
    j["S_stderr"] = f.S_stderr;
    j["q"] = f.prefactor_exponent;
    j["q_stderr"] = std::isfinite(f.q_stderr) ? json(f.q_stderr) : json(nullptr);
    j["exp_b"] = std::exp(f.log_f00);
    j["residual_rms"] = f.residual_rms;
    j["S_constrained"] = f.S_constrained;
    j["exp_b_constrained"] = std::exp(f.log_f00_constrained);
    return j;
}

int run_fit(const Context& ctx, const std::string& cache, const std::string& synthetic_out) {
    if (!synthetic_out.empty()) {
        // Im rho = -h^{3/2} 0.7 exp(-2 * 0.05 / h), noise free.
        std::vector<ScanSample> rows;
        for (int k = 0; k <= 15; ++k) {
            ScanSample s;
            s.h = 0.025 - 0.001 * k;
            s.ok = s.accepted = true;
            s.grid.n = 1;
            s.result.rho = cd(s.h, -std::pow(s.h, 1.5) * 0.7 * std::exp(-0.1 / s.h));
            s.note = "synthetic";
            rows.push_back(s);
        }
        std::ofstream out(synthetic_out);
        if (!out) throw InputError("cannot write '" + synthetic_out + "'");
        write_scan_csv(out, rows, ctx.config.fingerprint());
        return kOk;
    }
    const fs::path path = cache.empty() ? scan_cache_path(ctx) : fs::path(cache);
    const WidthFit f = fit_width(accepted_samples(load_scan(path)));
    json j;
    j["fingerprint"] = ctx.config.fingerprint();
    j["cache"] = path.string();
    j["fit"] = fit_json(f);
    emit(ctx, dump(j));
    return kOk;
}

int run_verify_cmd(const Context& ctx) {
    const VerifyReport rep = run_verify(ctx.config);
    emit(ctx, dump(report_json(rep)));
    return rep.passed() ? kOk : kCheckFailed;
}

int run_report(const Context& ctx, const std::string& cache, const std::string& plot_csv) {
    const fs::path path = cache.empty() ? scan_cache_path(ctx) : fs::path(cache);
    std::vector<ScanSample> rows;
    if (fs::exists(path)) rows = load_scan(path);
    if (rows.empty()) throw InputError("report: scan cache '" + path.string() + "' is empty or missing");

    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << "phasetunnel report\n";
    os << "config fingerprint " << ctx.config.fingerprint() << "\n";
    os << "scan cache " << path.string() << "\n\n";
    os << std::left << std::setw(12) << "h" << std::setw(26) << "Re rho" << std::setw(26) << "Im rho"
       << std::setw(12) << "residual" << "accepted\n";
    for (const ScanSample& s : rows) {
        os << std::setprecision(6) << std::setw(12) << s.h << std::setprecision(17) << std::setw(26)
           << s.result.rho.real() << std::setw(26) << s.result.rho.imag() << std::setprecision(3)
           << std::setw(12) << s.result.eigvec_residual << (s.accepted ? "yes" : "no") << "\n";
    }
    os << std::setprecision(17) << "\n";
    try {
        const WidthFit f = fit_width(accepted_samples(rows));
        os << "fit over " << f.samples.size() << " samples (" << f.excluded << " excluded by the underflow guard)\n";
        os << "  S_fit           " << f.S_fit << "\n";
        os << "  q               " << f.prefactor_exponent << "\n";
        os << "  exp(b)          " << std::exp(f.log_f00) << "\n";
        os << "  residual rms    " << f.residual_rms << "\n";
        os << "  S (q = 3/2)     " << f.S_constrained << "\n";
        const fs::path apath = action_cache_path(ctx);
        if (fs::exists(apath)) {
            std::ifstream in(apath);
            const json a = json::parse(in);
            const double sg = a.at("S").get<double>();
            os << "  S geometric     " << sg << "\n";
            os << "  S_fit / S       " << f.S_fit / sg << "\n";
        } else {
            os << "  S geometric     (no action cache; run `phasetunnel action`)\n";
        }
    } catch (const InputError& e) {
        os << "fit unavailable: " << e.what() << "\n";
    }
    emit(ctx, os.str());

    const fs::path plot = plot_csv.empty() ? ctx.cache_dir / "report_plot.csv" : fs::path(plot_csv);
    if (!plot.parent_path().empty()) fs::create_directories(plot.parent_path());
    std::ofstream out(plot);
    out.imbue(std::locale::classic());
    out << std::setprecision(17) << "# fingerprint=" << ctx.config.fingerprint() << "\nh,minus_h_ln_abs_im_rho\n";
    for (const ScanSample& s : rows)
        if (s.accepted) out << s.h << "," << -s.h * std::log(std::abs(s.result.rho.imag())) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resonance widths of a two-level semiclassical tunnelling model"};
    app.require_subcommand(1);
    std::string config_path, output_path, cache_dir;
    app.add_option("--config", config_path, "Key-value configuration file");
    app.add_option("--output", output_path, "Also write results to this file");
    app.add_option("--cache-dir", cache_dir, "Cache directory (default $PHASETUNNEL_CACHE_DIR)");

    bool both = false;
    auto* action_cmd = app.add_subcommand("action", "Correspondence pair, broken path and S");
    action_cmd->add_flag("--both", both, "Also compute S in the transformed picture");

    app.add_subcommand("transform-check", "Invariant battery of the transformed phases");

    double epsilon = 1.0, z_min = 0.0, z_max = 6.0, wtol = 1e-10;
    int k_max = 0;
    std::vector<double> range;
    auto* weber_cmd = app.add_subcommand("weber", "Weber family table as CSV");
    weber_cmd->add_option("--epsilon", epsilon)->required();
    weber_cmd->add_option("--kmax", k_max)->check(CLI::NonNegativeNumber);
    weber_cmd->add_option("--range", range)->expected(2);
    weber_cmd->add_option("--tol", wtol);

    std::optional<double> r_h, r_theta, r_L, r_c;
    std::optional<int> r_N;
    bool iterative = false;
    auto* res_cmd = app.add_subcommand("resonance", "One resonance with its validation data");
    res_cmd->set_help_flag("--help", "Print this help message and exit");  // frees --h for the Planck constant
    res_cmd->add_option("--h", r_h);
    res_cmd->add_option("--theta", r_theta);
    res_cmd->add_option("--N", r_N);
    res_cmd->add_option("--L", r_L);
    res_cmd->add_option("--c", r_c);
    res_cmd->add_flag("--iterative", iterative, "BiCGSTAB + ILUT instead of direct LU");

    int workers = 0;
    auto* scan_cmd = app.add_subcommand("scan", "Resonances over the configured h list");
    scan_cmd->add_option("--workers", workers);

    std::string fit_cache, synthetic_out;
    auto* fit_cmd = app.add_subcommand("fit", "Width-law fit of a scan cache");
    fit_cmd->add_option("--cache", fit_cache, "Scan CSV (default: the configured cache)");
    fit_cmd->add_option("--write-synthetic", synthetic_out, "Write a synthetic cache and exit");

    app.add_subcommand("verify", "All invariant batteries");

    std::string report_cache, plot_csv;
    auto* report_cmd = app.add_subcommand("report", "Summary of the caches");
    report_cmd->add_option("--cache", report_cache);
    report_cmd->add_option("--plot-csv", plot_csv);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        Context ctx;
        ctx.config = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        ctx.config.validate();
        ctx.output_file = output_path.empty() ? ctx.config.output_file : output_path;
        ctx.cache_dir = cache_dir.empty() ? cache_dir_from_env() : fs::path(cache_dir);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "action") return run_action(ctx, both);
        if (cmd == "transform-check") return run_transform_check(ctx);
        if (cmd == "weber") {
            if (range.size() == 2) {
                z_min = range[0];
                z_max = range[1];
            }
            return run_weber(ctx, epsilon, k_max, z_min, z_max, wtol);
        }
        if (cmd == "resonance") return run_resonance(ctx, r_h, r_theta, r_N, r_L, r_c, iterative);
        if (cmd == "scan") return run_scan(ctx, workers);
        if (cmd == "fit") return run_fit(ctx, fit_cache, synthetic_out);
        if (cmd == "verify") return run_verify_cmd(ctx);
        if (cmd == "report") return run_report(ctx, report_cache, plot_csv);
        return kUsage;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const CacheError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what();
        if (e.best_residual() >= 0.0) std::cerr << " (best residual " << e.best_residual() << ")";
        std::cerr << "\n";
        return kCheckFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}
