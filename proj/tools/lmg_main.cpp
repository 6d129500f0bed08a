// lmg_main.cpp — command line driver: one run configuration, one CSV artifact per subcommand
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <lmg/lmg.hpp>

namespace {

// ---- configuration assembly (defaults < config file < environment < --set flags) ----

struct CliArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path; // verbatim output path; empty means out_dir/<subcommand>.csv
};

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

lmg::RunConfig assemble_config(const CliArgs& args) {
    lmg::RunConfig cfg;
    if (!args.config_path.empty()) cfg = lmg::parse_config(read_text_file(args.config_path));
    if (const char* dir = std::getenv("LMG_OUT_DIR"); dir && *dir) cfg.out_dir = dir;
    if (const char* thr = std::getenv("LMG_THREADS"); thr && *thr) {
        try {
            cfg.threads = std::stoi(thr);
        } catch (const std::exception&) {
            throw std::invalid_argument("LMG_THREADS must be an integer, got '" +
                                        std::string(thr) + "'");
        }
    }
    lmg::apply_overrides(cfg, args.overrides); // re-validates even when empty
    return cfg;
}

std::string resolve_out_path(const CliArgs& args, const lmg::RunConfig& cfg,
                             const std::string& default_name) {
    if (!args.out_path.empty()) return args.out_path;
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / (default_name + ".csv")).string();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    return out;
}

// ---- deterministic work sharing for grid sweeps ----

int resolve_threads(const lmg::RunConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs body(i) for i in [0, n) on a thread pool.  Each index owns its output slot,
// so the assembled result does not depend on scheduling; the first exception wins
// and is rethrown on the caller thread.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

void report_written(const std::string& path, std::size_t rows) {
    std::cout << "wrote " << path << " (" << rows << " rows)\n";
}

// ---- subcommands ----

int run_spectrum(const CliArgs& args) {
    const lmg::RunConfig cfg = assemble_config(args);
    const auto sp = lmg::complex_spectrum(
        lmg::build_h_eff(lmg::build_spin_matrices(cfg.params.n_spins), cfg.params), cfg.params);
    const std::string path = resolve_out_path(args, cfg, "spectrum");
    std::ofstream out = open_out(path);
    lmg::CsvWriter csv(out, "spectrum", cfg,
                       {"index", "re_e", "im_e", "re_e_per_spin", "im_e_per_spin"});
    const double inv_n = 1.0 / static_cast<double>(cfg.params.n_spins);
    for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i) {
        const auto e = sp.eigenvalues[i];
        csv.row({static_cast<double>(i), e.real(), e.imag(), e.real() * inv_n,
                 e.imag() * inv_n});
    }
    report_written(path, sp.eigenvalues.size());
    return 0;
}

int run_dos(const CliArgs& args) {
    const lmg::RunConfig cfg = assemble_config(args);
    const auto sp = lmg::complex_spectrum(
        lmg::build_h_eff(lmg::build_spin_matrices(cfg.params.n_spins), cfg.params), cfg.params);
    const double bw = cfg.bin_width.value_or(lmg::default_bin_width(sp));
    const double eta = cfg.eta.value_or(lmg::default_eta(sp));
    const lmg::DosHistogram counting = lmg::dos_counting(sp, bw);
    const lmg::DosHistogram resolvent = lmg::dos_resolvent_binned(
        sp, counting.bin_centers.front() - 0.5 * bw, bw, counting.density.size(), eta);
    const std::string path = resolve_out_path(args, cfg, "dos");
    std::ofstream out = open_out(path);
    lmg::CsvWriter csv(out, "dos", cfg,
                       {"bin_center", "counting_density", "resolvent_density", "bin_width",
                        "eta"});
    for (std::size_t i = 0; i < counting.density.size(); ++i)
        csv.row({counting.bin_centers[i], counting.density[i], resolvent.density[i], bw, eta});
    report_written(path, counting.density.size());
    return 0;
}

int run_evolve(const CliArgs& args) {
    const lmg::RunConfig cfg = assemble_config(args);
    const lmg::SpinState start =
        cfg.initial ? *cfg.initial : lmg::near_fixed_point_state(cfg.params);
    const lmg::Trajectory traj = lmg::integrate_dde(cfg.params, start, cfg.t_max, cfg.dt);
    const std::string path = resolve_out_path(args, cfg, "evolve");
    std::ofstream out = open_out(path);
    lmg::CsvWriter csv(out, "evolve", cfg, {"t", "jx", "jy", "jz", "gamma_x", "sphere_drift"});
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const lmg::SpinState& s = traj.states[i];
        csv.row({traj.times[i], s.jx, s.jy, s.jz, traj.gamma_x[i], lmg::sphere_drift(s)});
    }
    report_written(path, traj.size());
    return 0;
}

int run_stability_map(const CliArgs& args) {
    const lmg::RunConfig cfg = assemble_config(args);
    const lmg::FixedPoint fp = lmg::broken_fixed_point(cfg.params);
    const std::vector<double> lambdas = cfg.lambda_grid();
    const std::vector<double> taus = cfg.tau_grid();
    const std::size_t n = lambdas.size() * taus.size();
    std::vector<std::complex<double>> roots(n);
    parallel_for(n, resolve_threads(cfg), [&](std::size_t i) {
        lmg::ModelParams q = cfg.params;
        q.lambda = lambdas[i / taus.size()];
        q.tau = taus[i % taus.size()];
        roots[i] = lmg::rightmost_root(lmg::linearize(fp, q));
    });
    const std::string path = resolve_out_path(args, cfg, "stability_map");
    std::ofstream out = open_out(path);
    lmg::CsvWriter csv(out, "stability-map", cfg,
                       {"lambda", "tau", "re_lambda_star", "im_lambda_star", "stable"});
    for (std::size_t i = 0; i < n; ++i)
        csv.row({lambdas[i / taus.size()], taus[i % taus.size()], roots[i].real(),
                 roots[i].imag(), roots[i].real() < 0.0 ? 1.0 : 0.0});
    report_written(path, n);
    return 0;
}

int run_boundaries(const CliArgs& args) {
    const lmg::RunConfig cfg = assemble_config(args);
    const auto pts = lmg::boundary_curves(cfg.params, cfg.lambda_grid(), cfg.z_max);
    const std::string path = resolve_out_path(args, cfg, "boundaries");
    std::ofstream out = open_out(path);
    lmg::CsvWriter csv(out, "boundaries", cfg,
                       {"lambda", "tau", "s", "z", "resid_im", "resid_re"});
    for (const auto& pt : pts)
        csv.row({pt.lambda, pt.tau, pt.s, static_cast<double>(pt.z), pt.resid_im, pt.resid_re});
    report_written(path, pts.size());
    return 0;
}

int run_esqpt(const CliArgs& args) {
    const lmg::RunConfig cfg = assemble_config(args);
    lmg::EsqptCurve curve;
    if (cfg.esqpt_source == "closed_orbit") {
        curve = lmg::closed_orbit_reference(cfg.params, cfg.energy_grid());
    } else if (cfg.esqpt_source == "feedback_sweep") {
        lmg::SweepOptions opt;
        opt.dt = cfg.dt;
        opt.settle_min = cfg.settle;
        opt.window_min = cfg.observe;
        const std::vector<double> taus = cfg.tau_grid();
        std::vector<lmg::EsqptCurve> parts(taus.size());
        parallel_for(taus.size(), resolve_threads(cfg), [&](std::size_t i) {
            parts[i] = lmg::esqpt_feedback_sweep(cfg.params, {taus[i]}, opt);
        });
        curve.source = lmg::EsqptSource::feedback_sweep;
        for (const auto& part : parts) {
            curve.control.push_back(part.control.front());
            curve.jz_bar.push_back(part.jz_bar.front());
            curve.jx2_bar.push_back(part.jx2_bar.front());
            curve.warn.push_back(part.warn.front());
        }
    } else {
        curve = lmg::chaotic_window_signal(cfg.params, cfg.delta_t, cfg.stride, cfg.settle,
                                           cfg.observe, cfg.dt);
    }
    const std::string path = resolve_out_path(args, cfg, "esqpt");
    std::ofstream out = open_out(path);
    lmg::CsvWriter csv(out, "esqpt", cfg, {"source", "control", "jz_bar", "jx2_bar", "warn"});
    for (std::size_t i = 0; i < curve.control.size(); ++i)
        csv.row({cfg.esqpt_source, lmg::csv_num(curve.control[i]), lmg::csv_num(curve.jz_bar[i]),
                 lmg::csv_num(curve.jx2_bar[i]), curve.warn[i] ? "1" : "0"});
    report_written(path, curve.control.size());
    return 0;
}

int run_bifurcation(const CliArgs& args) {
    const lmg::RunConfig cfg = assemble_config(args);
    lmg::BifurcationOptions opt;
    opt.dt = cfg.dt;
    opt.settle = cfg.settle;
    opt.observe = cfg.observe;
    const std::vector<double> taus = cfg.tau_grid();
    std::vector<lmg::BifurcationScan> parts(taus.size());
    parallel_for(taus.size(), resolve_threads(cfg), [&](std::size_t i) {
        parts[i] = lmg::bifurcation_scan(cfg.params, {taus[i]}, opt);
    });
    const std::string path = resolve_out_path(args, cfg, "bifurcation");
    std::ofstream out = open_out(path);
    lmg::CsvWriter csv(out, "bifurcation", cfg, {"tau", "value", "is_max"});
    std::size_t rows = 0;
    for (const auto& part : parts)
        for (const auto& pt : part.points) {
            csv.row({pt.tau, pt.value, pt.is_max ? 1.0 : 0.0});
            ++rows;
        }
    report_written(path, rows);
    return 0;
}

// ---- error reporting: one JSON line on stderr, exit 2 for bad input, 1 for runtime ----

int fail(const std::string& kind, const std::string& message, int code) {
    nlohmann::json j;
    j["error"] = message;
    j["kind"] = kind;
    std::cerr << j.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dissipative collective-spin toolkit: spectra, delayed feedback, stability"};
    app.require_subcommand(1);
    app.fallthrough();

    CliArgs args;
    app.add_option("--config", args.config_path, "flat key = value configuration file");
    app.add_option("--set", args.overrides, "override one config key, e.g. --set n_spins=200")
        ->take_all();
    app.add_option("--out", args.out_path, "output CSV path (default <out_dir>/<subcommand>.csv)");

    const struct {
        const char* name;
        const char* help;
        int (*run)(const CliArgs&);
    } commands[] = {
        {"spectrum", "complex eigenvalues of the effective Hamiltonian", run_spectrum},
        {"dos", "level density, counting histogram vs resolvent", run_dos},
        {"evolve", "integrate the delayed mean-field equations", run_evolve},
        {"stability-map", "rightmost characteristic exponent on the (lambda, tau) grid",
         run_stability_map},
        {"boundaries", "closed-form stability boundary curves in the (lambda, tau) plane",
         run_boundaries},
        {"esqpt", "time-averaged observables: sweep, closed orbits, or sliding windows",
         run_esqpt},
        {"bifurcation", "extrema census of the settled motion over the delay grid",
         run_bifurcation},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help);

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& c : commands)
            if (app.got_subcommand(c.name)) return c.run(args);
        return fail("usage", "no subcommand selected", 2);
    } catch (const lmg::ConfigError& e) {
        return fail("config", e.what(), 2);
    } catch (const std::invalid_argument& e) {
        return fail("config", e.what(), 2);
    } catch (const std::exception& e) {
        return fail("runtime", e.what(), 1);
    }
}
