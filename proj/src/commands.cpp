#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qrwave/cli.hpp"
#include "qrwave/errors.hpp"
#include "qrwave/util.hpp"

namespace qrwave::cli {

using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
}

void write_json(const std::filesystem::path& path, const json& doc) {
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::ostream& log_of(const CommandContext& ctx) {
    static std::ostringstream sink;
    sink.str("");
    return (ctx.log && !ctx.quiet) ? *ctx.log : sink;
}

std::ostream& err_of(const CommandContext& ctx) { return ctx.err ? *ctx.err : std::cerr; }

json assumptions_json(const AssumptionReport& r) {
    return {{"ok", r.ok()},
            {"horizon_3C1T_lt_2", r.horizon_ok},
            {"gamma_ge_e_2_over_C1", r.gamma_ok},
            {"gamma2_eps_le_K", r.noise_ok},
            {"violations", r.violations}};
}

json reg_json(const RegConfig& cfg) {
    return {{"eps", cfg.eps}, {"gamma", cfg.gamma}, {"cutoff", cfg.cutoff}, {"rho", cfg.rho},
            {"C0", cfg.C0},   {"C1", cfg.C1},       {"K", cfg.K}};
}

TerminalData random_terminal(const BasisPtr& basis, double T, std::uint64_t seed, std::uint64_t stream) {
    auto rng = stream_rng(seed, stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    TerminalData td{SpectralField(basis), SpectralField(basis), T};
    for (std::size_t p = 0; p < basis->size(); ++p) {
        const double w = 1.0 / static_cast<double>((p + 1) * (p + 1));
        td.f0[p] = w * normal(rng);
        td.f1[p] = w * normal(rng);
    }
    return td;
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    auto out = open_output(path);
    const std::size_t n = traj.basis->size();
    out << "t";
    for (std::size_t p = 1; p <= n; ++p) out << ",mode_" << p;
    for (std::size_t p = 1; p <= n; ++p) out << ",dmode_" << p;
    out << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << format_double(traj.times[i]);
        for (std::size_t p = 0; p < n; ++p) out << ',' << format_double(traj.values[i][p]);
        for (std::size_t p = 0; p < n; ++p) out << ',' << format_double(traj.dvalues[i][p]);
        out << '\n';
    }
    finish(out, path);
}

void write_errors_csv(const std::filesystem::path& path, const ErrorReport& r) {
    auto out = open_output(path);
    out << "t,err_l2,err_grad,err_dt,err_dtgrad_int\n";
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        out << format_double(r.times[i]) << ',' << format_double(r.err_l2[i]) << ',' << format_double(r.err_grad[i])
            << ',' << format_double(r.err_dt[i]) << ',' << format_double(r.err_dtgrad_int[i]) << '\n';
    }
    finish(out, path);
}

void write_sweep_csv(const std::filesystem::path& path, const SweepReport& report) {
    auto out = open_output(path);
    out << "eps,gamma,t,err_l2,bound1,ratio1,err_grad,bound2,ratio2,err_dt_plus_int,bound3,ratio3\n";
    for (const SweepRow& r : report.rows) {
        const double cols[] = {r.eps,    r.gamma,    r.t,      r.err_l2,          r.bound1, r.ratio1,
                               r.err_grad, r.bound2, r.ratio2, r.err_dt_plus_int, r.bound3, r.ratio3};
        for (std::size_t k = 0; k < std::size(cols); ++k) out << (k ? "," : "") << format_double(cols[k]);
        out << '\n';
    }
    finish(out, path);
}

int cmd_forward(const RunConfig& cfg, const CommandContext& ctx) {
    const BasisPtr basis = build_basis(cfg.L, cfg.n_modes);
    const auto times = uniform_grid(cfg.T, cfg.time_count);
    const Truth truth = manufacture_truth(basis, cfg.truth, cfg.T, times);
    const auto path = ctx.out_dir / "trajectory.csv";
    write_trajectory_csv(path, truth.trajectory);
    log_of(ctx) << "forward: wrote " << path.string() << '\n';
    return kOk;
}

int cmd_invert(const RunConfig& cfg, const CommandContext& ctx) {
    const BasisPtr basis = build_basis(cfg.L, cfg.n_modes);
    const auto times = uniform_grid(cfg.T, cfg.time_count);
    const Truth truth = manufacture_truth(basis, cfg.truth, cfg.T, times);
    const RegConfig reg = make_reg_config(cfg);

    TerminalData data = truth.terminal;
    double measured = 0.0;
    if (cfg.noise_enabled && cfg.noise_eps > 0.0) {
        const NoisyData noisy = add_noise(truth.terminal, {cfg.noise_eps, cfg.seed, cfg.noise_mode, 0});
        data = noisy.data;
        measured = noise_level(noisy.delta0, noisy.delta1, cfg.noise_mode);
    }
    const Trajectory rec = regularized_backward_solve(data, reg, times);
    const ErrorReport err = error_report(rec, truth.trajectory);
    const AssumptionReport check = check_assumptions(reg, cfg.T);

    json summary;
    summary["regularization"] = reg_json(reg);
    summary["noise"] = {{"enabled", cfg.noise_enabled && cfg.noise_eps > 0.0},
                        {"mode", cfg.noise_mode == NoiseMode::h1l2 ? "h1l2" : "l2only"},
                        {"measured", measured}};
    summary["assumptions"] = assumptions_json(check);
    std::size_t high = 0;
    for (double mu : basis->eigenvalues()) high += reg.is_high_mode(mu) ? 1 : 0;
    summary["modes_above_cutoff"] = high;
    double max_l2 = 0.0, max_grad = 0.0, max_dt = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        max_l2 = std::max(max_l2, err.err_l2[i]);
        max_grad = std::max(max_grad, err.err_grad[i]);
        max_dt = std::max(max_dt, err.err_dt[i]);
    }
    summary["max_errors"] = {{"err_l2", max_l2}, {"err_grad", max_grad}, {"err_dt", max_dt},
                             {"err_dtgrad_int", err.err_dtgrad_int.empty() ? 0.0 : err.err_dtgrad_int.front()}};
    if (check.ok()) {
        const double M = gevrey_bound_constant(truth.trajectory);
        const BoundShapes shapes = error_envelope(times, reg, cfg.T, M);
        double c1 = 0.0, c2 = 0.0, c3 = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            c1 = std::max(c1, err.err_l2[i] * err.err_l2[i] / shapes.shape1[i]);
            c2 = std::max(c2, err.err_grad[i] * err.err_grad[i] / shapes.shape2[i]);
            c3 = std::max(c3, (err.err_dt[i] * err.err_dt[i] + err.err_dtgrad_int[i]) / shapes.shape3[i]);
        }
        summary["M"] = M;
        summary["c_hat"] = {{"metric1", c1}, {"metric2", c2}, {"metric3", c3}};
    } else {
        summary["M"] = nullptr;
        summary["c_hat"] = nullptr;
        log_of(ctx) << "invert: assumptions not met, envelope constants omitted\n";
    }

    write_trajectory_csv(ctx.out_dir / "trajectory.csv", rec);
    write_errors_csv(ctx.out_dir / "errors.csv", err);
    write_json(ctx.out_dir / "invert.json", summary);
    log_of(ctx) << "invert: gamma " << format_double(reg.gamma) << ", max err_l2 " << format_double(max_l2)
                << ", outputs in " << ctx.out_dir.string() << '\n';
    return kOk;
}

int cmd_sweep(const RunConfig& cfg, const CommandContext& ctx) {
    const SweepReport report = convergence_sweep(make_sweep_config(cfg));
    json summary;
    summary["kind"] = report.kind == SweepKind::holder ? "holder" : "weak";
    summary["schedule"] = "gamma = eps^(-1/2)";
    summary["eps_used"] = report.eps_used;
    summary["skipped"] = report.skipped;
    summary["M"] = finite_or_null(report.M);
    json cells = json::array();
    for (const SweepCell& c : report.cells) {
        cells.push_back({{"t", c.t},
                         {"metric", c.metric},
                         {"fitted_slope", finite_or_null(c.fitted_slope)},
                         {"predicted_slope", finite_or_null(c.predicted_slope)},
                         {"c_hat", finite_or_null(c.c_hat)},
                         {"spread", finite_or_null(c.spread)}});
    }
    summary["cells"] = cells;
    write_sweep_csv(ctx.out_dir / "sweep.csv", report);
    write_json(ctx.out_dir / "sweep.json", summary);
    for (const auto& s : report.skipped) log_of(ctx) << "sweep: skipped " << s << '\n';
    log_of(ctx) << "sweep: " << report.eps_used.size() << " eps values, outputs in " << ctx.out_dir.string() << '\n';
    if (report.eps_used.empty()) {
        err_of(ctx) << "sweep: every eps violated the assumptions\n";
        return kAssumptionViolation;
    }
    return kOk;
}

int cmd_verify(const RunConfig& cfg, const CommandContext& ctx) {
    std::vector<std::string> bad_gamma;
    std::vector<double> all = cfg.verify.gammas;
    all.push_back(cfg.verify.oracle_gamma);
    for (double g : all) {
        if (g < std::exp(2.0 / cfg.C1) * (1.0 - 1e-12)) {
            bad_gamma.push_back("gamma = " + format_double(g) + " is below e^{2/C1}");
        }
    }
    if (!bad_gamma.empty()) {
        std::string msg = "verify:";
        for (const auto& b : bad_gamma) msg += " " + b + ";";
        throw AssumptionViolation(msg);
    }

    std::vector<std::string> failures;
    json doc;
    auto& out = log_of(ctx);

    const BasisPtr vbasis = build_basis(cfg.L, cfg.verify.n_modes);
    json q = json::array(), pj = json::array();
    for (std::size_t k = 0; k < cfg.verify.gammas.size(); ++k) {
        const RegConfig reg = RegConfig::with_gamma(cfg.verify.gammas[k], 0.0, cfg.C0, cfg.C1, cfg.K);
        const BoundReport qr = verify_Q_bound(vbasis, cfg.verify.samples, reg, cfg.seed + k, cfg.verify.sigma,
                                              cfg.verify.alpha, cfg.threads);
        const BoundReport pr = verify_P_bound(vbasis, cfg.verify.samples, reg, cfg.seed + 1000 + k, cfg.threads);
        q.push_back({{"gamma", reg.gamma}, {"max_ratio", qr.max_ratio}, {"pass", qr.pass}, {"rejected", qr.rejected}});
        pj.push_back({{"gamma", reg.gamma}, {"max_ratio", pr.max_ratio}, {"pass", pr.pass}});
        out << "Q-bound gamma=" << format_double(reg.gamma) << " max_ratio=" << format_double(qr.max_ratio)
            << (qr.pass ? " PASS" : " FAIL") << '\n';
        out << "P-bound gamma=" << format_double(reg.gamma) << " max_ratio=" << format_double(pr.max_ratio)
            << (pr.pass ? " PASS" : " FAIL") << '\n';
        if (!qr.pass) failures.push_back("Q-bound at gamma = " + format_double(reg.gamma));
        if (!pr.pass) failures.push_back("P-bound at gamma = " + format_double(reg.gamma));
    }
    doc["q_bound"] = q;
    doc["p_bound"] = pj;

    const RegConfig oreg = RegConfig::with_gamma(cfg.verify.oracle_gamma, 0.0, cfg.C0, cfg.C1, cfg.K);
    const BasisPtr obasis = build_basis(cfg.L, cfg.verify.oracle_modes);
    const auto times = uniform_grid(cfg.T, cfg.time_count);
    {
        const TerminalData td = random_terminal(obasis, cfg.T, cfg.seed, 0);
        json oracle;
        try {
            const Trajectory closed = regularized_backward_solve(td, oreg, times);
            const Trajectory stepped = galerkin_step_solve(td, oreg, oreg.rho, cfg.verify.dt, times);
            PicardOptions opt;
            opt.iterations = cfg.verify.picard_iterations;
            opt.substeps = cfg.verify.picard_substeps;
            const Trajectory picard = picard_solve(td, oreg, oreg.rho, obasis->size(), times, opt);
            const double d1 = relative_sup_distance(stepped, closed);
            const double d2 = relative_sup_distance(picard, closed);
            const double d3 = relative_sup_distance(picard, stepped);
            const double worst = std::max({d1, d2, d3});
            const bool pass = worst <= cfg.verify.oracle_tolerance;
            oracle = {{"closed_vs_rk4", d1}, {"closed_vs_picard", d2}, {"rk4_vs_picard", d3}, {"pass", pass}};
            out << "oracle-triangle worst=" << format_double(worst) << (pass ? " PASS" : " FAIL") << '\n';
            if (!pass) failures.push_back("oracle triangle (worst relative distance " + format_double(worst) + ")");
        } catch (const DivergenceError& e) {
            oracle = {{"pass", false}, {"error", e.what()}};
            out << "oracle-triangle FAIL " << e.what() << '\n';
            failures.push_back(std::string("oracle triangle: ") + e.what());
        }
        doc["oracle_triangle"] = oracle;
    }
    {
        double worst = 0.0;
        for (std::size_t s = 0; s < cfg.verify.energy_samples; ++s) {
            const TerminalData td = random_terminal(obasis, cfg.T, cfg.seed, 1 + s);
            const Trajectory u = regularized_backward_solve(td, oreg, times);
            const Trajectory v = v_transform(u, oreg.rho, cfg.T, VDirection::to_v);
            const auto energy = energy_series(v, oreg.rho);
            worst = std::max(worst, gronwall_ratio(energy, oreg, oreg.rho, cfg.T));
        }
        const bool pass = worst <= 1.0 + 1e-6;
        doc["energy_envelope"] = {{"max_ratio", worst}, {"samples", cfg.verify.energy_samples}, {"pass", pass}};
        out << "energy-envelope max_ratio=" << format_double(worst) << (pass ? " PASS" : " FAIL") << '\n';
        if (!pass) failures.push_back("energy envelope (ratio " + format_double(worst) + ")");
    }
    doc["failures"] = failures;
    doc["pass"] = failures.empty();
    write_json(ctx.out_dir / "verify.json", doc);
    for (const auto& f : failures) err_of(ctx) << "verify: FAILED " << f << '\n';
    return failures.empty() ? kOk : kVerificationFailure;
}

int cmd_demo_illposed(const RunConfig& cfg, const CommandContext& ctx) {
    const RegConfig reg = RegConfig::with_gamma(cfg.demo.gamma, 0.0, cfg.C0, cfg.C1, cfg.K);
    const IllposednessReport r = illposedness_demo(cfg.L, cfg.demo.mode, cfg.T, cfg.demo.eps, reg);
    const auto path = ctx.out_dir / "illposed.csv";
    auto out = open_output(path);
    out << "mode,mu,T,eps,overflow,amplification,predicted,relative_error,regularized_high,regularized_amplification\n";
    out << cfg.demo.mode << ',' << format_double(r.mu) << ',' << format_double(r.T) << ',' << format_double(r.eps)
        << ',' << (r.overflow ? 1 : 0) << ',' << format_double(r.amplification) << ',' << format_double(r.predicted)
        << ',' << format_double(r.relative_error) << ',' << (r.regularized_high ? 1 : 0) << ','
        << format_double(r.regularized_amplification) << '\n';
    finish(out, path);
    log_of(ctx) << "demo-illposed: " << r.message << "; regularized amplification "
                << format_double(r.regularized_amplification) << '\n';
    return kOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Regularized spectral solver for the backward strongly damped wave equation"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool quiet = false;

    struct Entry {
        const char* name;
        const char* help;
        int (*fn)(const RunConfig&, const CommandContext&);
    };
    const Entry entries[] = {
        {"forward", "forward solve of the manufactured truth", cmd_forward},
        {"invert", "noisy terminal data, regularized backward solve, error report", cmd_invert},
        {"sweep", "convergence sweep over the eps grid", cmd_sweep},
        {"verify", "operator bounds, oracle triangle and energy envelope", cmd_verify},
        {"demo-illposed", "naive vs regularized amplification of one mode", cmd_demo_illposed},
    };
    std::vector<CLI::Option*> seed_opts;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--out", out_dir, "output directory");
        seed_opts.push_back(sub->add_option("--seed", seed, "overrides run.seed"));
        sub->add_flag("--quiet", quiet, "suppress progress output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kConfigError;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (auto* opt : seed_opts) {
            if (opt->count() > 0) cfg.seed = seed;
        }
        CommandContext ctx{out_dir, quiet, &out, &err};
        for (const auto& e : entries) {
            if (app.got_subcommand(e.name)) return e.fn(cfg, ctx);
        }
        return kConfigError;
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        return kConfigError;
    } catch (const AssumptionViolation& e) {
        err << "assumption violation: " << e.what() << '\n';
        return kAssumptionViolation;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const DivergenceError& e) {
        err << "divergence: " << e.what() << '\n';
        return kVerificationFailure;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace qrwave::cli
