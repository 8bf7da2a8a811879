// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "qrwave/cli.hpp"
#include "qrwave/errors.hpp"
#include "qrwave/experiments.hpp"
#include "qrwave/operators.hpp"
#include "qrwave/solvers.hpp"
#include "qrwave/util.hpp"

using namespace qrwave;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TerminalData random_terminal(const BasisPtr& b, double T, std::uint64_t seed, std::uint64_t stream) {
    auto rng = stream_rng(seed, stream);
    std::normal_distribution<double> n(0.0, 1.0);
    TerminalData td{SpectralField(b), SpectralField(b), T};
    for (std::size_t p = 0; p < b->size(); ++p) {
        const double w = 1.0 / static_cast<double>((p + 1) * (p + 1));
        td.f0[p] = w * n(rng);
        td.f1[p] = w * n(rng);
    }
    return td;
}

SweepConfig holder_sweep() {
    SweepConfig c;
    c.basis = build_basis(20.5 * std::numbers::pi, 102);
    c.truth.kind = TruthKind::gevrey_profile;
    c.truth.kappa = 1.0;
    c.truth.power = 2.0;
    c.truth.velocity = TruthVelocity::decaying;
    c.T = 0.5;
    c.C1 = 1.0;
    c.eps_grid = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    c.times_of_interest = {0.0, 0.25, 0.45};
    c.seed = 1;
    return c;
}

Outcome conditional_estimates() {
    const auto t0 = std::chrono::steady_clock::now();
    auto basis = build_basis(std::numbers::pi, 64);
    bool ok = true;
    std::string detail;
    for (double gamma : {std::exp(4.0), std::exp(8.0), 1e3}) {
        auto cfg = RegConfig::with_gamma(gamma);
        auto q = verify_Q_bound(basis, 1000, cfg, 101);
        auto p = verify_P_bound(basis, 1000, cfg, 202);
        ok = ok && q.pass && p.pass;
        detail += "gamma=" + num(gamma) + " Q max_ratio=" + num(q.max_ratio) + (q.pass ? "" : "(fail)") +
                  " P max_ratio=" + num(p.max_ratio) + (p.pass ? "" : "(fail)") + "; ";
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 5.0;
    return {ok, detail + "runtime " + num(secs) + " s"};
}

Outcome operator_identity() {
    auto basis = build_basis(std::numbers::pi, 64);
    std::size_t worst_ulps = 0;
    bool disjoint = true;
    for (double gamma : {std::exp(4.0), std::exp(8.0), 1e3}) {
        auto cfg = RegConfig::with_gamma(gamma);
        for (std::uint64_t s = 0; s < 1000; ++s) {
            auto rng = stream_rng(303, s);
            std::normal_distribution<double> n(0.0, 1.0);
            std::vector<double> c(basis->size());
            for (double& x : c) x = n(rng);
            SpectralField h(basis, c);
            auto P = apply_P(h, cfg);
            auto rhs = apply_laplacian_doubled(h) + apply_Q(h, cfg);
            for (std::size_t p = 0; p < h.size(); ++p) {
                if (P[p] == rhs[p]) continue;
                const double scale = std::max(std::abs(P[p]), std::abs(rhs[p]));
                const double ulps = std::abs(P[p] - rhs[p]) / (std::numeric_limits<double>::epsilon() * scale);
                worst_ulps = std::max(worst_ulps, static_cast<std::size_t>(std::ceil(ulps)));
            }
            const SpectralField qp = apply_Q(apply_P(h, cfg), cfg);
            const SpectralField pq = apply_P(apply_Q(h, cfg), cfg);
            for (std::size_t p = 0; p < h.size(); ++p) disjoint = disjoint && qp[p] == 0.0 && pq[p] == 0.0;
        }
    }
    return {worst_ulps <= 4 && disjoint,
            "worst identity deviation " + std::to_string(worst_ulps) + " ulp, Q*P = P*Q = 0: " +
                (disjoint ? "yes" : "no")};
}

Outcome oracle_triangle() {
    const auto t0 = std::chrono::steady_clock::now();
    const double T = 0.5;
    auto basis = build_basis(std::numbers::pi, 16);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto times = uniform_grid(T, 201);
    auto td = random_terminal(basis, T, 404, 0);
    auto closed = regularized_backward_solve(td, cfg, times);
    auto stepped = galerkin_step_solve(td, cfg, cfg.rho, 1e-4, times);
    PicardOptions opt;
    opt.iterations = 200;
    opt.substeps = 128;
    auto picard = picard_solve(td, cfg, cfg.rho, 16, times, opt);
    const double a = relative_sup_distance(stepped, closed);
    const double b = relative_sup_distance(picard, closed);
    const double c = relative_sup_distance(picard, stepped);
    const double secs = seconds_since(t0);
    const bool ok = std::max({a, b, c}) <= 1e-6 && secs < 30.0;
    return {ok, "closed/rk4 " + num(a) + ", closed/picard " + num(b) + ", rk4/picard " + num(c) + ", runtime " +
                    num(secs) + " s"};
}

Outcome energy_estimate() {
    const double T = 0.5;
    auto basis = build_basis(std::numbers::pi, 16);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto times = uniform_grid(T, 201);
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto td = random_terminal(basis, T, 505, s);
        auto u = galerkin_step_solve(td, cfg, cfg.rho, 1e-4, times);
        auto e = energy_series(v_transform(u, cfg.rho, T, VDirection::to_v), cfg.rho);
        worst = std::max(worst, gronwall_ratio(e, cfg, cfg.rho, T));
    }
    return {cfg.rho >= 2.0 && worst <= 1.0 + 1e-6, "rho " + num(cfg.rho) + ", max E(t)/envelope " + num(worst)};
}

Outcome illposedness() {
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto r = illposedness_demo(std::numbers::pi, 3, 0.5, 1e-3, cfg);
    const bool ok = !r.overflow && r.relative_error <= 0.01 && r.regularized_high &&
                    r.regularized_amplification <= 2.0 * std::exp(0.5);
    return {ok, "naive " + num(r.amplification) + " vs e^4.5 " + num(r.predicted) + " (rel " + num(r.relative_error) +
                    "), regularized " + num(r.regularized_amplification) + " <= " + num(2.0 * std::exp(0.5))};
}

Outcome holder_envelope() {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = convergence_sweep(holder_sweep());
    const double secs = seconds_since(t0);
    double worst_spread = 0.0;
    double worst_slope = 0.0;
    std::string worst_cell;
    for (const auto& c : r.cells) {
        worst_spread = std::max(worst_spread, std::isfinite(c.spread) ? c.spread : INFINITY);
        const double dev = std::abs(c.fitted_slope - c.predicted_slope);
        if (!(dev <= worst_slope)) {
            worst_slope = std::isfinite(dev) ? dev : INFINITY;
            worst_cell = "t=" + num(c.t) + " metric " + std::to_string(c.metric) + " fitted " + num(c.fitted_slope) +
                         " predicted " + num(c.predicted_slope);
        }
    }
    const bool ok = r.skipped.empty() && r.eps_used.size() == 5 && worst_spread <= 50.0 && worst_slope <= 0.15 &&
                    secs < 60.0;
    return {ok, "max spread " + num(worst_spread) + " (<= 50), max slope deviation " + num(worst_slope) +
                    " (<= 0.15) at " + worst_cell + ", runtime " + num(secs) + " s"};
}

Outcome exact_recovery() {
    const double T = 0.5;
    auto basis = build_basis(std::numbers::pi, 16);
    auto times = uniform_grid(T, 201);
    TruthSpec spec;  // mu_max T = 8 keeps the backward continuation well conditioned
    spec.modes = {1, 2, 3, 4};
    spec.coeffs = {1.0, 0.25, 1.0 / 9, 1.0 / 16};
    auto truth = manufacture_truth(basis, spec, T, times);
    auto cfg = RegConfig::with_gamma(std::exp(200.0));            // cutoff 100
    auto rec = regularized_backward_solve(truth.terminal, cfg, times);
    double e_u = 0, e_ut = 0, e_g = 0, n_u = 0, n_ut = 0, n_g = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        e_u = std::max(e_u, norm_l2(rec.values[i] - truth.trajectory.values[i]));
        e_ut = std::max(e_ut, norm_l2(rec.dvalues[i] - truth.trajectory.dvalues[i]));
        e_g = std::max(e_g, norm_grad(rec.values[i] - truth.trajectory.values[i]));
        n_u = std::max(n_u, norm_l2(truth.trajectory.values[i]));
        n_ut = std::max(n_ut, norm_l2(truth.trajectory.dvalues[i]));
        n_g = std::max(n_g, norm_grad(truth.trajectory.values[i]));
    }
    const double ru = e_u / n_u, rut = e_ut / n_ut, rg = e_g / n_g;
    return {std::max({ru, rut, rg}) <= 1e-9, "relative u " + num(ru) + ", u_t " + num(rut) + ", grad u " + num(rg)};
}

Outcome weak_rate() {
    auto c = holder_sweep();
    auto r = weak_noise_experiment(c);
    double spread0 = INFINITY;
    std::string info;
    for (const auto& cell : r.cells) {
        if (cell.metric != 1) continue;
        if (cell.t == 0.0) spread0 = cell.spread;
        info += " t=" + num(cell.t) + ":" + num(cell.spread);
    }
    return {std::isfinite(spread0) && spread0 <= 50.0 && r.skipped.empty(),
            "spread of err_l2^2 (log gamma)^2 at t=0: " + num(spread0) + " (<= 50); per time" + info};
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "qrwave_acceptance_determinism";
    fs::remove_all(root);
    cli::RunConfig cfg;
    cfg.L = 20.5 * std::numbers::pi;
    cfg.n_modes = 102;
    cfg.truth.kind = TruthKind::gevrey_profile;
    cfg.truth.velocity = TruthVelocity::decaying;
    cfg.seed = 77;
    auto run = [&](const std::string& name, unsigned threads) {
        cfg.threads = threads;
        cli::cmd_sweep(cfg, {root / name, true});
        std::ifstream a(root / name / "sweep.csv", std::ios::binary), b(root / name / "sweep.json", std::ios::binary);
        std::stringstream ss;
        ss << a.rdbuf() << "\n--\n" << b.rdbuf();
        return ss.str();
    };
    const auto first = run("a", 1);
    const auto again = run("b", 1);
    const auto parallel = run("c", 4);
    fs::remove_all(root);
    const bool ok = !first.empty() && first == again && first == parallel;
    return {ok, std::string("rerun identical: ") + (first == again ? "yes" : "no") +
                    ", 1 vs 4 threads identical: " + (first == parallel ? "yes" : "no") + ", " +
                    std::to_string(first.size()) + " bytes"};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"conditional estimates (Q and P bounds)", conditional_estimates},
        {"operator identity P = 2 Delta + Q", operator_identity},
        {"oracle triangle closed-form / RK4 / Picard", oracle_triangle},
        {"energy envelope", energy_estimate},
        {"ill-posedness vs stability", illposedness},
        {"Hoelder-rate envelope", holder_envelope},
        {"exact recovery at eps = 0", exact_recovery},
        {"logarithmic-rate variant", weak_rate},
        {"sweep determinism", determinism},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("criterion %d %s: %s | %s\n", index, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
