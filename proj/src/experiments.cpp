#include "qrwave/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "qrwave/errors.hpp"
#include "qrwave/util.hpp"

namespace qrwave {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

}  // namespace

NoisyData add_noise(const TerminalData& td, const NoiseSpec& spec) {
    td.validate();
    if (!(spec.eps > 0.0 && spec.eps < 1.0)) throw std::invalid_argument("add_noise: eps must lie in (0, 1)");
    const BasisPtr& basis = td.f0.basis();
    auto rng = stream_rng(spec.seed, spec.stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z0(basis->size()), z1(basis->size());
    for (double& x : z0) x = normal(rng);
    for (double& x : z1) x = normal(rng);

    SpectralField d0(basis, std::move(z0));
    SpectralField d1(basis, std::move(z1));
    if (spec.mode == NoiseMode::l2only) d1 *= 0.0;
    const double level = noise_level(d0, d1, spec.mode);
    if (!(level > 0.0)) throw std::runtime_error("add_noise: degenerate perturbation draw");
    d0 *= spec.eps / level;
    d1 *= spec.eps / level;

    NoisyData out{td, d0, d1};
    out.data.f0 += d0;
    out.data.f1 += d1;
    return out;
}

double noise_level(const SpectralField& delta0, const SpectralField& delta1, NoiseMode mode) {
    if (mode == NoiseMode::l2only) return norm_l2(delta0);
    return norm_h1(delta0) + norm_l2(delta1);
}

AssumptionReport check_assumptions(const RegConfig& cfg, double T) {
    AssumptionReport r;
    r.horizon_ok = 3.0 * cfg.C1 * T < 2.0;
    if (!r.horizon_ok) r.violations.push_back("3*C1*T = " + fmt(3.0 * cfg.C1 * T) + " is not < 2");
    r.gamma_ok = cfg.gamma >= std::exp(2.0 / cfg.C1) * (1.0 - 1e-12);
    if (!r.gamma_ok) {
        r.violations.push_back("gamma = " + fmt(cfg.gamma) + " is below e^{2/C1} = " + fmt(std::exp(2.0 / cfg.C1)));
    }
    const double g2e = cfg.gamma * cfg.gamma * cfg.eps;
    r.noise_ok = g2e <= cfg.K * (1.0 + 1e-12);
    if (!r.noise_ok) r.violations.push_back("gamma^2*eps = " + fmt(g2e) + " exceeds K = " + fmt(cfg.K));
    return r;
}

ErrorReport error_report(const Trajectory& reconstructed, const Trajectory& truth) {
    require_same_grid(reconstructed, truth);
    const std::size_t n = truth.size();
    ErrorReport r;
    r.times = truth.times;
    r.err_l2.resize(n);
    r.err_grad.resize(n);
    r.err_dt.resize(n);
    r.err_dtgrad_int.assign(n, 0.0);
    std::vector<double> dtgrad_sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SpectralField e = reconstructed.values[i] - truth.values[i];
        const SpectralField de = reconstructed.dvalues[i] - truth.dvalues[i];
        r.err_l2[i] = norm_l2(e);
        r.err_grad[i] = norm_grad(e);
        r.err_dt[i] = norm_l2(de);
        const double g = norm_grad(de);
        dtgrad_sq[i] = g * g;
    }
    // cumulative trapezoid from the latest time backwards
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.times[a] > r.times[b]; });
    double acc = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const std::size_t hi = order[k - 1];
        const std::size_t lo = order[k];
        acc += 0.5 * (r.times[hi] - r.times[lo]) * (dtgrad_sq[hi] + dtgrad_sq[lo]);
        r.err_dtgrad_int[lo] = acc;
    }
    return r;
}

BoundShapes error_envelope(std::span<const double> times, const RegConfig& cfg, double T, double M) {
    const AssumptionReport check = check_assumptions(cfg, T);
    if (!check.ok()) {
        std::string msg = "error_envelope: assumptions violated:";
        for (const auto& v : check.violations) msg += " [" + v + "]";
        throw AssumptionViolation(msg);
    }
    const double lg = std::log(cfg.gamma);
    BoundShapes s;
    s.M = M;
    s.times.assign(times.begin(), times.end());
    for (double t : times) {
        const double x = std::exp((3.0 * cfg.C1 * (T - t) - 2.0) * lg);
        s.shape1.push_back(cfg.eps + x / lg);
        s.shape2.push_back(lg * cfg.eps + x);
        s.shape3.push_back(lg * lg * cfg.eps + lg * x);
    }
    return s;
}

double gevrey_bound_constant(const Trajectory& truth, double sigma, double alpha) {
    std::vector<std::size_t> order(truth.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return truth.times[a] < truth.times[b]; });
    double sup = 0.0;
    double integral = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        const double u = norm_gevrey(truth.values[i], sigma, alpha);
        const double ut = norm_gevrey(truth.dvalues[i], sigma, alpha);
        sup = std::max(sup, u * u);
        if (k > 0) integral += 0.5 * (truth.times[i] - truth.times[order[k - 1]]) * (prev + ut * ut);
        prev = ut * ut;
    }
    const double M = sup + integral;
    if (!std::isfinite(M)) throw std::range_error("gevrey_bound_constant: not representable");
    return M;
}

Truth manufacture_truth(const BasisPtr& basis, const TruthSpec& spec, double T, std::span<const double> times) {
    if (times.empty() || times.back() != T) throw std::invalid_argument("manufacture_truth: time grid must end at T");
    const auto mu = basis->eigenvalues();
    std::vector<double> c(basis->size(), 0.0);
    if (spec.kind == TruthKind::explicit_modes) {
        if (spec.modes.size() != spec.coeffs.size()) {
            throw std::invalid_argument("manufacture_truth: modes and coeffs differ in length");
        }
        for (std::size_t k = 0; k < spec.modes.size(); ++k) {
            const std::size_t p = spec.modes[k];
            if (p < 1 || p > basis->size()) {
                throw std::invalid_argument("manufacture_truth: mode " + std::to_string(p) + " outside 1.." +
                                            std::to_string(basis->size()));
            }
            c[p - 1] += spec.coeffs[k];
        }
    } else {
        if (!(spec.kappa > 0.0)) throw std::invalid_argument("manufacture_truth: kappa must be positive");
        for (std::size_t p = 0; p < c.size(); ++p) {
            c[p] = spec.amplitude * std::exp(-spec.kappa * mu[p]) * std::pow(mu[p], -0.5 * spec.power);
        }
    }
    std::vector<double> v(c.size(), 0.0);
    if (spec.velocity == TruthVelocity::decaying) {
        for (std::size_t p = 0; p < c.size(); ++p) v[p] = -mu[p] * c[p];
    }
    Truth truth{SpectralField(basis, c), SpectralField(basis, v), {}, {SpectralField(basis), SpectralField(basis), T}};
    truth.trajectory = forward_solve(truth.u0, truth.u1, T, times);
    truth.terminal.f0 = truth.trajectory.values.back();
    truth.terminal.f1 = truth.trajectory.dvalues.back();
    return truth;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return kNaN;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) return kNaN;
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : kNaN;
}

namespace {

std::vector<std::size_t> locate_times(std::span<const double> grid, std::span<const double> wanted, double T) {
    std::vector<std::size_t> idx;
    for (double t : wanted) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            if (std::abs(grid[i] - t) < std::abs(grid[best] - t)) best = i;
        }
        if (std::abs(grid[best] - t) > 1e-9 * std::max(1.0, T)) {
            throw std::invalid_argument("time of interest " + fmt(t) + " is not on the time grid");
        }
        idx.push_back(best);
    }
    return idx;
}

SweepReport run_sweep(const SweepConfig& config, NoiseMode noise_mode) {
    if (!config.basis) throw std::invalid_argument("sweep: no basis");
    if (config.eps_grid.empty()) throw std::invalid_argument("sweep: empty eps grid");
    if (config.times_of_interest.empty()) throw std::invalid_argument("sweep: no times of interest");
    std::vector<double> eps = config.eps_grid;
    for (double e : eps) {
        if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("sweep: eps " + fmt(e) + " outside (0, 1)");
    }
    std::sort(eps.begin(), eps.end(), std::greater<>());
    if (std::adjacent_find(eps.begin(), eps.end()) != eps.end()) throw std::invalid_argument("sweep: repeated eps");

    const auto times = uniform_grid(config.T, config.time_count);
    const auto sel = locate_times(times, config.times_of_interest, config.T);
    const Truth truth = manufacture_truth(config.basis, config.truth, config.T, times);

    SweepReport report;
    report.kind = config.kind;
    report.M = gevrey_bound_constant(truth.trajectory);

    struct Job {
        bool skipped = false;
        std::string diagnostic;
        std::vector<SweepRow> rows;
    };
    std::vector<Job> jobs(eps.size());
    parallel_for(eps.size(), config.threads, [&](std::size_t j) {
        const RegConfig cfg = RegConfig::holder_schedule(eps[j], config.C0, config.C1, config.K);
        const AssumptionReport check = check_assumptions(cfg, config.T);
        if (!check.ok()) {
            jobs[j].skipped = true;
            jobs[j].diagnostic = "eps = " + fmt(eps[j]) + ":";
            for (const auto& v : check.violations) jobs[j].diagnostic += " " + v + ";";
            return;
        }
        TerminalData data = truth.terminal;
        if (config.noise) data = add_noise(truth.terminal, {eps[j], config.seed, noise_mode, j}).data;
        const Trajectory rec = regularized_backward_solve(data, cfg, times);
        const ErrorReport err = error_report(rec, truth.trajectory);
        const BoundShapes shapes = error_envelope(times, cfg, config.T, report.M);
        const double lg = std::log(cfg.gamma);
        for (std::size_t i : sel) {
            SweepRow row;
            row.eps = eps[j];
            row.gamma = cfg.gamma;
            row.t = times[i];
            row.err_l2 = err.err_l2[i];
            row.bound1 = config.kind == SweepKind::weak ? 1.0 / (lg * lg) : shapes.shape1[i];
            row.ratio1 = row.err_l2 * row.err_l2 / row.bound1;
            row.err_grad = err.err_grad[i];
            row.bound2 = shapes.shape2[i];
            row.ratio2 = row.err_grad * row.err_grad / row.bound2;
            const double sq3 = err.err_dt[i] * err.err_dt[i] + err.err_dtgrad_int[i];
            row.err_dt_plus_int = std::sqrt(sq3);
            row.bound3 = shapes.shape3[i];
            row.ratio3 = sq3 / row.bound3;
            jobs[j].rows.push_back(row);
        }
    });

    for (std::size_t j = 0; j < eps.size(); ++j) {
        if (jobs[j].skipped) {
            report.skipped.push_back(jobs[j].diagnostic);
            continue;
        }
        report.eps_used.push_back(eps[j]);
        report.rows.insert(report.rows.end(), jobs[j].rows.begin(), jobs[j].rows.end());
    }

    const std::size_t nt = sel.size();
    for (std::size_t k = 0; k < nt; ++k) {
        for (int metric = 1; metric <= 3; ++metric) {
            std::vector<double> x, y, yb, ratio;
            for (std::size_t r = k; r < report.rows.size(); r += nt) {
                const SweepRow& row = report.rows[r];
                const double e = metric == 1 ? row.err_l2 : metric == 2 ? row.err_grad : row.err_dt_plus_int;
                const double b = metric == 1 ? row.bound1 : metric == 2 ? row.bound2 : row.bound3;
                const double q = metric == 1 ? row.ratio1 : metric == 2 ? row.ratio2 : row.ratio3;
                x.push_back(std::log(row.eps));
                y.push_back(std::log(e));
                yb.push_back(0.5 * std::log(b));
                ratio.push_back(q);
            }
            SweepCell cell;
            cell.t = times[sel[k]];
            cell.metric = metric;
            cell.fitted_slope = fit_slope(x, y);
            cell.predicted_slope = fit_slope(x, yb);
            if (!ratio.empty()) {
                const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
                cell.c_hat = *hi;
                cell.spread = *lo > 0.0 ? *hi / *lo : kNaN;
            } else {
                cell.c_hat = kNaN;
                cell.spread = kNaN;
            }
            report.cells.push_back(cell);
        }
    }
    return report;
}

}  // namespace

SweepReport convergence_sweep(const SweepConfig& config) {
    return run_sweep(config, config.kind == SweepKind::weak ? NoiseMode::l2only : NoiseMode::h1l2);
}

SweepReport weak_noise_experiment(SweepConfig config) {
    config.kind = SweepKind::weak;
    return run_sweep(config, NoiseMode::l2only);
}

IllposednessReport illposedness_demo(double L, std::size_t mode, double T, double eps, const RegConfig& cfg) {
    if (mode == 0) throw std::invalid_argument("illposedness_demo: mode numbers start at 1");
    if (!(eps > 0.0)) throw std::invalid_argument("illposedness_demo: eps must be positive");
    const BasisPtr basis = build_basis(L, mode);
    const double mu = basis->eigenvalue(mode - 1);
    TerminalData td{SpectralField(basis), SpectralField(basis), T};
    td.f0[mode - 1] = eps;
    td.f1[mode - 1] = -mu * eps;
    const std::vector<double> times{0.0, T};

    IllposednessReport r;
    r.mu = mu;
    r.T = T;
    r.eps = eps;
    r.predicted = std::exp(mu * T);
    const NaiveBackwardResult naive = naive_backward_solve(td, times);
    if (!naive.overflow_modes.empty() || !std::isfinite(r.predicted)) {
        r.overflow = true;
        r.amplification = std::numeric_limits<double>::infinity();
        r.relative_error = kNaN;
        r.message = "naive amplification exceeds floating range at mu*T = " + fmt(mu * T);
    } else {
        r.amplification = std::abs(naive.trajectory.values[0][mode - 1]) / eps;
        r.relative_error = std::abs(r.amplification / r.predicted - 1.0);
        r.message = "naive amplification " + fmt(r.amplification) + " vs e^{mu*T} = " + fmt(r.predicted);
    }
    r.regularized_high = cfg.is_high_mode(mu);
    const Trajectory reg = regularized_backward_solve(td, cfg, times);
    r.regularized_amplification = std::abs(reg.values[0][mode - 1]) / eps;
    return r;
}

}  // namespace qrwave
