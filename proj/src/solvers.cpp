#include "qrwave/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qrwave/errors.hpp"

namespace qrwave {

ModeODE ModeODE::make(double mu, ModeKind kind) {
    if (!(mu > 0.0)) throw std::invalid_argument("ModeODE: eigenvalue must be positive");
    ModeODE ode;
    ode.mu = mu;
    ode.kind = kind;
    ode.root1 = -1.0;
    ode.root2 = kind == ModeKind::regularized_high ? mu : -mu;
    return ode;
}

ModeODE ModeODE::regularized(double mu, const RegConfig& cfg) {
    return make(mu, cfg.is_high_mode(mu) ? ModeKind::regularized_high : ModeKind::regularized_low);
}

bool ModeODE::repeated() const { return std::abs(root1 - root2) < kRepeatedRootTol; }

ModeState evaluate_mode(const ModeODE& ode, ModeState ref, double t_ref, double t) {
    const double s = t - t_ref;
    if (ode.repeated()) {
        const double r = 0.5 * (ode.root1 + ode.root2);
        const double c1 = ref.a;
        const double c2 = ref.da - r * ref.a;
        const double e = std::exp(r * s);
        return {(c1 + c2 * s) * e, (c2 + r * (c1 + c2 * s)) * e};
    }
    const double d2 = (ref.da - ode.root1 * ref.a) / (ode.root2 - ode.root1);
    const double d1 = ref.a - d2;
    ModeState out;
    // Skip zero branches so an overflowing exponential on an unexcited branch is harmless.
    if (d1 != 0.0) {
        const double e1 = std::exp(ode.root1 * s);
        out.a += d1 * e1;
        out.da += ode.root1 * d1 * e1;
    }
    if (d2 != 0.0) {
        const double e2 = std::exp(ode.root2 * s);
        out.a += d2 * e2;
        out.da += ode.root2 * d2 * e2;
    }
    return out;
}

void TerminalData::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("TerminalData: T must be positive");
    require_same_basis(f0, f1);
    if (!f0.all_finite() || !f1.all_finite()) throw std::invalid_argument("TerminalData: non-finite data");
}

namespace {

void check_times(std::span<const double> times, double T) {
    if (times.empty()) throw std::invalid_argument("time grid is empty");
    for (double t : times) {
        if (!(t >= 0.0 && t <= T)) {
            throw std::invalid_argument("time " + std::to_string(t) + " outside [0, T]");
        }
    }
}

Trajectory make_trajectory(const BasisPtr& basis, std::span<const double> times) {
    return Trajectory::zeros(basis, std::vector<double>(times.begin(), times.end()));
}

}  // namespace

Trajectory forward_solve(const SpectralField& u0, const SpectralField& u1, double T,
                         std::span<const double> times) {
    if (!(T > 0.0)) throw std::invalid_argument("forward_solve: T must be positive");
    require_same_basis(u0, u1);
    check_times(times, T);
    const auto mu = u0.basis()->eigenvalues();
    Trajectory traj = make_trajectory(u0.basis(), times);
    for (std::size_t p = 0; p < u0.size(); ++p) {
        const ModeODE ode = ModeODE::make(mu[p], ModeKind::forward_original);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const ModeState st = evaluate_mode(ode, {u0[p], u1[p]}, 0.0, times[i]);
            traj.values[i][p] = st.a;
            traj.dvalues[i][p] = st.da;
        }
    }
    traj.validate();
    return traj;
}

NaiveBackwardResult naive_backward_solve(const TerminalData& td, std::span<const double> times) {
    td.validate();
    check_times(times, td.T);
    const auto mu = td.f0.basis()->eigenvalues();
    NaiveBackwardResult result;
    result.trajectory = make_trajectory(td.f0.basis(), times);
    result.valid.assign(times.size(), true);
    for (std::size_t p = 0; p < td.f0.size(); ++p) {
        const ModeODE ode = ModeODE::make(mu[p], ModeKind::naive_backward);
        bool overflowed = false;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const ModeState st = evaluate_mode(ode, {td.f0[p], td.f1[p]}, td.T, times[i]);
            if (!std::isfinite(st.a) || !std::isfinite(st.da)) {
                overflowed = true;
                result.valid[i] = false;
                continue;
            }
            result.trajectory.values[i][p] = st.a;
            result.trajectory.dvalues[i][p] = st.da;
        }
        if (overflowed) result.overflow_modes.push_back(p + 1);
    }
    return result;
}

Trajectory regularized_backward_solve(const TerminalData& td, const RegConfig& cfg,
                                      std::span<const double> times) {
    td.validate();
    check_times(times, td.T);
    const auto mu = td.f0.basis()->eigenvalues();
    Trajectory traj = make_trajectory(td.f0.basis(), times);
    for (std::size_t p = 0; p < td.f0.size(); ++p) {
        const ModeODE ode = ModeODE::regularized(mu[p], cfg);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const ModeState st = evaluate_mode(ode, {td.f0[p], td.f1[p]}, td.T, times[i]);
            traj.values[i][p] = st.a;
            traj.dvalues[i][p] = st.da;
        }
    }
    traj.validate();
    return traj;
}

Trajectory v_transform(const Trajectory& traj, double rho, double T, VDirection direction) {
    Trajectory out = traj;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        // one weight per slice; from_v divides by the same number to_v multiplied by
        const double w = std::exp(rho * (traj.times[i] - T));
        const SpectralField& x = traj.values[i];
        const SpectralField& dx = traj.dvalues[i];
        for (std::size_t p = 0; p < x.size(); ++p) {
            if (direction == VDirection::to_v) {
                const double v = w * x[p];
                out.values[i][p] = v;
                out.dvalues[i][p] = w * dx[p] + rho * v;
            } else {
                out.values[i][p] = x[p] / w;
                out.dvalues[i][p] = (dx[p] - rho * x[p]) / w;
            }
        }
    }
    out.validate();
    return out;
}

namespace {

// Per-mode first-order v-system: y' = z, z' = -b z - c y + p ((1 - rho) y + z).
struct VModeSystem {
    double b = 0.0;  // 1 - 2 rho - mu
    double c = 0.0;  // rho^2 + (mu - 1) rho - mu
    double p = 0.0;  // P symbol: -2 mu below the cutoff, 0 above
    double rho = 0.0;

    VModeSystem(double mu, const RegConfig& cfg, double rho_) : rho(rho_) {
        b = 1.0 - 2.0 * rho - mu;
        c = rho * rho + (mu - 1.0) * rho - mu;
        p = cfg.is_high_mode(mu) ? 0.0 : -2.0 * mu;
    }

    std::array<double, 2> rhs(double y, double z) const {
        return {z, -b * z - c * y + p * ((1.0 - rho) * y + z)};
    }

    // Full matrix M with w' = M w.
    std::array<double, 4> matrix() const { return {0.0, 1.0, -c + p * (1.0 - rho), -b + p}; }
};

std::vector<std::size_t> backward_order(std::span<const double> times) {
    std::vector<std::size_t> order(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });
    return order;
}

double energy_of(const SpectralField& v, const SpectralField& dv, double rho) {
    const double a = norm_l2(dv);
    const double b = norm_l2(v);
    const double g = norm_grad(v);
    return a * a / (rho - 1.0) + rho * b * b + g * g;
}

}  // namespace

Trajectory galerkin_step_solve(const TerminalData& td, const RegConfig& cfg, double rho, double dt,
                               std::span<const double> times) {
    td.validate();
    check_times(times, td.T);
    if (!(rho > 1.0)) throw std::invalid_argument("galerkin_step_solve: rho must exceed 1");
    if (!(dt > 0.0)) throw std::invalid_argument("galerkin_step_solve: dt must be positive");
    const BasisPtr& basis = td.f0.basis();
    const auto mu = basis->eigenvalues();
    const auto order = backward_order(times);

    Trajectory vtraj = make_trajectory(basis, times);
    for (std::size_t p = 0; p < basis->size(); ++p) {
        const VModeSystem sys(mu[p], cfg, rho);
        double y = td.f0[p];
        double z = rho * td.f0[p] + td.f1[p];
        double t = td.T;
        for (std::size_t idx : order) {
            const double target = times[idx];
            const double span = t - target;
            if (span > 0.0) {
                const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
                const double h = -span / static_cast<double>(std::max<std::size_t>(steps, 1));
                for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) {
                    const auto k1 = sys.rhs(y, z);
                    const auto k2 = sys.rhs(y + 0.5 * h * k1[0], z + 0.5 * h * k1[1]);
                    const auto k3 = sys.rhs(y + 0.5 * h * k2[0], z + 0.5 * h * k2[1]);
                    const auto k4 = sys.rhs(y + h * k3[0], z + h * k3[1]);
                    y += h / 6.0 * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]);
                    z += h / 6.0 * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]);
                }
                t = target;
            }
            vtraj.values[idx][p] = y;
            vtraj.dvalues[idx][p] = z;
        }
    }

    // instability detector against 10x the Groenwall envelope
    SpectralField v_T = td.f0;
    SpectralField dv_T = rho * td.f0 + td.f1;
    const double e_T = energy_of(v_T, dv_T, rho);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double e = energy_of(vtraj.values[i], vtraj.dvalues[i], rho);
        const double envelope = e_T * std::exp(2.0 * cfg.C1 * rho * (td.T - times[i]) * std::log(cfg.gamma));
        if (!std::isfinite(e) || e > 10.0 * envelope * (1.0 + 1e-12)) {
            throw DivergenceError("galerkin_step_solve: energy " + std::to_string(e) + " at t = " +
                                  std::to_string(times[i]) + " exceeds 10x the Groenwall envelope " +
                                  std::to_string(envelope) + "; reduce dt below 0.5/(1 + max mu)");
        }
    }
    return v_transform(vtraj, rho, td.T, VDirection::from_v);
}

Trajectory picard_solve(const TerminalData& td, const RegConfig& cfg, double rho, std::size_t n_modes,
                        std::span<const double> times, const PicardOptions& options, PicardStats* stats) {
    td.validate();
    check_times(times, td.T);
    if (!(rho > 1.0)) throw std::invalid_argument("picard_solve: rho must exceed 1");
    if (options.iterations == 0) throw std::invalid_argument("picard_solve: need at least one iteration");
    if (options.substeps == 0) throw std::invalid_argument("picard_solve: substeps must be positive");
    if (!(options.window_contraction > 0.0)) throw std::invalid_argument("picard_solve: window_contraction must be positive");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("picard_solve: times must be increasing");
    }
    const BasisPtr& basis = td.f0.basis();
    const auto mu = basis->eigenvalues();
    const std::size_t modes = std::min(n_modes, basis->size());

    // fine grid ending at T; output times map to fine indices
    std::vector<double> fine;
    std::vector<std::size_t> out_index(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0) {
            const double a = times[i - 1];
            const double b = times[i];
            for (std::size_t s = 1; s < options.substeps; ++s) {
                fine.push_back(a + (b - a) * (static_cast<double>(s) / static_cast<double>(options.substeps)));
            }
        }
        out_index[i] = fine.size();
        fine.push_back(times[i]);
    }
    if (fine.back() != td.T) fine.push_back(td.T);
    const std::size_t N = fine.size();

    PicardStats local;
    Trajectory vtraj = make_trajectory(basis, times);
    std::vector<std::array<double, 2>> w(N), next(N), integrand(N);
    for (std::size_t k = 0; k < modes; ++k) {
        const VModeSystem sys(mu[k], cfg, rho);
        // Split w' = M w into the P-free part A_k (sign flipped) and the P part F_k.
        const double a10 = sys.c, a11 = sys.b;  // A_k = [[0, -1], [c, b]]
        const auto M = sys.matrix();
        const double m_norm = std::max(std::abs(M[0]) + std::abs(M[1]), std::abs(M[2]) + std::abs(M[3]));
        auto F = [&](const std::array<double, 2>& x) { return sys.p * ((1.0 - rho) * x[0] + x[1]); };

        w[N - 1] = {td.f0[k], rho * td.f0[k] + td.f1[k]};
        std::size_t end = N - 1;
        while (end > 0) {
            std::size_t begin = end - 1;
            while (begin > 0 && (fine[end] - fine[begin - 1]) * m_norm <= options.window_contraction) --begin;
            ++local.windows;
            const std::array<double, 2> w_end = w[end];
            for (std::size_t j = begin; j < end; ++j) w[j] = w_end;
            const double length = fine[end] - fine[begin];
            const auto burn_in = static_cast<std::size_t>(std::ceil(std::numbers::e * m_norm * length));

            double prev_diff = std::numeric_limits<double>::infinity();
            std::size_t growth_streak = 0;
            std::size_t used = 0;
            double diff = 0.0;
            for (std::size_t m = 1; m <= options.iterations; ++m) {
                used = m;
                // integrand of A_k int w - int F_k, i.e. -(M w)
                for (std::size_t j = begin; j <= end; ++j) {
                    const auto& x = w[j];
                    integrand[j] = {-x[1], a10 * x[0] + a11 * x[1] - F(x)};
                }
                std::array<double, 2> acc{0.0, 0.0};
                next[end] = w_end;
                diff = 0.0;
                for (std::size_t j = end; j-- > begin;) {
                    const double h = 0.5 * (fine[j + 1] - fine[j]);
                    acc[0] += h * (integrand[j][0] + integrand[j + 1][0]);
                    acc[1] += h * (integrand[j][1] + integrand[j + 1][1]);
                    next[j] = {w_end[0] + acc[0], w_end[1] + acc[1]};
                    diff = std::max(diff, std::abs(next[j][0] - w[j][0]) + std::abs(next[j][1] - w[j][1]));
                }
                if (!std::isfinite(diff)) {
                    throw DivergenceError("picard_solve: non-finite iterate for mode " + std::to_string(k + 1));
                }
                for (std::size_t j = begin; j < end; ++j) w[j] = next[j];
                if (diff == 0.0) break;
                growth_streak = diff > prev_diff ? growth_streak + 1 : 0;
                if (m > burn_in && growth_streak >= 3) {
                    throw DivergenceError("picard_solve: successive differences grew 3 iterations in a row (mode " +
                                          std::to_string(k + 1) + ", window [" + std::to_string(fine[begin]) + ", " +
                                          std::to_string(fine[end]) +
                                          "]); refine the grid or shorten the window");
                }
                prev_diff = diff;
            }
            local.max_iterations_used = std::max(local.max_iterations_used, used);
            local.last_difference = std::max(local.last_difference, diff);
            end = begin;
        }
        for (std::size_t i = 0; i < times.size(); ++i) {
            vtraj.values[i][k] = w[out_index[i]][0];
            vtraj.dvalues[i][k] = w[out_index[i]][1];
        }
    }
    if (stats) *stats = local;
    return v_transform(vtraj, rho, td.T, VDirection::from_v);
}

std::vector<EnergySample> energy_series(const Trajectory& traj_v, double rho) {
    if (!(rho > 1.0)) throw std::invalid_argument("energy_series: rho must exceed 1");
    std::vector<EnergySample> out(traj_v.size());
    for (std::size_t i = 0; i < traj_v.size(); ++i) {
        out[i] = {traj_v.times[i], energy_of(traj_v.values[i], traj_v.dvalues[i], rho)};
    }
    return out;
}

double gronwall_ratio(std::span<const EnergySample> energy, const RegConfig& cfg, double rho, double T) {
    double e_T = -1.0;
    for (const auto& s : energy) {
        if (s.t == T) e_T = s.E;
    }
    if (e_T < 0.0) throw std::invalid_argument("gronwall_ratio: energy series has no sample at T");
    double worst = 0.0;
    for (const auto& s : energy) {
        if (s.E == 0.0) continue;
        const double envelope = e_T * std::exp(2.0 * cfg.C1 * rho * (T - s.t) * std::log(cfg.gamma));
        worst = std::max(worst, envelope > 0.0 ? s.E / envelope : std::numeric_limits<double>::infinity());
    }
    return worst;
}

}  // namespace qrwave
