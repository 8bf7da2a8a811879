#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qrwave/operators.hpp"
#include "qrwave/spectral.hpp"
#include "qrwave/trajectory.hpp"

namespace qrwave {

enum class ModeKind { forward_original, naive_backward, regularized_low, regularized_high };

/// Per-mode reduction a'' + beta a' + kappa a = 0 of the (regularized) equation.
/// Original dynamics (and regularized modes below the cutoff, where P cancels the
/// Laplacian terms) have roots {-1, -mu}; regularized modes at or above the cutoff
/// satisfy a'' + (1 - mu) a' - mu a = 0 with roots {-1, +mu}.
struct ModeODE {
    double mu = 0.0;
    ModeKind kind = ModeKind::forward_original;
    double root1 = -1.0;
    double root2 = -1.0;

    static ModeODE make(double mu, ModeKind kind);
    static ModeODE regularized(double mu, const RegConfig& cfg);

    /// |root1 - root2| below this switches to the (c1 + c2 s) e^{r s} form.
    static constexpr double kRepeatedRootTol = 1e-9;
    bool repeated() const;
};

struct ModeState {
    double a = 0.0;
    double da = 0.0;
};

/// Exact solution at time t given (a, a') at t_ref. Non-finite on overflow.
ModeState evaluate_mode(const ModeODE& ode, ModeState ref, double t_ref, double t);

struct TerminalData {
    SpectralField f0;  // u(T)
    SpectralField f1;  // u_t(T)
    double T = 0.0;

    void validate() const;
};

Trajectory forward_solve(const SpectralField& u0, const SpectralField& u1, double T,
                         std::span<const double> times);

struct NaiveBackwardResult {
    Trajectory trajectory;                   // overflowed coefficients are zeroed
    std::vector<bool> valid;                 // per time: false if any mode overflowed
    std::vector<std::size_t> overflow_modes; // 1-based mode numbers that overflowed
};

/// Un-regularized terminal-value continuation; unstable by construction.
NaiveBackwardResult naive_backward_solve(const TerminalData& td, std::span<const double> times);

/// Closed-form solution of the regularized terminal-value problem.
Trajectory regularized_backward_solve(const TerminalData& td, const RegConfig& cfg,
                                      std::span<const double> times);

enum class VDirection { to_v, from_v };

/// v = e^{rho (t - T)} u, v_t = e^{rho (t - T)} u_t + rho v, and its inverse.
Trajectory v_transform(const Trajectory& traj, double rho, double T, VDirection direction);

/// Backward RK4 integration of the v-system from (f0, rho f0 + f1) at T, mapped
/// back to u. Each output interval is split into equal steps of size <= dt.
/// Throws DivergenceError if the v-energy leaves 10x the Groenwall envelope.
Trajectory galerkin_step_solve(const TerminalData& td, const RegConfig& cfg, double rho, double dt,
                               std::span<const double> times);

struct PicardOptions {
    std::size_t iterations = 200;
    /// Trapezoid sub-intervals per output interval.
    std::size_t substeps = 1;
    /// Each Picard window satisfies ||M_k|| * length <= window_contraction for its
    /// mode matrix M_k. Infinity iterates over the whole interval at once.
    double window_contraction = 0.5;
};

struct PicardStats {
    std::size_t windows = 0;            // summed over modes
    std::size_t max_iterations_used = 0;
    double last_difference = 0.0;       // largest final successive difference
};

/// Fixed-point iteration w = w(T) + A_k int w - int F_k of the Galerkin integral
/// equation for the first `n_modes` modes of the v-system, composite trapezoid
/// quadrature, mapped back to u. Throws DivergenceError when successive
/// differences grow three iterations in a row past the factorial burn-in.
Trajectory picard_solve(const TerminalData& td, const RegConfig& cfg, double rho, std::size_t n_modes,
                        std::span<const double> times, const PicardOptions& options = {},
                        PicardStats* stats = nullptr);

struct EnergySample {
    double t = 0.0;
    double E = 0.0;
};

/// E(t) = ||v_t||^2 / (rho - 1) + rho ||v||^2 + ||grad v||^2 on a v-trajectory.
std::vector<EnergySample> energy_series(const Trajectory& traj_v, double rho);

/// max_t E(t) / (E(T) gamma^{2 C1 rho (T - t)}); 0 if every E is 0.
double gronwall_ratio(std::span<const EnergySample> energy, const RegConfig& cfg, double rho, double T);

}  // namespace qrwave
