#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrwave/operators.hpp"
#include "qrwave/solvers.hpp"
#include "qrwave/spectral.hpp"
#include "qrwave/trajectory.hpp"

namespace qrwave {

enum class NoiseMode {
    h1l2,   // ||d0||_{H1} + ||d1|| = eps
    l2only  // ||d0|| = eps, u_t(T) exact
};

struct NoiseSpec {
    double eps = 0.0;
    std::uint64_t seed = 0;
    NoiseMode mode = NoiseMode::h1l2;
    std::uint64_t stream = 0;  // RNG stream within the seed
};

struct NoisyData {
    TerminalData data;
    SpectralField delta0;  // perturbation added to f0
    SpectralField delta1;  // perturbation added to f1
};

NoisyData add_noise(const TerminalData& td, const NoiseSpec& spec);

/// Noise level of a perturbation pair under the given mode.
double noise_level(const SpectralField& delta0, const SpectralField& delta1, NoiseMode mode);

struct AssumptionReport {
    bool horizon_ok = false;  // 3 C1 T < 2
    bool gamma_ok = false;    // gamma >= e^{2/C1}
    bool noise_ok = false;    // gamma^2 eps <= K
    std::vector<std::string> violations;

    bool ok() const { return horizon_ok && gamma_ok && noise_ok; }
};

AssumptionReport check_assumptions(const RegConfig& cfg, double T);

struct ErrorReport {
    std::vector<double> times;
    std::vector<double> err_l2;
    std::vector<double> err_grad;
    std::vector<double> err_dt;
    std::vector<double> err_dtgrad_int;  // int_t^T ||grad(u_t^eps - u_t)||^2 ds, trapezoid
};

ErrorReport error_report(const Trajectory& reconstructed, const Trajectory& truth);

struct BoundShapes {
    std::vector<double> times;
    std::vector<double> shape1;  // eps + x / log(gamma)
    std::vector<double> shape2;  // log(gamma) eps + x
    std::vector<double> shape3;  // log(gamma)^2 eps + log(gamma) x
    double M = 0.0;
};

/// Right-hand-side shapes of the three error estimates, without the constant,
/// with x = gamma^{3 C1 (T - t) - 2}. Throws AssumptionViolation if
/// check_assumptions fails.
BoundShapes error_envelope(std::span<const double> times, const RegConfig& cfg, double T, double M);

/// sup_t ||u||^2_{G_{sigma,alpha}} + int_0^T ||u_t||^2_{G_{sigma,alpha}} dt on the truth.
double gevrey_bound_constant(const Trajectory& truth, double sigma = 1.0, double alpha = 1.0);

enum class TruthKind {
    explicit_modes,  // coefficients listed per mode
    gevrey_profile   // c_p = amplitude e^{-kappa mu_p} mu_p^{-power/2} on every mode
};
enum class TruthVelocity {
    zero,     // u_t(0) = 0
    decaying  // u_t(0) = -mu_p u(0): pure e^{-mu t} branch
};

struct TruthSpec {
    TruthKind kind = TruthKind::explicit_modes;
    std::vector<std::size_t> modes{1, 2, 3, 4, 5, 6, 7, 8};  // 1-based
    std::vector<double> coeffs{1.0, 1.0 / 4, 1.0 / 9, 1.0 / 16, 1.0 / 25, 1.0 / 36, 1.0 / 49, 1.0 / 64};
    double amplitude = 1.0;
    double kappa = 1.0;
    double power = 2.0;
    TruthVelocity velocity = TruthVelocity::zero;
};

struct Truth {
    SpectralField u0;
    SpectralField u1;
    Trajectory trajectory;
    TerminalData terminal;
};

/// Forward solution from the initial data described by `spec`; `times` must end at T.
Truth manufacture_truth(const BasisPtr& basis, const TruthSpec& spec, double T, std::span<const double> times);

enum class SweepKind {
    holder,  // gamma = eps^{-1/2}, H1 x L2 noise, three-metric envelope
    weak     // L2-only noise, err_l2^2 (log gamma)^2
};

struct SweepConfig {
    BasisPtr basis;
    double T = 0.5;
    std::size_t time_count = 201;
    TruthSpec truth;
    std::vector<double> eps_grid{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    std::vector<double> times_of_interest{0.0, 0.25, 0.45};
    double C0 = 2.0;
    double C1 = 1.0;
    double K = 1.0;
    bool noise = true;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    SweepKind kind = SweepKind::holder;
};

/// One (eps, t) sample. Errors are in norm units; ratios are error^2 / bound.
/// err_dt_plus_int = sqrt(err_dt^2 + err_dtgrad_int). For the weak kind bound1 is
/// (log gamma)^{-2} and bounds 2-3 keep the estimate shapes for reference.
struct SweepRow {
    double eps = 0.0;
    double gamma = 0.0;
    double t = 0.0;
    double err_l2 = 0.0;
    double bound1 = 0.0;
    double ratio1 = 0.0;
    double err_grad = 0.0;
    double bound2 = 0.0;
    double ratio2 = 0.0;
    double err_dt_plus_int = 0.0;
    double bound3 = 0.0;
    double ratio3 = 0.0;
};

/// Per (time, metric) summary over the eps values that were run.
struct SweepCell {
    double t = 0.0;
    int metric = 0;               // 1, 2, 3
    double fitted_slope = 0.0;    // least squares of log(error) vs log(eps); NaN if undefined
    double predicted_slope = 0.0; // least squares of log(sqrt(bound)) vs log(eps)
    double c_hat = 0.0;           // max ratio
    double spread = 0.0;          // max ratio / min ratio; NaN if a ratio is 0
};

struct SweepReport {
    SweepKind kind = SweepKind::holder;
    std::vector<double> eps_used;  // descending
    std::vector<SweepRow> rows;    // eps descending, then time ascending
    std::vector<SweepCell> cells;
    std::vector<std::string> skipped;
    double M = 0.0;
};

/// Throws std::invalid_argument for a malformed config; eps values that fail
/// check_assumptions are skipped and listed.
SweepReport convergence_sweep(const SweepConfig& config);

/// Same pipeline with L2-only noise.
SweepReport weak_noise_experiment(SweepConfig config);

/// Least-squares slope of y against x; NaN for fewer than two points or non-finite data.
double fit_slope(std::span<const double> x, std::span<const double> y);

struct IllposednessReport {
    double mu = 0.0;
    double T = 0.0;
    double eps = 0.0;
    bool overflow = false;
    double amplification = 0.0;  // naive |a(0)| / |a(T)|
    double predicted = 0.0;      // e^{mu T}
    double relative_error = 0.0;
    bool regularized_high = false;
    double regularized_amplification = 0.0;
    std::string message;
};

/// Terminal data eps (phi_p, -mu_p phi_p), aligned with the e^{-mu t} branch,
/// propagated back to t = 0 by the naive and the regularized solvers.
IllposednessReport illposedness_demo(double L, std::size_t mode, double T, double eps, const RegConfig& cfg);

}  // namespace qrwave
