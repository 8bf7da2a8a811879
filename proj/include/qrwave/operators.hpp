#pragma once

#include <cstddef>
#include <cstdint>

#include "qrwave/spectral.hpp"

namespace qrwave {

/// Regularization state for one noise level.
///
/// gamma >= 1 is the auxiliary function gamma(eps); modes with
/// mu_p >= cutoff = log(gamma)/2 are handled by the perturbing operator Q,
/// modes below it by the stabilized operator P. rho = C1 log(gamma) is the
/// Carleman weight exponent used by the v-substitution.
struct RegConfig {
    double eps = 0.0;
    double gamma = 1.0;
    double cutoff = 0.0;
    double rho = 0.0;
    double C0 = 2.0;
    double C1 = 1.0;
    double K = 1.0;

    /// Explicit gamma. Throws std::invalid_argument for gamma < 1 or bad constants.
    static RegConfig with_gamma(double gamma, double eps = 0.0, double C0 = 2.0, double C1 = 1.0,
                                double K = 1.0);
    /// gamma = eps^{-1/2}; eps must lie in (0, 1).
    static RegConfig holder_schedule(double eps, double C0 = 2.0, double C1 = 1.0, double K = 1.0);

    bool is_high_mode(double mu) const { return mu >= cutoff; }
};

/// Q h: coefficient 2 mu_p h_p on modes with mu_p >= cutoff, zero elsewhere.
SpectralField apply_Q(const SpectralField& h, const RegConfig& cfg);
/// P h: coefficient -2 mu_p h_p on modes with mu_p < cutoff, zero elsewhere.
SpectralField apply_P(const SpectralField& h, const RegConfig& cfg);
/// 2 Delta h in the eigenbasis: coefficient -2 mu_p h_p.
SpectralField apply_laplacian_doubled(const SpectralField& h);

struct BoundReport {
    double max_ratio = 0.0;
    bool pass = false;
    std::size_t samples = 0;
    std::size_t rejected = 0;      // Gevrey samples regenerated with faster decay
    std::size_t worst_sample = 0;  // index of the sample attaining max_ratio
};

inline constexpr double kBoundSlack = 1e-12;

/// Checks ||Q u|| <= C0 ||u||_{G_{sigma,alpha}} / gamma on `samples` random fields
/// with coefficients e^{-(1+delta) mu_p} z_p, z_p ~ N(0,1), delta = 0.1.
/// Ratios are computed in log space, so the Gevrey norm never overflows here.
BoundReport verify_Q_bound(const BasisPtr& basis, std::size_t samples, const RegConfig& cfg,
                           std::uint64_t seed, double sigma = 1.0, double alpha = 1.0,
                           unsigned threads = 1);

/// Checks ||P u|| <= C1 log(gamma) ||u|| on standard-normal L2 fields. Needs gamma > e.
BoundReport verify_P_bound(const BasisPtr& basis, std::size_t samples, const RegConfig& cfg,
                           std::uint64_t seed, unsigned threads = 1);

/// Q-bound ratio ||Q u|| gamma / (C0 ||u||_G) of the field; 0 for the zero field.
double q_bound_ratio(const SpectralField& u, const RegConfig& cfg, double sigma = 1.0, double alpha = 1.0);
/// P-bound ratio ||P u|| / (C1 log(gamma) ||u||); 0 for the zero field.
double p_bound_ratio(const SpectralField& u, const RegConfig& cfg);

}  // namespace qrwave
