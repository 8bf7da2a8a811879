#include "qrwave/operators.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrwave/util.hpp"

namespace qrwave {

RegConfig RegConfig::with_gamma(double gamma, double eps, double C0, double C1, double K) {
    if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("RegConfig: gamma must be finite and >= 1, got " + std::to_string(gamma));
    }
    if (!(C0 > 0.0) || !(C1 > 0.0) || !(K > 0.0)) {
        throw std::invalid_argument("RegConfig: C0, C1 and K must be positive");
    }
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("RegConfig: eps must lie in [0, 1)");
    RegConfig cfg;
    cfg.eps = eps;
    cfg.gamma = gamma;
    cfg.cutoff = 0.5 * std::log(gamma);
    cfg.rho = C1 * std::log(gamma);
    cfg.C0 = C0;
    cfg.C1 = C1;
    cfg.K = K;
    return cfg;
}

RegConfig RegConfig::holder_schedule(double eps, double C0, double C1, double K) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("holder_schedule: eps must lie in (0, 1)");
    return with_gamma(1.0 / std::sqrt(eps), eps, C0, C1, K);
}

SpectralField apply_Q(const SpectralField& h, const RegConfig& cfg) {
    const auto mu = h.basis()->eigenvalues();
    SpectralField out(h.basis());
    for (std::size_t p = 0; p < h.size(); ++p) {
        if (cfg.is_high_mode(mu[p])) out[p] = (2.0 * mu[p]) * h[p];
    }
    return out;
}

SpectralField apply_P(const SpectralField& h, const RegConfig& cfg) {
    const auto mu = h.basis()->eigenvalues();
    SpectralField out(h.basis());
    for (std::size_t p = 0; p < h.size(); ++p) {
        if (!cfg.is_high_mode(mu[p])) out[p] = -(2.0 * mu[p]) * h[p];
    }
    return out;
}

SpectralField apply_laplacian_doubled(const SpectralField& h) {
    const auto mu = h.basis()->eigenvalues();
    SpectralField out(h.basis());
    for (std::size_t p = 0; p < h.size(); ++p) out[p] = -(2.0 * mu[p]) * h[p];
    return out;
}

double q_bound_ratio(const SpectralField& u, const RegConfig& cfg, double sigma, double alpha) {
    const double q_norm = norm_l2(apply_Q(u, cfg));
    if (q_norm == 0.0) return 0.0;
    const double log_w = log_norm_gevrey(u, sigma, alpha);
    return std::exp(std::log(q_norm) + std::log(cfg.gamma) - std::log(cfg.C0) - log_w);
}

double p_bound_ratio(const SpectralField& u, const RegConfig& cfg) {
    const double p_norm = norm_l2(apply_P(u, cfg));
    if (p_norm == 0.0) return 0.0;
    return p_norm / (cfg.C1 * std::log(cfg.gamma) * norm_l2(u));
}

namespace {

BoundReport reduce(const std::vector<double>& ratios, std::size_t rejected) {
    BoundReport report;
    report.samples = ratios.size();
    report.rejected = rejected;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (ratios[i] > report.max_ratio) {
            report.max_ratio = ratios[i];
            report.worst_sample = i;
        }
    }
    report.pass = report.max_ratio <= 1.0 + kBoundSlack;
    return report;
}

}  // namespace

BoundReport verify_Q_bound(const BasisPtr& basis, std::size_t samples, const RegConfig& cfg,
                           std::uint64_t seed, double sigma, double alpha, unsigned threads) {
    if (!(cfg.gamma > 1.0)) throw std::invalid_argument("verify_Q_bound: gamma must exceed 1");
    if (samples == 0) throw std::invalid_argument("verify_Q_bound: need at least one sample");
    constexpr double kDelta = 0.1;
    const auto mu = basis->eigenvalues();
    std::vector<double> ratios(samples, 0.0);
    std::vector<std::size_t> rejected(samples, 0);
    parallel_for(samples, threads, [&](std::size_t s) {
        auto rng = stream_rng(seed, s);
        std::normal_distribution<double> normal(0.0, 1.0);
        double decay = 1.0 + kDelta;
        for (;;) {
            std::vector<double> c(basis->size());
            for (std::size_t p = 0; p < c.size(); ++p) c[p] = std::exp(-decay * mu[p]) * normal(rng);
            SpectralField u(basis, std::move(c));
            const double log_w = log_norm_gevrey(u, sigma, alpha);
            if (std::isnan(log_w) || log_w == std::numeric_limits<double>::infinity()) {
                ++rejected[s];
                decay *= 2.0;
                continue;
            }
            ratios[s] = q_bound_ratio(u, cfg, sigma, alpha);
            break;
        }
    });
    std::size_t total_rejected = 0;
    for (auto r : rejected) total_rejected += r;
    return reduce(ratios, total_rejected);
}

BoundReport verify_P_bound(const BasisPtr& basis, std::size_t samples, const RegConfig& cfg,
                           std::uint64_t seed, unsigned threads) {
    if (!(cfg.gamma > std::numbers::e)) throw std::invalid_argument("verify_P_bound: gamma must exceed e");
    if (samples == 0) throw std::invalid_argument("verify_P_bound: need at least one sample");
    std::vector<double> ratios(samples, 0.0);
    parallel_for(samples, threads, [&](std::size_t s) {
        auto rng = stream_rng(seed, s);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> c(basis->size());
        for (double& x : c) x = normal(rng);
        ratios[s] = p_bound_ratio(SpectralField(basis, std::move(c)), cfg);
    });
    return reduce(ratios, 0);
}

}  // namespace qrwave
