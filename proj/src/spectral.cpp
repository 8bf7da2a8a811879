#include "qrwave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qrwave {

EigenBasis::EigenBasis(double length, std::size_t n_modes) : length_(length) {
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw std::invalid_argument("EigenBasis: domain length must be positive and finite");
    }
    if (n_modes == 0) {
        throw std::invalid_argument("EigenBasis: need at least one mode");
    }
    // (pi/L)^2 first so that L = pi gives integer squares exactly.
    const double base = std::numbers::pi / length;
    const double base_sq = base * base;
    eigenvalues_.resize(n_modes);
    for (std::size_t p = 1; p <= n_modes; ++p) {
        const double pd = static_cast<double>(p);
        eigenvalues_[p - 1] = pd * pd * base_sq;
    }
}

double EigenBasis::eigenfunction(std::size_t index, double x) const {
    if (x == 0.0 || x == length_) return 0.0;
    const double p = static_cast<double>(index + 1);
    return std::sqrt(2.0 / length_) * std::sin(p * std::numbers::pi * x / length_);
}

BasisPtr build_basis(double length, std::size_t n_modes) {
    return std::make_shared<const EigenBasis>(length, n_modes);
}

SpectralField::SpectralField(BasisPtr basis) : basis_(std::move(basis)) {
    if (!basis_) throw std::invalid_argument("SpectralField: null basis");
    coeffs_.assign(basis_->size(), 0.0);
}

SpectralField::SpectralField(BasisPtr basis, std::vector<double> coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
    if (!basis_) throw std::invalid_argument("SpectralField: null basis");
    if (coeffs_.size() != basis_->size()) {
        throw std::invalid_argument("SpectralField: expected " + std::to_string(basis_->size()) +
                                    " coefficients, got " + std::to_string(coeffs_.size()));
    }
    if (!all_finite()) throw std::invalid_argument("SpectralField: non-finite coefficient");
}

bool SpectralField::all_finite() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
}

bool SpectralField::shares_basis(const SpectralField& other) const {
    return basis_ == other.basis_ || *basis_ == *other.basis_;
}

void require_same_basis(const SpectralField& a, const SpectralField& b) {
    if (!a.shares_basis(b)) throw std::invalid_argument("spectral fields live on different bases");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    require_same_basis(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    require_same_basis(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(double scale) {
    for (double& c : coeffs_) c *= scale;
    return *this;
}

SpectralField operator+(SpectralField lhs, const SpectralField& rhs) { return lhs += rhs; }
SpectralField operator-(SpectralField lhs, const SpectralField& rhs) { return lhs -= rhs; }
SpectralField operator*(double scale, SpectralField field) { return field *= scale; }

double inner_product(const SpectralField& a, const SpectralField& b) {
    require_same_basis(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

namespace {

// sqrt(sum w_p c_p^2) with a running scale to avoid spurious overflow.
template <typename Weight>
double weighted_norm(const SpectralField& f, Weight weight) {
    const auto mu = f.basis()->eigenvalues();
    double scale = 0.0;
    double ssq = 1.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double term = std::sqrt(weight(mu[i])) * std::abs(f[i]);
        if (term == 0.0) continue;
        if (scale < term) {
            ssq = 1.0 + ssq * (scale / term) * (scale / term);
            scale = term;
        } else {
            ssq += (term / scale) * (term / scale);
        }
    }
    return scale * std::sqrt(ssq);
}

}  // namespace

double norm_l2(const SpectralField& f) {
    return weighted_norm(f, [](double) { return 1.0; });
}

double norm_h1(const SpectralField& f) {
    return weighted_norm(f, [](double mu) { return 1.0 + mu; });
}

double norm_grad(const SpectralField& f) {
    return weighted_norm(f, [](double mu) { return mu; });
}

double log_norm_gevrey(const SpectralField& f, double sigma, double alpha) {
    if (!(sigma > 0.0)) throw std::invalid_argument("norm_gevrey: sigma must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("norm_gevrey: alpha must be nonnegative");
    const auto mu = f.basis()->eigenvalues();
    // log of each squared term, then log-sum-exp
    std::vector<double> logs;
    logs.reserve(f.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0.0) continue;
        const double lt = alpha * std::log(mu[i]) + 2.0 * sigma * mu[i] + 2.0 * std::log(std::abs(f[i]));
        logs.push_back(lt);
        top = std::max(top, lt);
    }
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (double lt : logs) acc += std::exp(lt - top);
    return 0.5 * (top + std::log(acc));
}

double norm_gevrey(const SpectralField& f, double sigma, double alpha) {
    const double log_norm = log_norm_gevrey(f, sigma, alpha);
    const double value = std::exp(log_norm);
    if (!std::isfinite(value)) {
        throw std::range_error("norm_gevrey: weighted norm exceeds double range (log-norm " +
                               std::to_string(log_norm) + "); band-limit the field");
    }
    return value;
}

std::vector<double> synthesize(const SpectralField& f, std::span<const double> x_grid) {
    const EigenBasis& basis = *f.basis();
    std::vector<double> out(x_grid.size(), 0.0);
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
        const double x = x_grid[j];
        if (!(x >= 0.0 && x <= basis.length())) {
            throw std::invalid_argument("synthesize: grid point " + std::to_string(x) + " outside [0, L]");
        }
        double sum = 0.0;
        for (std::size_t p = 0; p < f.size(); ++p) {
            if (f[p] != 0.0) sum += f[p] * basis.eigenfunction(p, x);
        }
        out[j] = sum;
    }
    return out;
}

}  // namespace qrwave
