#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace qrwave {

/// Dirichlet Laplacian eigenpairs on (0, L): mu_p = (p pi / L)^2,
/// phi_p(x) = sqrt(2/L) sin(p pi x / L), p = 1..n_modes.
class EigenBasis {
public:
    EigenBasis(double length, std::size_t n_modes);

    double length() const { return length_; }
    std::size_t size() const { return eigenvalues_.size(); }
    std::span<const double> eigenvalues() const { return eigenvalues_; }
    double eigenvalue(std::size_t index) const { return eigenvalues_.at(index); }

    /// phi_{index+1}(x); no range check on x.
    double eigenfunction(std::size_t index, double x) const;

    bool operator==(const EigenBasis& other) const {
        return length_ == other.length_ && eigenvalues_.size() == other.eigenvalues_.size();
    }

private:
    double length_;
    std::vector<double> eigenvalues_;
};

using BasisPtr = std::shared_ptr<const EigenBasis>;

BasisPtr build_basis(double length, std::size_t n_modes);

/// Coefficients <h, phi_p> of a function in an eigenbasis.
class SpectralField {
public:
    explicit SpectralField(BasisPtr basis);  // zero field
    SpectralField(BasisPtr basis, std::vector<double> coeffs);

    const BasisPtr& basis() const { return basis_; }
    std::span<const double> coeffs() const { return coeffs_; }
    std::span<double> coeffs() { return coeffs_; }
    std::size_t size() const { return coeffs_.size(); }
    double operator[](std::size_t i) const { return coeffs_[i]; }
    double& operator[](std::size_t i) { return coeffs_[i]; }

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double scale);

    bool all_finite() const;
    bool shares_basis(const SpectralField& other) const;

private:
    BasisPtr basis_;
    std::vector<double> coeffs_;
};

SpectralField operator+(SpectralField lhs, const SpectralField& rhs);
SpectralField operator-(SpectralField lhs, const SpectralField& rhs);
SpectralField operator*(double scale, SpectralField field);

/// Throws std::invalid_argument unless both fields live on the same basis.
void require_same_basis(const SpectralField& a, const SpectralField& b);

double inner_product(const SpectralField& a, const SpectralField& b);

double norm_l2(const SpectralField& f);
/// Full H^1 norm: sqrt(sum (1 + mu_p) c_p^2).
double norm_h1(const SpectralField& f);
/// ||grad f|| = sqrt(sum mu_p c_p^2).
double norm_grad(const SpectralField& f);
/// sqrt(sum mu_p^alpha e^{2 sigma mu_p} c_p^2), accumulated in log space.
/// Throws std::range_error if the result is not representable.
double norm_gevrey(const SpectralField& f, double sigma, double alpha);
/// Natural log of norm_gevrey; -inf for the zero field. Never overflows.
double log_norm_gevrey(const SpectralField& f, double sigma, double alpha);

/// Physical-space values sum_p c_p phi_p(x); x must lie in [0, L].
std::vector<double> synthesize(const SpectralField& f, std::span<const double> x_grid);

}  // namespace qrwave
