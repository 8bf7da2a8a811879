#pragma once

#include <cstddef>
#include <vector>

#include "qrwave/spectral.hpp"

namespace qrwave {

/// Time-gridded (u, u_t) pairs in spectral coordinates.
struct Trajectory {
    BasisPtr basis;
    std::vector<double> times;
    std::vector<SpectralField> values;
    std::vector<SpectralField> dvalues;

    std::size_t size() const { return times.size(); }

    /// Zero-valued trajectory on the given grid.
    static Trajectory zeros(BasisPtr basis, std::vector<double> times);

    /// Throws std::invalid_argument on length mismatch or a non-monotone grid,
    /// std::range_error on a non-finite entry.
    void validate() const;
};

/// Uniform grid of `count` points on [0, T] (count >= 2), endpoints exact.
std::vector<double> uniform_grid(double T, std::size_t count);

/// max over values/dvalues of sup_t ||a - b|| / sup_t ||b|| (L2 over coefficients).
/// Zero reference with zero difference gives 0.
double relative_sup_distance(const Trajectory& a, const Trajectory& b);

void require_same_grid(const Trajectory& a, const Trajectory& b);

}  // namespace qrwave
