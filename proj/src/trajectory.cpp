#include "qrwave/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qrwave {

Trajectory Trajectory::zeros(BasisPtr basis, std::vector<double> times) {
    Trajectory traj;
    traj.basis = basis;
    traj.values.assign(times.size(), SpectralField(basis));
    traj.dvalues.assign(times.size(), SpectralField(basis));
    traj.times = std::move(times);
    return traj;
}

void Trajectory::validate() const {
    if (!basis) throw std::invalid_argument("Trajectory: null basis");
    if (values.size() != times.size() || dvalues.size() != times.size()) {
        throw std::invalid_argument("Trajectory: values/dvalues/times length mismatch");
    }
    if (times.size() >= 2) {
        const bool up = times[1] > times[0];
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (up ? !(times[i] > times[i - 1]) : !(times[i] < times[i - 1])) {
                throw std::invalid_argument("Trajectory: time grid is not strictly monotone");
            }
        }
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!values[i].all_finite() || !dvalues[i].all_finite()) {
            throw std::range_error("Trajectory: non-finite entry at t = " + std::to_string(times[i]));
        }
    }
}

std::vector<double> uniform_grid(double T, std::size_t count) {
    if (!(T > 0.0)) throw std::invalid_argument("uniform_grid: T must be positive");
    if (count < 2) throw std::invalid_argument("uniform_grid: need at least two points");
    std::vector<double> grid(count);
    const double n = static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) grid[i] = T * (static_cast<double>(i) / n);
    grid.back() = T;
    return grid;
}

void require_same_grid(const Trajectory& a, const Trajectory& b) {
    if (a.times.size() != b.times.size()) throw std::invalid_argument("trajectories have different grid sizes");
    for (std::size_t i = 0; i < a.times.size(); ++i) {
        if (a.times[i] != b.times[i]) throw std::invalid_argument("trajectories have different time grids");
    }
    if (!(*a.basis == *b.basis)) throw std::invalid_argument("trajectories live on different bases");
}

double relative_sup_distance(const Trajectory& a, const Trajectory& b) {
    require_same_grid(a, b);
    auto one = [&](const std::vector<SpectralField>& x, const std::vector<SpectralField>& y) {
        double diff = 0.0;
        double ref = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            diff = std::max(diff, norm_l2(x[i] - y[i]));
            ref = std::max(ref, norm_l2(y[i]));
        }
        if (diff == 0.0) return 0.0;
        return ref > 0.0 ? diff / ref : std::numeric_limits<double>::infinity();
    };
    return std::max(one(a.values, b.values), one(a.dvalues, b.dvalues));
}

}  // namespace qrwave
