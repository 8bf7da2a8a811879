#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "qrwave/errors.hpp"
#include "qrwave/solvers.hpp"
#include "qrwave/util.hpp"

using namespace qrwave;
using doctest::Approx;

namespace {

// basis whose single eigenvalue is mu
BasisPtr mode_basis(double mu) { return build_basis(std::numbers::pi / std::sqrt(mu), 1); }

TerminalData single_terminal(double mu, double a, double da, double T) {
    auto b = mode_basis(mu);
    return {SpectralField(b, {a}), SpectralField(b, {da}), T};
}

TerminalData random_terminal(const BasisPtr& b, double T, std::uint64_t seed) {
    auto rng = stream_rng(seed, 0);
    std::normal_distribution<double> n(0.0, 1.0);
    TerminalData td{SpectralField(b), SpectralField(b), T};
    for (std::size_t p = 0; p < b->size(); ++p) {
        const double w = 1.0 / static_cast<double>((p + 1) * (p + 1));
        td.f0[p] = w * n(rng);
        td.f1[p] = w * n(rng);
    }
    return td;
}

// Independent RK4 in u-variables for a'' + beta a' + kappa a = 0.
std::pair<double, double> rk4_mode(double beta, double kappa, double a, double da, double t0, double t1, int steps) {
    const double h = (t1 - t0) / steps;
    auto f = [&](double y, double z) { return std::pair{z, -beta * z - kappa * y}; };
    for (int i = 0; i < steps; ++i) {
        auto [k1a, k1b] = f(a, da);
        auto [k2a, k2b] = f(a + 0.5 * h * k1a, da + 0.5 * h * k1b);
        auto [k3a, k3b] = f(a + 0.5 * h * k2a, da + 0.5 * h * k2b);
        auto [k4a, k4b] = f(a + h * k3a, da + h * k3b);
        a += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
        da += h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b);
    }
    return {a, da};
}

}  // namespace

TEST_CASE("mode roots") {
    auto low = ModeODE::make(9.0, ModeKind::regularized_low);
    CHECK(low.root1 == -1.0);
    CHECK(low.root2 == -9.0);
    auto high = ModeODE::make(9.0, ModeKind::regularized_high);
    CHECK(high.root2 == 9.0);
    CHECK(ModeODE::make(1.0, ModeKind::forward_original).repeated());
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    CHECK(ModeODE::regularized(1.0, cfg).kind == ModeKind::regularized_low);
    CHECK(ModeODE::regularized(4.0, cfg).kind == ModeKind::regularized_high);
    CHECK_THROWS_AS(ModeODE::make(0.0, ModeKind::forward_original), std::invalid_argument);
}

TEST_CASE("forward solve examples") {
    auto b = mode_basis(2.0);
    const std::vector<double> times{0.0, 0.5};
    auto zero = forward_solve(SpectralField(b), SpectralField(b), 0.5, times);
    CHECK(zero.values[1][0] == 0.0);

    auto tr = forward_solve(SpectralField(b, {1.0}), SpectralField(b, {0.0}), 0.5, times);
    CHECK(tr.values[1][0] == Approx(2 * std::exp(-0.5) - std::exp(-1.0)).epsilon(1e-14));
    CHECK(tr.values[1][0] == Approx(0.84518188).epsilon(1e-8));
    auto [ra, rda] = rk4_mode(3.0, 2.0, 1.0, 0.0, 0.0, 0.5, 2000);
    CHECK(tr.values[1][0] == Approx(ra).epsilon(1e-12));
    CHECK(tr.dvalues[1][0] == Approx(rda).epsilon(1e-12));

    auto one = mode_basis(1.0);
    CHECK(one->eigenvalue(0) == 1.0);
    auto grid = uniform_grid(2.0, 11);
    auto rep = forward_solve(SpectralField(one, {1.0}), SpectralField(one, {-1.0}), 2.0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(rep.values[i][0] == Approx(std::exp(-grid[i])).epsilon(1e-14));
        CHECK(rep.dvalues[i][0] == Approx(-std::exp(-grid[i])).epsilon(1e-14));
    }
    auto [qa, qda] = rk4_mode(2.0, 1.0, 1.0, 0.3, 0.0, 2.0, 4000);
    auto rep2 = forward_solve(SpectralField(one, {1.0}), SpectralField(one, {0.3}), 2.0, grid);
    CHECK(rep2.values.back()[0] == Approx(qa).epsilon(1e-12));
    CHECK(rep2.dvalues.back()[0] == Approx(qda).epsilon(1e-12));
}

TEST_CASE("naive backward examples") {
    const std::vector<double> times{0.0, 0.5};
    auto a = naive_backward_solve(single_terminal(9.0, 1.0, -9.0, 0.5), times);
    CHECK(a.trajectory.values[0][0] == Approx(std::exp(4.5)).epsilon(1e-14));
    CHECK(a.trajectory.values[0][0] == Approx(90.0171).epsilon(1e-6));
    CHECK(a.overflow_modes.empty());
    auto b = naive_backward_solve(single_terminal(9.0, 1.0, -1.0, 0.5), times);
    CHECK(b.trajectory.values[0][0] == Approx(1.6487213).epsilon(1e-7));

    auto big = naive_backward_solve(single_terminal(3000.0, 1.0, -3000.0, 0.5), times);
    REQUIRE(big.overflow_modes.size() == 1);
    CHECK(big.overflow_modes[0] == 1);
    CHECK_FALSE(big.valid[0]);
    CHECK(big.valid[1]);
    CHECK(big.trajectory.values[0][0] == 0.0);

    auto finite = naive_backward_solve(single_terminal(400.0, 1.0, -400.0, 0.5), times);
    CHECK(finite.trajectory.values[0][0] == Approx(std::exp(200.0)).epsilon(1e-12));
}

TEST_CASE("exact inverse of the forward solve") {
    const double T = 0.5;
    auto b = build_basis(std::numbers::pi, 4);  // mu_max T = 8
    auto grid = uniform_grid(T, 51);
    SpectralField u0(b, {1.0, -0.5, 0.25, 0.125});
    SpectralField u1(b, {0.3, 0.2, -0.1, 0.05});
    auto fw = forward_solve(u0, u1, T, grid);
    TerminalData td{fw.values.back(), fw.dvalues.back(), T};
    auto back = naive_backward_solve(td, grid);
    CHECK(relative_sup_distance(back.trajectory, fw) <= 1e-9);
    CHECK(norm_l2(back.trajectory.values[0] - u0) <= 1e-9 * norm_l2(u0));
    CHECK(norm_l2(back.trajectory.dvalues[0] - u1) <= 1e-9 * norm_l2(u1));
}

TEST_CASE("regularized backward examples") {
    const std::vector<double> times{0.0, 0.5};
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto a = regularized_backward_solve(single_terminal(9.0, 1.0, -1.0, 0.5), cfg, times);
    CHECK(a.values[0][0] == Approx(1.6487213).epsilon(1e-7));
    auto b = regularized_backward_solve(single_terminal(9.0, 1.0, 9.0, 0.5), cfg, times);
    CHECK(b.values[0][0] == Approx(std::exp(-4.5)).epsilon(1e-14));
    CHECK(b.values[0][0] == Approx(0.0111090).epsilon(1e-5));
}

TEST_CASE("low-mode transparency") {
    auto b = build_basis(std::numbers::pi, 5);  // mu <= 25
    auto cfg = RegConfig::with_gamma(std::exp(60.0));  // cutoff 30
    auto td = random_terminal(b, 0.5, 3);
    auto grid = uniform_grid(0.5, 41);
    auto reg = regularized_backward_solve(td, cfg, grid);
    auto naive = naive_backward_solve(td, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t p = 0; p < b->size(); ++p) {
            CHECK(reg.values[i][p] == naive.trajectory.values[i][p]);
            CHECK(reg.dvalues[i][p] == naive.trajectory.dvalues[i][p]);
        }
    }
}

TEST_CASE("high modes do not blow up backward") {
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto grid = uniform_grid(0.5, 101);
    for (double mu : {4.0, 9.0, 100.0, 1e4}) {
        for (auto [a, da] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}, std::pair{1.0, -1.0}}) {
            auto tr = regularized_backward_solve(single_terminal(mu, a, da, 0.5), cfg, grid);
            const double d2 = (da + a) / (mu + 1.0);
            const double d1 = a - d2;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                CHECK(std::abs(tr.values[i][0]) <= (std::abs(d1) + std::abs(d2)) * std::exp(0.5) * (1 + 1e-14));
            }
        }
    }
}

TEST_CASE("solvers are linear") {
    auto b = build_basis(2.0, 10);
    auto cfg = RegConfig::with_gamma(std::exp(5.0));
    auto grid = uniform_grid(0.5, 21);
    auto x = random_terminal(b, 0.5, 1);
    auto y = random_terminal(b, 0.5, 2);
    TerminalData sum{x.f0 + 3.0 * y.f0, x.f1 + 3.0 * y.f1, 0.5};
    auto rs = regularized_backward_solve(sum, cfg, grid);
    auto rx = regularized_backward_solve(x, cfg, grid);
    auto ry = regularized_backward_solve(y, cfg, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto lin = rx.values[i] + 3.0 * ry.values[i];
        CHECK(norm_l2(rs.values[i] - lin) <= 1e-13 * (1 + norm_l2(lin)));
    }
}

TEST_CASE("v transform") {
    auto b = build_basis(1.3, 6);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto grid = uniform_grid(0.5, 11);
    auto u = regularized_backward_solve(random_terminal(b, 0.5, 4), cfg, grid);
    auto v = v_transform(u, 3.0, 0.5, VDirection::to_v);
    for (std::size_t p = 0; p < b->size(); ++p) {
        CHECK(v.values.back()[p] == u.values.back()[p]);
    }
    auto back = v_transform(v, 3.0, 0.5, VDirection::from_v);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t p = 0; p < b->size(); ++p) {
            const double eps = std::numeric_limits<double>::epsilon();
            CHECK(std::abs(back.values[i][p] - u.values[i][p]) <= 2 * eps * std::abs(u.values[i][p]));
            const double scale = std::max(std::abs(u.dvalues[i][p]), 3.0 * std::abs(u.values[i][p]));
            CHECK(std::abs(back.dvalues[i][p] - u.dvalues[i][p]) <= 4 * eps * scale);
        }
    }

    auto one = mode_basis(1.0);
    Trajectory c = Trajectory::zeros(one, {0.0, 1.0});
    c.values[0][0] = c.values[1][0] = 1.0;
    auto cv = v_transform(c, 2.0, 1.0, VDirection::to_v);
    CHECK(cv.values[0][0] == Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(cv.dvalues[0][0] == Approx(2 * std::exp(-2.0)).epsilon(1e-15));
}

TEST_CASE("galerkin stepper") {
    const double T = 0.5;
    auto grid = uniform_grid(T, 51);
    auto low = build_basis(std::numbers::pi, 3);
    auto all_low = RegConfig::with_gamma(std::exp(30.0));
    auto td = random_terminal(low, T, 5);
    auto exact = regularized_backward_solve(td, all_low, grid);
    CHECK(relative_sup_distance(galerkin_step_solve(td, all_low, all_low.rho, 1e-4, grid), exact) <= 1e-8);

    TerminalData zero{SpectralField(low), SpectralField(low), T};
    auto z = galerkin_step_solve(zero, all_low, 4.0, 1e-3, grid);
    for (const auto& f : z.values) CHECK(norm_l2(f) == 0.0);

    // fourth order: halving dt cuts the error about 16x
    auto b = build_basis(std::numbers::pi, 8);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto td8 = random_terminal(b, T, 6);
    auto ref = regularized_backward_solve(td8, cfg, grid);
    const double e1 = relative_sup_distance(galerkin_step_solve(td8, cfg, cfg.rho, 5e-3, grid), ref);
    const double e2 = relative_sup_distance(galerkin_step_solve(td8, cfg, cfg.rho, 2.5e-3, grid), ref);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);

    // an unstable step trips the energy detector
    auto wide = build_basis(std::numbers::pi, 40);
    auto tdw = random_terminal(wide, T, 7);
    CHECK_THROWS_AS(galerkin_step_solve(tdw, cfg, cfg.rho, 0.05, grid), DivergenceError);
    CHECK_THROWS_AS(galerkin_step_solve(tdw, cfg, 1.0, 1e-3, grid), std::invalid_argument);
}

TEST_CASE("picard iteration") {
    const double T = 0.5;
    auto grid = uniform_grid(T, 201);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto b = build_basis(std::numbers::pi, 2);  // mu <= 4

    TerminalData zero{SpectralField(b), SpectralField(b), T};
    PicardOptions one;
    one.iterations = 1;
    auto z = picard_solve(zero, cfg, cfg.rho, 2, grid, one);
    for (const auto& f : z.values) CHECK(norm_l2(f) == 0.0);

    // successive differences shrink at least geometrically once past the burn-in
    auto td = random_terminal(b, T, 8);
    std::vector<double> diffs;
    Trajectory prev;
    for (std::size_t m = 1; m <= 60; ++m) {
        PicardOptions opt;
        opt.iterations = m;
        opt.window_contraction = std::numeric_limits<double>::infinity();
        auto cur = picard_solve(td, cfg, cfg.rho, 2, grid, opt);
        if (m > 1) diffs.push_back(relative_sup_distance(cur, prev));
        prev = cur;
    }
    for (std::size_t k = 40; k + 1 < diffs.size(); ++k) {
        if (diffs[k] > 1e-14) CHECK(diffs[k + 1] <= 0.7 * diffs[k]);
    }

    // converged limit matches the stepper
    PicardOptions fine;
    fine.substeps = 128;
    PicardStats stats;
    auto pc = picard_solve(td, cfg, cfg.rho, 2, grid, fine, &stats);
    auto gs = galerkin_step_solve(td, cfg, cfg.rho, 1e-4, grid);
    CHECK(relative_sup_distance(pc, gs) <= 1e-6);
    CHECK(stats.windows >= 2);
}

TEST_CASE("picard divergence detector") {
    const double T = 0.5;
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto b = build_basis(std::numbers::pi, 16);
    auto td = random_terminal(b, T, 9);
    PicardOptions global;
    global.window_contraction = std::numeric_limits<double>::infinity();
    global.iterations = 400;
    CHECK_THROWS_AS(picard_solve(td, cfg, cfg.rho, 16, uniform_grid(T, 11), global), DivergenceError);
}

TEST_CASE("energy") {
    auto b = mode_basis(4.0);
    Trajectory v = Trajectory::zeros(b, {0.0, 0.5});
    for (const auto& s : energy_series(v, 2.0)) CHECK(s.E == 0.0);
    v.values[0][0] = v.values[1][0] = 1.0;
    CHECK(energy_series(v, 2.0)[0].E == Approx(6.0).epsilon(1e-15));
    CHECK_THROWS_AS(energy_series(v, 1.0), std::invalid_argument);

    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto basis = build_basis(std::numbers::pi, 16);
    auto grid = uniform_grid(0.5, 201);
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto td = random_terminal(basis, 0.5, 20 + s);
        auto u = galerkin_step_solve(td, cfg, cfg.rho, 1e-4, grid);
        auto e = energy_series(v_transform(u, cfg.rho, 0.5, VDirection::to_v), cfg.rho);
        for (const auto& x : e) CHECK(x.E >= 0.0);
        CHECK(gronwall_ratio(e, cfg, cfg.rho, 0.5) <= 1.0 + 1e-6);
    }
}
