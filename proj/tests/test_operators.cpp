#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "qrwave/operators.hpp"
#include "qrwave/util.hpp"

using namespace qrwave;
using doctest::Approx;

namespace {

SpectralField single(const BasisPtr& b, std::size_t index, double c) {
    SpectralField f(b);
    f[index] = c;
    return f;
}

SpectralField random_field(const BasisPtr& b, std::uint64_t seed, std::uint64_t stream) {
    auto rng = stream_rng(seed, stream);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> c(b->size());
    for (double& x : c) x = n(rng);
    return SpectralField(b, c);
}

bool within_ulps(double a, double b, int ulps) {
    if (a == b) return true;
    return std::abs(a - b) <= ulps * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
}

}  // namespace

TEST_CASE("reg config") {
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    CHECK(cfg.cutoff == Approx(2.0).epsilon(1e-15));
    CHECK(cfg.rho == Approx(4.0).epsilon(1e-15));
    CHECK(cfg.C0 == 2.0);
    CHECK(cfg.C1 == 1.0);
    auto h = RegConfig::holder_schedule(1e-4);
    CHECK(h.gamma == Approx(100.0).epsilon(1e-14));
    CHECK_THROWS_AS(RegConfig::with_gamma(0.5), std::invalid_argument);
    CHECK_THROWS_AS(RegConfig::holder_schedule(0.0), std::invalid_argument);
    CHECK_THROWS_AS(RegConfig::with_gamma(10.0, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("Q examples") {
    auto b = build_basis(std::numbers::pi, 3);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    CHECK(norm_l2(apply_Q(single(b, 0, 5.0), cfg)) == 0.0);
    auto q = apply_Q(single(b, 1, 1.0), cfg);
    CHECK(q[1] == 8.0);
    CHECK(q[0] == 0.0);

    auto all = RegConfig::with_gamma(1.0);
    CHECK(all.cutoff == 0.0);
    SpectralField h(b, {1.0, -2.0, 3.0});
    auto qa = apply_Q(h, all);
    for (std::size_t p = 0; p < 3; ++p) CHECK(qa[p] == 2.0 * b->eigenvalue(p) * h[p]);
}

TEST_CASE("P examples") {
    auto b = build_basis(std::numbers::pi, 3);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    CHECK(apply_P(single(b, 0, 1.0), cfg)[0] == -2.0);
    CHECK(norm_l2(apply_P(single(b, 1, 1.0), cfg)) == 0.0);
}

TEST_CASE("tie at the cutoff goes to Q") {
    auto b = build_basis(std::numbers::pi, 3);
    RegConfig cfg = RegConfig::with_gamma(std::exp(8.0));
    cfg.cutoff = 4.0;  // exactly mu_2
    CHECK(apply_Q(single(b, 1, 1.0), cfg)[1] == 8.0);
    CHECK(apply_P(single(b, 1, 1.0), cfg)[1] == 0.0);
}

TEST_CASE("stabilization identity, disjointness, linearity") {
    auto b = build_basis(2.3, 40);
    for (double gamma : {1.0, std::exp(2.0), std::exp(4.0), 1e3, 1e12}) {
        auto cfg = RegConfig::with_gamma(gamma);
        for (std::uint64_t s = 0; s < 50; ++s) {
            auto h = random_field(b, 3, s);
            auto g = random_field(b, 4, s);
            auto P = apply_P(h, cfg);
            auto rhs = apply_laplacian_doubled(h) + apply_Q(h, cfg);
            for (std::size_t p = 0; p < h.size(); ++p) CHECK(within_ulps(P[p], rhs[p], 4));
            CHECK(norm_l2(apply_Q(apply_P(h, cfg), cfg)) == 0.0);
            CHECK(norm_l2(apply_P(apply_Q(h, cfg), cfg)) == 0.0);
            auto lin = apply_Q(h + 2.0 * g, cfg);
            auto sep = apply_Q(h, cfg) + 2.0 * apply_Q(g, cfg);
            auto qh = apply_Q(h, cfg);
            auto qg = apply_Q(g, cfg);
            for (std::size_t p = 0; p < h.size(); ++p) {
                const double scale = std::abs(qh[p]) + 2.0 * std::abs(qg[p]);
                CHECK(std::abs(lin[p] - sep[p]) <= 4 * std::numeric_limits<double>::epsilon() * scale);
            }
        }
    }
}

TEST_CASE("monotone cutoff") {
    auto b = build_basis(1.7, 30);
    auto h = random_field(b, 9, 0);
    double prev_q = std::numeric_limits<double>::infinity();
    std::size_t prev_p = 0;
    for (double lg = 0.0; lg <= 40.0; lg += 0.5) {
        auto cfg = RegConfig::with_gamma(std::exp(lg));
        const double q = norm_l2(apply_Q(h, cfg));
        std::size_t active = 0;
        for (double mu : b->eigenvalues()) active += cfg.is_high_mode(mu) ? 0 : 1;
        CHECK(q <= prev_q);
        CHECK(active >= prev_p);
        prev_q = q;
        prev_p = active;
    }
}

TEST_CASE("P bound") {
    auto b = build_basis(std::numbers::pi, 64);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    CHECK(p_bound_ratio(SpectralField(b), cfg) == 0.0);
    // mu = 1.999..., just below the cutoff 2
    auto near = build_basis(std::numbers::pi / std::sqrt(1.9998), 1);
    CHECK(p_bound_ratio(single(near, 0, 1.0), cfg) == Approx(0.99990).epsilon(1e-4));
    for (double gamma : {std::exp(4.0), std::exp(8.0), 1e3}) {
        auto r = verify_P_bound(b, 1000, RegConfig::with_gamma(gamma), 42);
        CHECK(r.pass);
        CHECK(r.samples == 1000);
    }
    CHECK_THROWS_AS(verify_P_bound(b, 10, RegConfig::with_gamma(2.0), 1), std::invalid_argument);
}

TEST_CASE("Q bound single-mode ratio at the cutoff") {
    // ratio = 2 mu gamma / (C0 sqrt(mu) e^{mu}) = sqrt(mu) e^{mu} when gamma = e^{2 mu}
    auto b = build_basis(std::numbers::pi, 3);
    for (std::size_t p = 0; p < 3; ++p) {
        const double mu = b->eigenvalue(p);
        auto cfg = RegConfig::with_gamma(std::exp(2.0 * mu));
        CHECK(q_bound_ratio(single(b, p, 0.37), cfg) == Approx(std::sqrt(mu) * std::exp(mu)).epsilon(1e-12));
    }
    CHECK(q_bound_ratio(SpectralField(b), RegConfig::with_gamma(10.0)) == 0.0);
}

TEST_CASE("Q bound verifier") {
    auto b = build_basis(std::numbers::pi, 64);
    auto cfg = RegConfig::with_gamma(std::exp(4.0));
    auto r1 = verify_Q_bound(b, 200, cfg, 5);
    auto r4 = verify_Q_bound(b, 200, cfg, 5, 1.0, 1.0, 4);
    CHECK(r1.max_ratio == r4.max_ratio);
    CHECK(r1.worst_sample == r4.worst_sample);
    CHECK(std::isfinite(r1.max_ratio));
    // a large C0 makes the estimate hold
    auto loose = RegConfig::with_gamma(std::exp(4.0), 0.0, 1e6);
    CHECK(verify_Q_bound(b, 200, loose, 5).pass);
    auto tight = RegConfig::with_gamma(std::exp(4.0), 0.0, 0.1);
    CHECK_FALSE(verify_Q_bound(b, 200, tight, 5).pass);
    // with a stronger Gevrey weight the estimate holds at C0 = 2
    CHECK(verify_Q_bound(b, 200, cfg, 5, 3.0, 1.0).pass);
    CHECK_THROWS_AS(verify_Q_bound(b, 10, RegConfig::with_gamma(1.0), 1), std::invalid_argument);
}
