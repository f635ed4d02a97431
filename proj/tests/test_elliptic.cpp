#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kfree/elliptic.hpp"
#include "kfree/error.hpp"
#include "kfree/homogeneous.hpp"
#include "kfree/oracles.hpp"

#include <cmath>
#include <random>

using namespace kfree;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

const double kParaboloidLambda = 0.5 * std::sqrt(5.0);

/// Annulus on the unit disk with the free boundary pinned at radius r_fb.
AnnulusGrid pinned_annulus(double h0, double r_fb, int sectors = 32, int rings = 16) {
    const auto disk = ConvexDomain::disk(Vec2::Zero(), 1.0);
    return make_annulus(disk, h0, sectors, rings, 3, std::vector<double>(static_cast<std::size_t>(sectors), r_fb - 1.0));
}

Vec2 rotate(const Vec2& x, double t) { return {std::cos(t) * x.x() - std::sin(t) * x.y(), std::sin(t) * x.x() + std::cos(t) * x.y()}; }

}  // namespace

TEST_CASE("curvature bound on the unit disk") {
    const auto disk = ConvexDomain::disk(Vec2::Zero(), 1.0);
    const double bound = std::pow(std::sqrt(5.0) - 1.0, 2);
    const auto at = check_existence_condition(disk, 1.0, 2.0, bound, PsiSpec::one());
    CHECK(at.holds);
    CHECK(at.rhs == doctest::Approx(std::sqrt(5.0) - 1.0).epsilon(1e-14));
    CHECK(2 * at.alpha == doctest::Approx(at.rhs).epsilon(1e-14));
    CHECK(!check_existence_condition(disk, 1.0, 2.0, bound * (1 + 1e-9), PsiSpec::one()).holds);
    CHECK(check_existence_condition(disk, 1.0, 2.0, bound * (1 - 1e-9), PsiSpec::one()).holds);
    CHECK(!check_existence_condition(disk, 1.0, 2.0, 10.0, PsiSpec::one()).holds);
    const auto c1 = check_existence_condition(disk, 1.0, kParaboloidLambda, 0.25, PsiSpec::one());
    CHECK(c1.holds);
    CHECK(c1.margin >= 0.0);
}

TEST_CASE("curvature bound needs positive curvature") {
    const auto sq = ConvexDomain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    CHECK(code_of([&] { check_existence_condition(sq, 1.0, 1.0, 0.1, PsiSpec::one()); }) == ErrorCode::ZeroCurvature);
}

TEST_CASE("paraboloid coefficient solves its quadratic") {
    for (double r0 : {0.5, 1.0, 2.0})
        for (double h0 : {0.1, 1.0})
            for (double l : {0.5, 2.0}) {
                const double a = paraboloid_coefficient(r0, h0, l);
                CHECK(4 * r0 * r0 * a * a + 4 * h0 * a - l * l == doctest::Approx(0.0).scale(l * l));
                CHECK(2 * a * std::sqrt((h0 + a * r0 * r0) / a) == doctest::Approx(l).epsilon(1e-12));
            }
}

TEST_CASE("disk super-solution is a single paraboloid with exact free boundary slope") {
    const auto disk = ConvexDomain::disk(Vec2::Zero(), 1.0);
    const auto sup = build_supersolution(disk, 1.0, 2.0, 1.0, PsiSpec::one(), 64);
    for (const auto& z : sup.centers) CHECK(z.norm() < 1e-12);
    CHECK(std::pow(2 * sup.alpha, 2) >= 1.0 * PsiSpec::one()(2.0));
    for (int k = 0; k < 16; ++k) {
        const Vec2 dir(std::cos(0.4 * k), std::sin(0.4 * k));
        const double t = sup.ray_exit(Vec2::Zero(), dir);
        CHECK(t == doctest::Approx(sup.zero_radius()).epsilon(1e-12));
        CHECK(std::abs(sup(t * dir)) < 1e-12);
        CHECK(sup.gradient(t * dir).norm() == doctest::Approx(2.0).epsilon(1e-12));
    }
    for (const auto& c : sup.contacts) CHECK(sup(c) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ellipse super-solution: boundary value, slopes and the zero-curvature bound") {
    const auto ell = ConvexDomain::ellipse(Vec2(0.1, -0.2), 1.0, 0.8, 0.6);
    const auto sup = build_supersolution(ell, 1.0, 2.0, 0.1, PsiSpec::one(), 256);
    CHECK(std::pow(2 * sup.alpha, 2) >= 0.1);
    for (const auto& c : sup.contacts) CHECK(sup(c) == doctest::Approx(1.0).epsilon(1e-12));
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    int checked = 0;
    while (checked < 1000) {
        const Vec2 x(U(rng), U(rng));
        if (ell.contains(x)) continue;
        const double base = 1.0 - 2.0 * ell.signed_distance(x);
        if (base <= 0.0) continue;
        CHECK(sup(x) >= base - 1e-12);
        ++checked;
    }
    for (const auto& b : ell.sample_boundary(64, PlanePlacement::ArcLength)) {
        const double t = sup.ray_exit(b.point, b.normal);
        CHECK(sup.gradient(b.point + t * b.normal).norm() <= 2.0 + 1e-12);
    }
}

TEST_CASE("super-solution refuses data beyond the bound") {
    const auto disk = ConvexDomain::disk(Vec2::Zero(), 1.0);
    CHECK(code_of([&] { build_supersolution(disk, 1.0, 2.0, 3.0, PsiSpec::one(), 64); }) == ErrorCode::ConditionViolated);
}

TEST_CASE("Dirichlet solve with the paraboloid free boundary reproduces the paraboloid") {
    AnnulusGrid g = pinned_annulus(1.0, std::sqrt(5.0), 64, 32);
    DirichletOptions opt;
    opt.gradient_bound = 2 * kParaboloidLambda;
    const auto rep = ma_dirichlet_solve(g, 0.25, PsiSpec::one(), opt);
    CHECK(rep.max_residual <= 1e-8);
    double worst = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double r = g.node(i).norm();
        worst = std::max(worst, std::abs(g.values[static_cast<std::size_t>(i)] - (1.0 + 0.25 * (1 - r * r))));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("vanishing curvature approaches the cone on the same annulus") {
    const double K = 1e-3;
    AnnulusGrid g = pinned_annulus(1.0, 1.5);
    DirichletOptions opt;
    opt.gradient_bound = 4.0;
    ma_dirichlet_solve(g, K, PsiSpec::one(), opt);
    double worst = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double cone_value = 1.0 - 2.0 * (g.node(i).norm() - 1.0);
        worst = std::max(worst, std::abs(g.values[static_cast<std::size_t>(i)] - cone_value));
    }
    CHECK(worst < 10 * K + 1e-3);
}

TEST_CASE("more curvature bends the concave solution upward") {
    AnnulusGrid low = pinned_annulus(1.0, 1.6), high = pinned_annulus(1.0, 1.6);
    DirichletOptions opt;
    opt.gradient_bound = 4.0;
    ma_dirichlet_solve(low, 0.1, PsiSpec::one(), opt);
    ma_dirichlet_solve(high, 0.3, PsiSpec::one(), opt);
    int violations = 0;
    for (int i = 0; i < low.size(); ++i)
        if (low.interior(i)) violations += high.values[static_cast<std::size_t>(i)] < low.values[static_cast<std::size_t>(i)];
    CHECK(violations == 0);
}

TEST_CASE("Dirichlet solve rejects inconsistent boundary data") {
    AnnulusGrid g = pinned_annulus(1.0, 1.5);
    g.value(3, g.rings) = 0.5;
    DirichletOptions opt;
    opt.gradient_bound = 4.0;
    CHECK(code_of([&] { ma_dirichlet_solve(g, 0.1, PsiSpec::one(), opt); }) == ErrorCode::NonAdmissibleBoundary);
}

TEST_CASE("trial free boundary iteration on the paraboloid data") {
    const auto disk = ConvexDomain::disk(Vec2::Zero(), 1.0);
    const auto sol = solve_free_boundary(disk, 1.0, kParaboloidLambda, 0.25, PsiSpec::one());
    REQUIRE(sol.status == SolveStatus::Converged);
    for (const auto& p : sol.free_boundary) CHECK(std::abs(p.norm() - std::sqrt(5.0)) / std::sqrt(5.0) < 1e-2);
    CHECK(sol.fb_gradient_residual < 1e-3);
    CHECK(sol.ma_residual < 1e-3);
    const auto eig = hessian_max_eigenvalues(sol.grid);
    for (int k = 1; k <= sol.grid.rings - 2; ++k)
        for (int s = 0; s < sol.grid.sectors; ++s) CHECK(eig[static_cast<std::size_t>(sol.grid.index(s, k))] == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("log-case disk matches shooting") {
    const auto disk = ConvexDomain::disk(Vec2::Zero(), 1.0);
    const auto sol = solve_free_boundary(disk, 1.0, 2.0, 0.6, PsiSpec::one());
    REQUIRE(sol.status == SolveStatus::Converged);
    const double r = radial_shoot(2, 1.0, 1.0, 2.0, 0.6, PsiSpec::one()).r_fb;
    double mean = 0.0, sq = 0.0;
    for (const auto& p : sol.free_boundary) mean += p.norm();
    mean /= static_cast<double>(sol.free_boundary.size());
    for (const auto& p : sol.free_boundary) sq += std::pow(p.norm() - mean, 2);
    CHECK(std::abs(mean - r) / r < 1e-2);
    CHECK(std::sqrt(sq / static_cast<double>(sol.free_boundary.size())) / mean < 1e-2);
}

TEST_CASE("gauss weight on a disk matches shooting") {
    const auto disk = ConvexDomain::disk(Vec2::Zero(), 1.0);
    EllipticOptions opt;
    opt.sectors = 32;
    opt.rings = 16;
    const auto sol = solve_free_boundary(disk, 1.0, 1.0, 0.02, PsiSpec::gauss(2), opt);
    REQUIRE(sol.status == SolveStatus::Converged);
    const double r = radial_shoot(2, 1.0, 1.0, 1.0, 0.02, PsiSpec::gauss(2)).r_fb;
    double mean = 0.0;
    for (const auto& p : sol.free_boundary) mean += p.norm();
    mean /= static_cast<double>(sol.free_boundary.size());
    CHECK(std::abs(mean - r) / r < 1e-2);
}

TEST_CASE("ellipse converges with a convex free boundary") {
    const auto ell = ConvexDomain::ellipse(Vec2::Zero(), 1.0, 0.8);
    const auto sol = solve_free_boundary(ell, 1.0, 2.0, 0.1, PsiSpec::one());
    REQUIRE(sol.status == SolveStatus::Converged);
    CHECK(sol.ma_residual < 1e-3);
    CHECK(sol.fb_gradient_residual < 1e-3);
    CHECK(is_convex_ccw(sol.free_boundary, false));
    for (const auto& p : sol.free_boundary) CHECK(!ell.contains(p));
}

TEST_CASE("rotating the domain rotates the solution") {
    const double t = 0.7312;
    EllipticOptions opt;
    opt.sectors = 32;
    opt.rings = 16;
    const auto a = solve_free_boundary(ConvexDomain::ellipse(Vec2::Zero(), 1.0, 0.8, 0.0), 1.0, 2.0, 0.1, PsiSpec::one(), opt);
    const auto b = solve_free_boundary(ConvexDomain::ellipse(Vec2::Zero(), 1.0, 0.8, t), 1.0, 2.0, 0.1, PsiSpec::one(), opt);
    REQUIRE(a.status == SolveStatus::Converged);
    REQUIRE(b.status == SolveStatus::Converged);
    double worst_x = 0.0, worst_u = 0.0;
    for (int i = 0; i < a.grid.size(); ++i) {
        worst_x = std::max(worst_x, (rotate(a.grid.node(i), t) - b.grid.node(i)).norm());
        worst_u = std::max(worst_u, std::abs(a.grid.values[static_cast<std::size_t>(i)] - b.grid.values[static_cast<std::size_t>(i)]));
    }
    CHECK(worst_x < 1e-6);
    CHECK(worst_u < 1e-6);
}

TEST_CASE("data beyond the bound is flagged, not thrown") {
    const auto disk = ConvexDomain::disk(Vec2::Zero(), 1.0);
    const auto sol = solve_free_boundary(disk, 1.0, 2.0, 3.0, PsiSpec::one());
    CHECK(sol.status == SolveStatus::NonexistenceSuspected);
    CHECK(!sol.condition.holds);
    CHECK(!sol.reason.empty());
}
