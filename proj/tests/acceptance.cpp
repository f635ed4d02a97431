// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "kfree/cli_io.hpp"
#include "kfree/elliptic.hpp"
#include "kfree/error.hpp"
#include "kfree/homogeneous.hpp"
#include "kfree/oracles.hpp"
#include "kfree/subdifferential.hpp"
#include "kfree/verification.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace kfree;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "!") + what;
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_radius(const std::vector<Vec2>& ring, const Vec2& c) {
    double m = 0.0;
    for (const auto& p : ring) m += (p - c).norm();
    return m / static_cast<double>(ring.size());
}

double relative_sd(const std::vector<Vec2>& ring, const Vec2& c) {
    const double m = mean_radius(ring, c);
    double v = 0.0;
    for (const auto& p : ring) v += std::pow((p - c).norm() - m, 2);
    return std::sqrt(v / static_cast<double>(ring.size())) / m;
}

Outcome cone_oracle() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve_smooth(ConvexDomain::disk(Vec2::Zero(), 1.0), 1.0, 2.0, 256);
    double hd = 0.0;
    for (const auto& v : sol.free_boundary) hd = std::max(hd, std::abs(v.norm() - 1.5));
    // edges are tangent to the circle, so vertices carry the full deviation
    const auto [lo, hi] = free_boundary_edge_distances(sol, Vec2::Zero());
    hd = std::max({hd, std::abs(lo - 1.5), std::abs(hi - 1.5)});
    const double t = seconds_since(t0);
    o.require(hd < 5e-3, "hausdorff " + fmt("%.3e", hd));
    o.require(t < 1.0, "time " + fmt("%.3f", t) + " s");
    return o;
}

Outcome polytope_structure() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(kDefaultSeed);
    std::uniform_real_distribution<double> ang(0.0, 2 * M_PI), rad(0.5, 2.0), U(-4.0, 4.0);
    double worst_mass = 0.0;
    std::size_t strip = 0;
    for (int i = 0; i < 20; ++i) {
        std::vector<Vec2> pts;
        for (int k = 0; k < 12; ++k) {
            const double a = ang(rng), r = rad(rng);
            pts.emplace_back(r * std::cos(a), r * std::sin(a));
        }
        const auto omega = ConvexDomain::polygon(simplify_ring(convex_hull(pts)));
        const auto sol = solve_polytope(omega, 1.0, 1.5);
        strip += interior_strip_vertices(sol).size();
        std::vector<Vec2> sites;
        for (const auto& v : envelope_vertices(sol.surface))
            if (v.height > 0.0 && v.height < 1.0 && !omega.contains(v.x)) sites.push_back(v.x);
        while (sites.size() < 200) {
            const Vec2 x(U(rng), U(rng));
            const double h = sol.surface(x);
            if (h > 0.0 && h < 1.0 && !omega.contains(x)) sites.push_back(x);
        }
        worst_mass = std::max(worst_mass, ma_measure(sol.surface, sites, PsiSpec::one()).total);
    }
    const double t = seconds_since(t0);
    o.require(worst_mass < 1e-8, "max annulus mass " + fmt("%.3e", worst_mass));
    o.require(strip == 0, "strip vertices " + std::to_string(strip));
    o.require(t < 5.0, "time " + fmt("%.3f", t) + " s");
    return o;
}

Outcome monotone_approximation() {
    Outcome o;
    std::mt19937_64 rng(kDefaultSeed);
    std::uniform_real_distribution<double> U(-2.5, 2.5);
    int violations = 0;
    for (const auto& omega : {ConvexDomain::disk(Vec2::Zero(), 1.0), ConvexDomain::ellipse(Vec2::Zero(), 1.0, 0.6, 0.3)}) {
        const auto u16 = solve_smooth(omega, 1.0, 2.0, 16);
        const auto u64 = solve_smooth(omega, 1.0, 2.0, 64);
        const auto u256 = solve_smooth(omega, 1.0, 2.0, 256);
        for (int i = 0; i < 1000; ++i) {
            const Vec2 x(U(rng), U(rng));
            violations += u64.surface(x) > u16.surface(x) || u256.surface(x) > u64.surface(x);
        }
    }
    o.require(violations == 0, "violations " + std::to_string(violations) + " of 2000 points");
    return o;
}

Outcome comparison() {
    Outcome o;
    auto solve = [](const ConvexDomain& d) { return solve_smooth(d, 1.0, 2.0, 256, PlanePlacement::NormalAngle); };
    const auto unit = solve(ConvexDomain::disk(Vec2::Zero(), 1.0));
    const auto pairs = {
        std::pair{solve(ConvexDomain::disk(Vec2(0.2, 0.1), 0.5)), unit},
        std::pair{unit, solve(ConvexDomain::disk(Vec2::Zero(), 1.2))},
        std::pair{unit, solve(ConvexDomain::ellipse(Vec2::Zero(), 1.3, 1.05, 0.2))},
        std::pair{solve(ConvexDomain::disk(Vec2(0.1, 0.0), 0.6)), solve(ConvexDomain::ellipse(Vec2::Zero(), 1.0, 0.8, 0.5))},
    };
    double violations = 0.0, spill = 0.0;
    for (const auto& [inner, outer] : pairs) {
        const auto c = certify_comparison(inner, outer, 1000);
        violations += c.find("ordered_solutions")->residual;
        spill = std::max(spill, c.find("hull_containment")->residual);
        o.pass = o.pass && c.overall;
    }
    o.require(violations == 0.0, "ordering violations " + fmt("%.0f", violations));
    o.require(spill <= 1e-9, "hull spill " + fmt("%.3e", spill));
    return o;
}

Outcome paraboloid_case(const EllipticSolution& sol, double t) {
    Outcome o;
    o.require(sol.converged, "converged");
    const double r = mean_radius(sol.free_boundary, Vec2::Zero());
    o.require(std::abs(r - std::sqrt(5.0)) / std::sqrt(5.0) < 1e-2, "radius " + fmt("%.6f", r));
    o.require(sol.fb_gradient_residual < 1e-3, "slope residual " + fmt("%.3e", sol.fb_gradient_residual));
    o.require(sol.ma_residual < 1e-3, "measure residual " + fmt("%.3e", sol.ma_residual));
    o.require(t < 60.0, "time " + fmt("%.2f", t) + " s");
    return o;
}

Outcome log_case() {
    Outcome o;
    struct Tuple {
        double R0, h0, lambda0, K0;
    };
    double worst = 0.0;
    for (const Tuple& t : {Tuple{1.0, 1.0, 2.0, 0.1}, Tuple{1.0, 1.0, 2.0, 0.6}, Tuple{1.0, 1.0, 2.0, 1.4},
                           Tuple{0.8, 0.5, 1.5, 0.5}, Tuple{1.5, 1.0, 2.0, 0.3}}) {
        const auto sol = solve_free_boundary(ConvexDomain::disk(Vec2::Zero(), t.R0), t.h0, t.lambda0, t.K0, PsiSpec::one());
        const double shot = radial_shoot(2, t.R0, t.h0, t.lambda0, t.K0, PsiSpec::one()).r_fb;
        const auto cf = radial_case2_d2(t.R0, t.h0, t.lambda0, t.K0);
        o.pass = o.pass && sol.converged && std::abs(cf.profile.A) > 1e-6 && cf.existence.exists == cf.existence.rmax_test_holds;
        worst = std::max(worst, std::abs(mean_radius(sol.free_boundary, Vec2::Zero()) - shot) / shot);
    }
    o.require(worst < 1e-2, "max relative radius gap " + fmt("%.3e", worst));
    int flag_mismatch = 0;
    for (double K : {0.05, 0.5, 1.0, 2.0, 3.0, 4.0})
        for (double h : {0.2, 1.0, 2.0, 5.0}) {
            const auto e = case2_existence(1.0, h, 2.0, K);
            flag_mismatch += e.exists != e.rmax_test_holds;
        }
    o.require(flag_mismatch == 0, "existence flag mismatches " + std::to_string(flag_mismatch));
    const auto p1 = radial_case1(2, 1.0, 1.0, 0.25);
    const double gap = std::abs(radial_shoot(2, 1.0, 1.0, p1.lambda0, 0.25, PsiSpec::one()).r_fb - p1.r_fb);
    o.require(gap < 1e-8, "shooting vs paraboloid " + fmt("%.3e", gap));
    return o;
}

Outcome nonexistence() {
    Outcome o;
    const auto e = case2_existence(1.0, 5.0, 2.0, 1.0);
    o.require(!e.rmax_test_holds, "radial bound violated at (1, 5, 2, 1)");
    RunConfig cfg;
    cfg.h0 = 5.0;
    cfg.lambda0 = 2.0;
    cfg.K0 = 1.0;
    cfg.psi = "one";
    cfg.solver = "elliptic";
    const auto dir = std::filesystem::temp_directory_path() / "kfree_acceptance";
    const auto rep = run(cfg, dir / "nonexistence");
    o.require(rep.exit_code == 2, "exit code " + std::to_string(rep.exit_code));

    cfg.h0 = 1.0;
    cfg.sweep.K0 = std::vector<double>{};
    for (int i = 0; i <= 60; ++i) cfg.sweep.K0->push_back(1.5 + 1e-3 * i);
    cfg.sweep.evaluate_only = true;
    const auto table = sweep(cfg, dir / "sweep");
    const double bound = std::pow(std::sqrt(5.0) - 1.0, 2);
    int wrong = 0;
    double last_true = 0.0, first_false = 1e300;
    for (const auto& row : table.rows) {
        const bool holds = row.curvature_condition == "true";
        wrong += holds != (row.K0 <= bound);
        if (holds) last_true = std::max(last_true, row.K0);
        else first_false = std::min(first_false, row.K0);
    }
    o.require(wrong == 0, "flip between " + fmt("%.3f", last_true) + " and " + fmt("%.3f", first_false) + ", bound " +
                              fmt("%.6f", bound));
    return o;
}

Outcome transport_mass(const EllipticSolution& sol) {
    Outcome o;
    const auto c = certify_ot_mass(sol);
    const double a = c.quantity("annulus_area").value_or(NAN);
    const double b = c.quantity("gradient_image_area_over_K0").value_or(NAN);
    o.require(std::abs(a - 4 * M_PI) / (4 * M_PI) < 1e-2, "annulus " + fmt("%.5f", a));
    o.require(std::abs(b - 4 * M_PI) / (4 * M_PI) < 1e-2, "image / K0 " + fmt("%.5f", b));
    return o;
}

Outcome supersolution() {
    Outcome o;
    const auto disk = build_supersolution(ConvexDomain::disk(Vec2::Zero(), 1.0), 1.0, 2.0, 1.0, PsiSpec::one(), 64);
    double slope_gap = 0.0;
    for (int k = 0; k < 64; ++k) {
        const Vec2 dir(std::cos(0.1 * k), std::sin(0.1 * k));
        const double t = disk.ray_exit(Vec2::Zero(), dir);
        slope_gap = std::max(slope_gap, std::abs(disk.gradient(t * dir).norm() - 2.0));
    }
    o.require(std::pow(2 * disk.alpha, 2) >= 1.0, "disk (2 alpha)^2 " + fmt("%.6f", std::pow(2 * disk.alpha, 2)));
    o.require(slope_gap < 1e-12, "disk slope gap " + fmt("%.1e", slope_gap));

    const auto omega = ConvexDomain::ellipse(Vec2::Zero(), 1.0, 0.8, 0.3);
    const auto ell = build_supersolution(omega, 1.0, 2.0, 0.1, PsiSpec::one(), 256);
    o.require(std::pow(2 * ell.alpha, 2) >= 0.1, "ellipse (2 alpha)^2 " + fmt("%.6f", std::pow(2 * ell.alpha, 2)));
    std::mt19937_64 rng(kDefaultSeed);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    int checked = 0, violations = 0;
    while (checked < 1000) {
        const Vec2 x(U(rng), U(rng));
        if (omega.contains(x)) continue;
        const double base = zero_curvature_value(omega, 1.0, 2.0, x);
        if (base <= 0.0) continue;
        violations += ell(x) < base - 1e-12;
        ++checked;
    }
    o.require(violations == 0, "domination violations " + std::to_string(violations) + " of 1000");
    return o;
}

Outcome symmetry(const EllipticSolution& parab) {
    Outcome o;
    double rsd = relative_sd(parab.free_boundary, Vec2::Zero());
    const auto other = solve_free_boundary(ConvexDomain::disk(Vec2(0.3, -0.2), 1.0), 1.0, 2.0, 0.6, PsiSpec::one());
    rsd = std::max(rsd, relative_sd(other.free_boundary, Vec2(0.3, -0.2)));
    o.require(rsd < 1e-2, "max radius rsd " + fmt("%.3e", rsd));

    const double t = 1.234;
    const auto a = solve_free_boundary(ConvexDomain::ellipse(Vec2::Zero(), 1.0, 0.8, 0.0), 1.0, 2.0, 0.1, PsiSpec::one());
    const auto b = solve_free_boundary(ConvexDomain::ellipse(Vec2::Zero(), 1.0, 0.8, t), 1.0, 2.0, 0.1, PsiSpec::one());
    double dx = 0.0, du = 0.0;
    const double c = std::cos(t), s = std::sin(t);
    for (int i = 0; i < a.grid.size(); ++i) {
        const Vec2 p = a.grid.node(i);
        dx = std::max(dx, (Vec2(c * p.x() - s * p.y(), s * p.x() + c * p.y()) - b.grid.node(i)).norm());
        du = std::max(du, std::abs(a.grid.values[static_cast<std::size_t>(i)] - b.grid.values[static_cast<std::size_t>(i)]));
    }
    o.require(a.converged && b.converged, "rotated solves converged");
    o.require(std::max(dx, du) < 1e-6, "rotation gap nodes " + fmt("%.1e", dx) + " heights " + fmt("%.1e", du));
    return o;
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw ") + e.what();
        }
        failed += !o.pass;
        std::printf("%s %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };

    const auto t0 = std::chrono::steady_clock::now();
    const auto parab = solve_free_boundary(ConvexDomain::disk(Vec2::Zero(), 1.0), 1.0, 0.5 * std::sqrt(5.0), 0.25,
                                           PsiSpec::one());
    const double parab_time = seconds_since(t0);

    report(1, "cone oracle", cone_oracle);
    report(2, "polytope structure", polytope_structure);
    report(3, "monotone approximation", monotone_approximation);
    report(4, "comparison principle", comparison);
    report(5, "paraboloid radial case", [&] { return paraboloid_case(parab, parab_time); });
    report(6, "log radial case", log_case);
    report(7, "nonexistence regime", nonexistence);
    report(8, "transport mass identity", [&] { return transport_mass(parab); });
    report(9, "super-solution", supersolution);
    report(10, "radial symmetry", [&] { return symmetry(parab); });
    std::printf("%d of 10 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
