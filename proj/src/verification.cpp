#include "kfree/verification.hpp"

#include "kfree/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace kfree {

void Certificate::add(std::string name, double residual, double tolerance, std::string statement) {
    Check c;
    c.name = std::move(name);
    c.residual = residual;
    c.tolerance = tolerance;
    c.passed = std::isfinite(residual) && residual <= tolerance;
    c.statement = std::move(statement);
    overall = overall && c.passed;
    checks.push_back(std::move(c));
}

const Check* Certificate::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::optional<double> Certificate::quantity(const std::string& name) const {
    for (const auto& [k, v] : quantities)
        if (k == name) return v;
    return std::nullopt;
}

double zero_curvature_value(const ConvexDomain& omega, double h0, double lambda0, const Vec2& x) {
    return h0 - lambda0 * std::max(0.0, omega.signed_distance(x));
}

namespace {

Box2 ring_box(const std::vector<Vec2>& ring) {
    Box2 b{ring.front(), ring.front()};
    for (const auto& p : ring) {
        b.lo = b.lo.cwiseMin(p);
        b.hi = b.hi.cwiseMax(p);
    }
    return b;
}

}  // namespace

Certificate certify_weak_solution(const HomogeneousSolution& sol, const HomogeneousCertOptions& opt) {
    Certificate cert;
    cert.seed = opt.seed;
    if (sol.dim() == 3) {
        // boundary values on every facet vertex, slope on each piece, strip vertices
        const auto& shape = sol.omega->as_polytope()->shape;
        double bmax = 0.0;
        for (const auto& v : shape.vertices) bmax = std::max(bmax, std::abs(sol.surface(v) - sol.h0));
        cert.add("boundary_value", bmax, opt.boundary_tol, "u = h0 on the domain boundary");
        double smax = 0.0;
        for (const auto& p : sol.surface.pieces()) smax = std::max(smax, std::abs(p.gradient3().norm() - sol.lambda0));
        cert.add("free_boundary_slope", smax, opt.slope_tol, "|grad u| = lambda0 on the free boundary");
        cert.add("strip_vertices", static_cast<double>(interior_strip_vertices_3d(sol).size()), 0.0,
                 "no envelope vertex with height strictly between 0 and h0");
        cert.note("free_boundary_vertices", static_cast<double>(sol.free_boundary_3d.vertices.size()));
        return cert;
    }

    const ConvexDomain& omega = *sol.omega;
    const auto& fb = sol.free_boundary;

    // (a) zero measure on the open annulus: envelope vertices there plus random sites
    std::vector<Vec2> sites;
    for (const auto& v : envelope_vertices(sol.surface))
        if (!omega.contains(v.x, 1e-12) && v.height > 0.0) sites.push_back(v.x);
    std::mt19937_64 rng(opt.seed);
    const Box2 box = ring_box(fb);
    std::uniform_real_distribution<double> ux(box.lo.x(), box.hi.x()), uy(box.lo.y(), box.hi.y());
    for (int guard = 0; static_cast<int>(sites.size()) < opt.random_sites && guard < 100 * opt.random_sites; ++guard) {
        const Vec2 x(ux(rng), uy(rng));
        if (!omega.contains(x) && sol.surface(x) > 0.0) sites.push_back(x);
    }
    std::sort(sites.begin(), sites.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    const MAMeasure m = ma_measure(sol.surface, sites, PsiSpec::one());
    cert.add("measure_balance", m.total, opt.measure_tol, "Monge-Ampere measure vanishes on the positivity annulus");
    cert.note("measure_sites", static_cast<double>(sites.size()));

    // (b) boundary values at the plane contacts (and polygon vertices)
    double bmax = 0.0;
    for (const auto& c : sol.contacts) bmax = std::max(bmax, std::abs(sol.surface(c) - sol.h0));
    if (const auto* p = omega.as_polygon())
        for (const auto& v : p->vertices) bmax = std::max(bmax, std::abs(sol.surface(v) - sol.h0));
    cert.add("boundary_value", bmax, opt.boundary_tol, "u = h0 on the domain boundary");

    // (c) slope at the regular free boundary points (edge midpoints)
    double smax = 0.0, zmax = 0.0;
    for (std::size_t i = 0; i < fb.size(); ++i) {
        const Vec2 mid = 0.5 * (fb[i] + fb[(i + 1) % fb.size()]);
        const auto& piece = sol.surface.pieces()[sol.surface.active_piece(mid)];
        smax = std::max(smax, std::abs(piece.gradient2().norm() - sol.lambda0));
        zmax = std::max(zmax, std::abs(sol.surface(mid)));
    }
    cert.add("free_boundary_slope", smax, opt.slope_tol, "|grad u| = lambda0 on the free boundary");
    cert.add("free_boundary_level", zmax, 1e-9 * std::max(1.0, sol.h0), "u = 0 on the free boundary");

    cert.add("strip_vertices", static_cast<double>(interior_strip_vertices(sol).size()), 0.0,
             "no envelope vertex with height strictly between 0 and h0");
    cert.add("free_boundary_convex", is_convex_ccw(fb, false) ? 0.0 : 1.0, 0.0, "free boundary is a convex curve");
    const RuledReport ruled = check_ruled(sol, opt.ruled_samples, opt.seed);
    cert.add("ruled_segments", ruled.max_deviation, ruled.tolerance, "graph is ruled by segments from height h0 to 0");
    cert.note("ruled_boundary_gap", ruled.max_boundary_gap);
    if (omega.smooth() && omega.min_curvature() > 0.0)
        cert.add("strict_convexity", -min_turn(fb), 0.0, "free boundary of a strictly convex domain is strictly convex");
    if (const auto* d = omega.as_disk()) {
        const auto [lo, hi] = free_boundary_edge_distances(sol, d->center);
        const double want = d->radius + sol.h0 / sol.lambda0;
        cert.add("rolling_radius", std::max(std::abs(lo - want), std::abs(hi - want)), 1e-6,
                 "free boundary of a disk is the circle of radius R + h0 / lambda0");
        cert.note("free_boundary_radius", 0.5 * (lo + hi));
    }
    return cert;
}

std::vector<bool> regular_nodes(const std::vector<Vec2>& ring, double threshold_deg) {
    const std::size_t n = ring.size();
    std::vector<double> turn(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = ring[(i + n - 1) % n], b = ring[i], c = ring[(i + 1) % n];
        const Vec2 e0 = b - a, e1 = c - b;
        turn[i] = std::atan2(cross(e0, e1), e0.dot(e1));
    }
    std::vector<bool> out(n);
    const double thr = threshold_deg * M_PI / 180.0;
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::abs(turn[i] - 0.5 * (turn[(i + n - 1) % n] + turn[(i + 1) % n])) < thr;
    return out;
}

Certificate certify_grid(const AnnulusGrid& grid, const ConvexDomain& omega, double h0, double lambda0, double K0,
                         const PsiSpec& psi, const EllipticCertOptions& opt) {
    Certificate cert;
    cert.seed = opt.seed;
    const NodalCells cells = nodal_cells(grid, psi, 2.0 * lambda0, true);
    double num = 0.0, den = 0.0;
    int empty = 0;
    for (int i = 0; i < grid.size(); ++i) {
        if (!grid.interior(i)) continue;
        const auto ui = static_cast<std::size_t>(i);
        if (cells.cells[ui].empty()) ++empty;
        num += std::abs(cells.masses[ui] - K0 * cells.areas[ui]);
        den += K0 * cells.areas[ui];
    }
    cert.add("measure_balance", den > 0.0 ? num / den : std::numeric_limits<double>::infinity(), opt.measure_tol,
             "psi-weighted Monge-Ampere mass equals K0 times area at every interior node");
    cert.add("concave_admissible", static_cast<double>(empty), 0.0, "every interior subdifferential cell is nonempty");

    double bmax = 0.0;
    for (int s = 0; s < grid.sectors; ++s)
        bmax = std::max({bmax, std::abs(grid.value(s, 0) - h0), std::abs(grid.value(s, grid.rings))});
    cert.add("boundary_value", bmax, 1e-12, "u = h0 on the domain boundary and u = 0 on the free boundary");

    const auto g = free_boundary_gradients(grid);
    const auto regular = regular_nodes(grid.free_boundary(), opt.regular_turn_deg);
    double smax = 0.0;
    int nreg = 0;
    for (std::size_t s = 0; s < g.size(); ++s) {
        if (!regular[s]) continue;
        ++nreg;
        smax = std::max(smax, std::abs(g[s] - lambda0) / lambda0);
    }
    cert.add("free_boundary_slope", smax, opt.slope_tol, "|grad u| = lambda0 at regular free boundary points");
    cert.note("regular_free_boundary_nodes", nreg);

    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.size(); ++i) {
        const Vec2 x = grid.node(i);
        worst = std::min(worst, grid.values[static_cast<std::size_t>(i)] - zero_curvature_value(omega, h0, lambda0, x));
    }
    cert.add("dominates_zero_curvature", std::max(0.0, -worst), opt.comparison_tol,
             "solution lies above the zero-curvature solution at every node");

    double emax = -std::numeric_limits<double>::infinity();
    for (double e : hessian_max_eigenvalues(grid))
        if (!std::isnan(e)) emax = std::max(emax, e);
    cert.add("strict_concavity", emax, 0.0, "discrete Hessian is negative definite away from the free boundary");
    cert.note("hessian_margin", -emax);

    const auto fb = grid.free_boundary();
    if (const auto* d = omega.as_disk()) {
        double mean = 0.0, var = 0.0;
        for (const auto& p : fb) mean += (p - d->center).norm();
        mean /= static_cast<double>(fb.size());
        for (const auto& p : fb) var += std::pow((p - d->center).norm() - mean, 2);
        const double rsd = std::sqrt(var / static_cast<double>(fb.size())) / mean;
        cert.add("radial_symmetry", rsd, opt.symmetry_tol, "free boundary of a disk is a circle");
        cert.note("free_boundary_radius", mean);
    }
    cert.add("free_boundary_convex", is_convex_ccw(fb, false) ? 0.0 : 1.0, 0.0, "free boundary is a convex curve");
    return cert;
}

Certificate certify_weak_solution(const EllipticSolution& sol, const EllipticCertOptions& opt) {
    if (!sol.converged) {
        Certificate cert;
        cert.seed = opt.seed;
        cert.add("converged", 1.0, 0.0, "trial free boundary iteration converged");
        return cert;
    }
    return certify_grid(sol.grid, *sol.omega, sol.h0, sol.lambda0, sol.K0, sol.psi, opt);
}

Certificate certify_comparison(const HomogeneousSolution& inner, const HomogeneousSolution& outer, int samples,
                               std::uint64_t seed) {
    if (inner.dim() != 2 || outer.dim() != 2) fail(ErrorCode::InvalidParam, "comparison is for d = 2");
    for (const auto& p : inner.omega->boundary_polygon(1024))
        if (!outer.omega->contains(p, 1e-12)) fail(ErrorCode::DomainsNotNested, "inner domain is not contained in the outer one");
    Certificate cert;
    cert.seed = seed;
    double spill = 0.0;
    for (const auto& v : inner.free_boundary) spill = std::max(spill, signed_distance(outer.free_boundary, v));
    cert.add("hull_containment", std::max(0.0, spill), 1e-9, "inner free boundary hull lies inside the outer one");

    const Box2 box = ring_box(outer.free_boundary);
    const Vec2 pad = 0.1 * (box.hi - box.lo);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(box.lo.x() - pad.x(), box.hi.x() + pad.x());
    std::uniform_real_distribution<double> uy(box.lo.y() - pad.y(), box.hi.y() + pad.y());
    int violations = 0;
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const Vec2 x(ux(rng), uy(rng));
        const double a = std::min(inner.h0, inner.extended(x));
        const double b = std::min(outer.h0, outer.extended(x));
        if (a > b + 1e-12) ++violations;
        worst = std::max(worst, a - b);
    }
    cert.add("ordered_solutions", static_cast<double>(violations), 0.0, "extended solutions are ordered pointwise");
    cert.note("max_excess", worst);
    cert.note("samples", samples);
    return cert;
}

Certificate certify_ot_mass(const EllipticSolution& sol, std::optional<double> k0_override, double tol) {
    if (sol.psi.kind != PsiSpec::Kind::One) fail(ErrorCode::WrongPsi, "transport mass identity needs psi = one");
    Certificate cert;
    if (!sol.converged) {
        cert.add("converged", 1.0, 0.0, "trial free boundary iteration converged");
        return cert;
    }
    const double K = k0_override.value_or(sol.K0);
    const double annulus = signed_area(sol.grid.free_boundary()) - signed_area(sol.grid.inner_boundary());
    const auto outer = boundary_gradient_images(sol.grid, true);
    const auto inner = boundary_gradient_images(sol.grid, false);
    const double image = signed_area(outer) - signed_area(inner);
    const double transported = image / K;
    cert.add("ot_mass_identity", std::abs(annulus - transported) / annulus, tol,
             "annulus area equals gradient image area divided by K0");
    cert.note("annulus_area", annulus);
    cert.note("gradient_image_area_over_K0", transported);

    // interior cells: summed psi mass over K0 against summed node areas
    const NodalCells cells = nodal_cells(sol.grid, sol.psi, 2.0 * sol.lambda0, true);
    double mass = 0.0, area = 0.0;
    for (std::size_t i = 0; i < cells.masses.size(); ++i) {
        mass += cells.masses[i];
        area += cells.areas[i];
    }
    cert.note("interior_cell_mass_over_K0", mass / K);
    cert.note("interior_node_area", area);
    return cert;
}

AnnulusGrid sample_profile(const ConvexDomain& disk, double h0, double r_fb,
                           const std::function<double(double)>& profile, int sectors, int rings, int stencil) {
    const auto* d = disk.as_disk();
    if (!d) fail(ErrorCode::InvalidParam, "radial profiles live on disks");
    AnnulusGrid g = make_annulus(disk, h0, sectors, rings, stencil, std::vector<double>(static_cast<std::size_t>(sectors), r_fb - d->radius));
    for (int i = 0; i < g.size(); ++i)
        if (g.interior(i)) g.values[static_cast<std::size_t>(i)] = profile((g.node(i) - d->center).norm());
    return g;
}

}  // namespace kfree
