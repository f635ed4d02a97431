#include "kfree/homogeneous.hpp"

#include "kfree/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace kfree {

namespace {

void check_data(double h0, double lambda0) {
    if (!(h0 > 0.0) || !std::isfinite(h0)) fail(ErrorCode::InvalidParam, "h0 must be positive");
    if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) fail(ErrorCode::InvalidParam, "lambda0 must be positive");
}

// h0 - lambda0 (n . x - support)
AffinePiece descending_plane(const Vec2& n, double support, double h0, double lambda0) {
    AffinePiece p;
    p.slope = {-lambda0 * n.x(), -lambda0 * n.y(), 0.0};
    p.offset = h0 + lambda0 * support;
    return p;
}

}  // namespace

double HomogeneousSolution::extended(const Vec2& x) const {
    if (omega && omega->contains(x)) return h0;
    return std::max(0.0, surface(x));
}

HomogeneousSolution solve_polytope(const ConvexDomain& omega, double h0, double lambda0) {
    check_data(h0, lambda0);
    HomogeneousSolution sol;
    sol.omega = std::make_shared<ConvexDomain>(omega);
    sol.h0 = h0;
    sol.lambda0 = lambda0;
    sol.source = HomogeneousSource::PolytopeExact;
    if (const auto* poly = omega.as_polygon()) {
        const auto& v = poly->vertices;
        std::vector<AffinePiece> pieces;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Vec2 a = v[i], b = v[(i + 1) % v.size()];
            const Vec2 n = Vec2((b - a).y(), -(b - a).x()).normalized();
            pieces.push_back(descending_plane(n, n.dot(a), h0, lambda0));
            sol.contacts.push_back(0.5 * (a + b));
            sol.normals.push_back(n);
        }
        sol.surface = PLConcaveFunction(2, std::move(pieces));
        sol.n_planes = static_cast<int>(v.size());
        sol.free_boundary = extract_free_boundary(sol);
        return sol;
    }
    if (const auto* poly = omega.as_polytope()) {
        std::vector<AffinePiece> pieces;
        std::vector<Halfspace3> zero_set;
        for (const auto& f : poly->facets) {
            AffinePiece p;
            p.slope = {-lambda0 * f.normal.x(), -lambda0 * f.normal.y(), -lambda0 * f.normal.z()};
            p.offset = h0 + lambda0 * f.offset;
            pieces.push_back(p);
            zero_set.push_back({f.normal, f.offset + h0 / lambda0});
        }
        sol.surface = PLConcaveFunction(3, std::move(pieces));
        sol.n_planes = static_cast<int>(poly->facets.size());
        sol.free_boundary_3d = halfspace_intersection(zero_set);
        return sol;
    }
    fail(ErrorCode::NotAPolytope, "solve_polytope needs a polygon or a 3D polytope");
}

HomogeneousSolution solve_smooth(const ConvexDomain& omega, double h0, double lambda0, int n_planes,
                                 PlanePlacement placement) {
    check_data(h0, lambda0);
    if (n_planes < 8) fail(ErrorCode::TooFewPlanes, "at least 8 support planes are required");
    if (!omega.smooth()) fail(ErrorCode::InvalidParam, "solve_smooth needs a disk, ellipse or sampled boundary");
    HomogeneousSolution sol;
    sol.omega = std::make_shared<ConvexDomain>(omega);
    sol.h0 = h0;
    sol.lambda0 = lambda0;
    sol.source = HomogeneousSource::SmoothApprox;
    sol.n_planes = n_planes;
    std::vector<AffinePiece> pieces;
    for (const auto& b : omega.sample_boundary(n_planes, placement)) {
        pieces.push_back(descending_plane(b.normal, b.normal.dot(b.point), h0, lambda0));
        sol.contacts.push_back(b.point);
        sol.normals.push_back(b.normal);
    }
    sol.surface = PLConcaveFunction(2, std::move(pieces));
    sol.free_boundary = extract_free_boundary(sol);
    return sol;
}

std::vector<Vec2> extract_free_boundary(const HomogeneousSolution& sol) {
    if (sol.dim() != 2) fail(ErrorCode::InvalidParam, "extract_free_boundary is for d = 2");
    const auto& pieces = sol.surface.pieces();
    if (pieces.empty()) fail(ErrorCode::EmptyInput, "no pieces");
    // {u >= 0} = intersection of {a_i . x + b_i >= 0}
    double reach = 0.0;
    for (const auto& p : pieces) {
        const double g = p.gradient2().norm();
        if (g == 0.0) fail(ErrorCode::DegenerateSolution, "flat piece gives an unbounded positivity set");
        reach = std::max(reach, std::abs(p.offset) / g);
    }
    const double r = 4.0 * reach + 1.0;
    ConvexPolygon region = make_box(Vec2(-r, -r), Vec2(r, r), -1);
    std::vector<Halfplane> hps;
    for (std::size_t i = 0; i < pieces.size(); ++i)
        hps.push_back({-pieces[i].gradient2(), pieces[i].offset, static_cast<int>(i)});
    region = clip_polygon(std::move(region), hps);
    if (region.empty()) fail(ErrorCode::DegenerateSolution, "positivity set is empty");
    for (int t : region.edge_tags)
        if (t < 0) fail(ErrorCode::DegenerateSolution, "positivity set is unbounded");
    return simplify_ring(region.vertices, 1e-9);
}

std::vector<EnvelopeVertex> interior_strip_vertices(const HomogeneousSolution& sol, double tol) {
    std::vector<EnvelopeVertex> out;
    for (auto& v : envelope_vertices(sol.surface))
        if (v.height > tol && v.height < sol.h0 - tol) out.push_back(std::move(v));
    return out;
}

std::vector<EnvelopeVertex3> interior_strip_vertices_3d(const HomogeneousSolution& sol, double tol) {
    std::vector<EnvelopeVertex3> out;
    for (auto& v : envelope_vertices_3d(sol.surface))
        if (v.height > tol && v.height < sol.h0 - tol) out.push_back(std::move(v));
    return out;
}

namespace {

// Intersection of the line {g . x = c} with a convex polygon, ordered along t.
std::optional<std::pair<Vec2, Vec2>> chord(const ConvexPolygon& poly, const Vec2& g, double c, const Vec2& t,
                                           double tol) {
    std::vector<Vec2> pts;
    const auto& v = poly.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % v.size()];
        const double fa = g.dot(a) - c, fb = g.dot(b) - c;
        if (std::abs(fa) <= tol) pts.push_back(a);
        if ((fa < -tol && fb > tol) || (fa > tol && fb < -tol)) pts.push_back(a + fa / (fa - fb) * (b - a));
    }
    if (pts.empty()) return std::nullopt;
    auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(),
                                        [&](const Vec2& p, const Vec2& q) { return t.dot(p) < t.dot(q); });
    return std::make_pair(*lo, *hi);
}

double boundary_gap(const ConvexDomain& omega, const Vec2& x) { return std::abs(omega.signed_distance(x)); }

}  // namespace

RuledReport check_ruled(const HomogeneousSolution& sol, int samples, std::uint64_t seed, double tol) {
    if (sol.dim() != 2) fail(ErrorCode::InvalidParam, "check_ruled is for d = 2");
    RuledReport rep;
    rep.tolerance = tol;
    const auto& fb = sol.free_boundary;
    Vec2 lo = fb.front(), hi = fb.front();
    for (const auto& p : fb) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Box2 box{lo - Vec2::Ones(), hi + Vec2::Ones()};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());

    // a few degenerate samples exactly on the free boundary
    std::vector<Vec2> points;
    const int on_boundary = std::min<int>(samples / 10, static_cast<int>(fb.size()));
    for (int k = 0; k < on_boundary; ++k) {
        const std::size_t i = static_cast<std::size_t>(k) * fb.size() / static_cast<std::size_t>(on_boundary);
        points.push_back(0.5 * (fb[i] + fb[(i + 1) % fb.size()]));
    }
    int guard = 0;
    while (static_cast<int>(points.size()) < samples && guard++ < 1000 * samples) {
        const Vec2 x(ux(rng), uy(rng));
        if (sol.omega->contains(x)) continue;
        const double h = sol.surface(x);
        if (h < 0.0 || h > sol.h0) continue;
        points.push_back(x);
    }

    const double hscale = std::max(1.0, sol.h0);
    for (const Vec2& x : points) {
        RuledSegment seg;
        seg.sample = x;
        const double height = std::max(0.0, sol.surface(x));
        const std::size_t k = sol.surface.active_piece(x);
        const AffinePiece& piece = sol.surface.pieces()[k];
        const Vec2 grad = piece.gradient2();
        const Vec2 t = perp(grad).normalized();
        ConvexPolygon band = active_region(sol.surface, k, box);
        // 0 <= piece <= h0
        band = clip_polygon(band, Halfplane{-grad, piece.offset, -2});
        band = clip_polygon(band, Halfplane{grad, sol.h0 - piece.offset, -3});
        const double ctol = 1e-10 * hscale;
        const auto top = chord(band, grad, sol.h0 - piece.offset, t, ctol);
        const auto bottom = chord(band, grad, -piece.offset, t, ctol);
        const auto level = chord(band, grad, height - piece.offset, t, ctol);
        bool ok = top && bottom && level;
        if (ok) {
            const double span = (level->second - level->first).norm();
            const double mu = span > 1e-14 ? std::clamp(t.dot(x - level->first) / t.dot(level->second - level->first), 0.0, 1.0)
                                           : 0.5;
            seg.top = top->first + mu * (top->second - top->first);
            seg.bottom = bottom->first + mu * (bottom->second - bottom->first);
            for (int q = 0; q <= 20; ++q) {
                const double s = q / 20.0;
                const Vec2 p = seg.top + s * (seg.bottom - seg.top);
                const double linear = (1.0 - s) * sol.h0;
                seg.deviation = std::max(seg.deviation, std::abs(sol.surface(p) - linear));
            }
            // the sample itself must lie on the segment
            const Vec2 d = seg.bottom - seg.top;
            const double off = d.norm() > 0.0 ? std::abs(cross(d.normalized(), x - seg.top)) : (x - seg.top).norm();
            seg.deviation = std::max(seg.deviation, off * grad.norm());
            seg.boundary_gap = boundary_gap(*sol.omega, seg.top);
            ok = seg.deviation <= tol;
        } else {
            seg.deviation = std::numeric_limits<double>::infinity();
        }
        if (!ok) ++rep.failures;
        rep.max_deviation = std::max(rep.max_deviation, seg.deviation);
        rep.max_boundary_gap = std::max(rep.max_boundary_gap, seg.boundary_gap);
        rep.segments.push_back(seg);
    }
    rep.samples = static_cast<int>(rep.segments.size());
    return rep;
}

std::pair<double, double> free_boundary_edge_distances(const HomogeneousSolution& sol, const Vec2& center) {
    const auto& fb = sol.free_boundary;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < fb.size(); ++i) {
        const Vec2 e = fb[(i + 1) % fb.size()] - fb[i];
        const double d = std::abs(cross(e.normalized(), center - fb[i]));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return {lo, hi};
}

double min_turn(const std::vector<Vec2>& ring) {
    double m = std::numeric_limits<double>::infinity();
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e0 = (ring[(i + 1) % n] - ring[i]).normalized();
        const Vec2 e1 = (ring[(i + 2) % n] - ring[(i + 1) % n]).normalized();
        m = std::min(m, cross(e0, e1));
    }
    return m;
}

}  // namespace kfree
