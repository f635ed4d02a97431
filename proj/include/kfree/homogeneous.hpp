#pragma once

#include "kfree/domain.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace kfree {

enum class HomogeneousSource { PolytopeExact, SmoothApprox };

/// Solution of the zero-curvature problem: the minimum of one support plane
/// per boundary sample (or facet), each descending with slope lambda0.
struct HomogeneousSolution {
    std::shared_ptr<const ConvexDomain> omega;
    double h0 = 0.0;
    double lambda0 = 0.0;
    PLConcaveFunction surface;
    HomogeneousSource source = HomogeneousSource::PolytopeExact;
    int n_planes = 0;
    std::vector<Vec2> contacts;   ///< d = 2: boundary point of each plane (smooth case) or facet midpoint
    std::vector<Vec2> normals;    ///< d = 2: outward normal of each plane
    std::vector<Vec2> free_boundary;   ///< d = 2: CCW polygon of the zero level set
    Polytope3 free_boundary_3d;        ///< d = 3

    int dim() const { return surface.dim(); }

    /// h0 on the closed domain, max(u, 0) outside it.
    double extended(const Vec2& x) const;
};

HomogeneousSolution solve_polytope(const ConvexDomain& omega, double h0, double lambda0);

HomogeneousSolution solve_smooth(const ConvexDomain& omega, double h0, double lambda0, int n_planes,
                                 PlanePlacement placement = PlanePlacement::ArcLength);

/// Zero level set as a closed convex polygon (d = 2). Throws DegenerateSolution
/// when the positivity set is unbounded.
std::vector<Vec2> extract_free_boundary(const HomogeneousSolution& sol);

/// Envelope vertices with height strictly inside (tol, h0 - tol).
std::vector<EnvelopeVertex> interior_strip_vertices(const HomogeneousSolution& sol, double tol = 1e-9);
std::vector<EnvelopeVertex3> interior_strip_vertices_3d(const HomogeneousSolution& sol, double tol = 1e-9);

struct RuledSegment {
    Vec2 sample;
    Vec2 top;      ///< endpoint at height h0
    Vec2 bottom;   ///< endpoint at height 0
    double deviation = 0.0;      ///< max |u - linear interpolant| along the segment
    double boundary_gap = 0.0;   ///< distance of the top endpoint from the domain boundary
};

struct RuledReport {
    int samples = 0;
    int failures = 0;
    double max_deviation = 0.0;
    double max_boundary_gap = 0.0;
    double tolerance = 1e-8;
    std::vector<RuledSegment> segments;
};

/// For random graph points of the annulus (plus a few on the free boundary),
/// finds the segment through the point lying on one envelope piece, from
/// height h0 down to height 0.
RuledReport check_ruled(const HomogeneousSolution& sol, int samples, std::uint64_t seed, double tol = 1e-8);

/// Distances from a center to the free boundary edges: min, max.
std::pair<double, double> free_boundary_edge_distances(const HomogeneousSolution& sol, const Vec2& center);

/// Minimum cross product of consecutive free boundary edges (normalized).
double min_turn(const std::vector<Vec2>& ring);

}  // namespace kfree
