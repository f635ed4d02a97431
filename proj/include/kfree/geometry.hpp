#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kfree {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Relative tolerance for collinearity and duplicate detection.
inline constexpr double kDegeneracyTol = 1e-10;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
inline Vec2 perp(const Vec2& a) { return {-a.y(), a.x()}; }

// ---------------------------------------------------------------------------
// Hyperplanes in R^{d+1} and their slopes.

/// The plane {X : X . normal = offset} in R^{d+1}; the last coordinate is the
/// height. Upper support planes have normal[d] < 0.
struct Hyperplane {
    Eigen::VectorXd normal;
    double offset = 0.0;

    int dim() const { return static_cast<int>(normal.size()) - 1; }
};

struct SlopeVector {
    Eigen::VectorXd components;
    double magnitude = 0.0;
};

/// -nu_bar / nu_{d+1}. Throws VerticalPlane when the plane has no graph.
SlopeVector slope_of(const Hyperplane& h);

/// x |-> slope . x + offset over R^d, d <= 3. Unused slope slots are zero.
struct AffinePiece {
    std::array<double, 3> slope{};
    double offset = 0.0;

    double operator()(const Vec2& x) const { return slope[0] * x.x() + slope[1] * x.y() + offset; }
    double operator()(const Vec3& x) const {
        return slope[0] * x.x() + slope[1] * x.y() + slope[2] * x.z() + offset;
    }
    Vec2 gradient2() const { return {slope[0], slope[1]}; }
    Vec3 gradient3() const { return {slope[0], slope[1], slope[2]}; }
};

/// Graph function of a non-vertical hyperplane.
AffinePiece graph_of(const Hyperplane& h);

/// Unit-normal form of the graph of an affine function, with normal[d] < 0.
Hyperplane plane_of(const AffinePiece& piece, int dim);

// ---------------------------------------------------------------------------
// Convex polygons with per-edge provenance tags.

/// {x : normal . x <= offset}. The tag is copied onto the polygon edge the
/// halfplane creates when it clips.
struct Halfplane {
    Vec2 normal;
    double offset = 0.0;
    int tag = -1;
};

/// Convex polygon in CCW order. edge_tags[i] labels the edge from vertex i
/// to vertex i+1.
struct ConvexPolygon {
    std::vector<Vec2> vertices;
    std::vector<int> edge_tags;

    bool empty() const { return vertices.size() < 3; }
    double area() const;
    Vec2 centroid() const;
};

ConvexPolygon make_box(const Vec2& lo, const Vec2& hi, int tag = -1);

/// Regular n-gon circumscribing the disk of the given radius.
ConvexPolygon make_circumscribed_ngon(const Vec2& center, double radius, int n, int tag = -1);

ConvexPolygon polygon_from_vertices(std::vector<Vec2> ccw_vertices, int tag = -1);

/// Intersection of a convex CCW polygon with a halfplane. Empty results are
/// returned as a polygon with no vertices.
ConvexPolygon clip_polygon(const ConvexPolygon& poly, const Halfplane& hp);

ConvexPolygon clip_polygon(ConvexPolygon poly, std::span<const Halfplane> halfplanes);

/// Signed shoelace area (positive for CCW).
double signed_area(std::span<const Vec2> ring);

/// Convex hull in CCW order without collinear points (Andrew's monotone chain).
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Every consecutive edge pair turns left; with strict=false collinear runs
/// are allowed.
bool is_convex_ccw(std::span<const Vec2> ring, bool strict);

bool contains(std::span<const Vec2> convex_ccw, const Vec2& x, double tol = 0.0);

/// Signed distance from x to the boundary of a convex CCW polygon
/// (negative inside).
double signed_distance(std::span<const Vec2> convex_ccw, const Vec2& x);

/// Drops consecutive duplicates and collinear middle vertices.
std::vector<Vec2> simplify_ring(std::span<const Vec2> ring, double rel_tol = kDegeneracyTol);

// ---------------------------------------------------------------------------
// Piecewise-linear concave functions.

/// x |-> min over pieces. Pieces are stored as given; lower_envelope() prunes.
class PLConcaveFunction {
public:
    PLConcaveFunction() = default;
    PLConcaveFunction(int dim, std::vector<AffinePiece> pieces);

    int dim() const { return dim_; }
    const std::vector<AffinePiece>& pieces() const { return pieces_; }
    std::size_t size() const { return pieces_.size(); }

    double operator()(const Vec2& x) const;
    double operator()(const Vec3& x) const;

    /// Index of a minimizing piece; ties go to the lowest index.
    std::size_t active_piece(const Vec2& x) const;
    std::size_t active_piece(const Vec3& x) const;

    /// Pieces within tol of the minimum at x.
    std::vector<std::size_t> active_pieces(const Vec2& x, double tol) const;

private:
    int dim_ = 2;
    std::vector<AffinePiece> pieces_;
};

/// Pointwise minimum of the pieces with every inactive piece removed.
/// Order of surviving pieces is preserved.
PLConcaveFunction lower_envelope(int dim, std::vector<AffinePiece> pieces);

/// A box large enough to contain every bounded feature of the arrangement
/// of the pieces (d = 2).
struct Box2 {
    Vec2 lo;
    Vec2 hi;
};
Box2 envelope_bounding_box(const PLConcaveFunction& u);

/// Region where piece i attains the minimum, clipped to the box. Edge tags
/// are the indices of the neighbouring pieces (-1 for the box).
ConvexPolygon active_region(const PLConcaveFunction& u, std::size_t i, const Box2& box);

struct EnvelopeVertex {
    Vec2 x;
    double height = 0.0;
    std::vector<std::size_t> pieces;
};

/// Points where three or more pieces meet on the envelope (d = 2).
std::vector<EnvelopeVertex> envelope_vertices(const PLConcaveFunction& u);

/// Restriction of a d = 2 envelope to the line origin + t*direction,
/// as ordered breakpoints of a 1D concave PL function.
struct CrossSection {
    std::vector<double> breakpoints;         ///< increasing t values
    std::vector<std::size_t> pieces;         ///< pieces.size() == breakpoints.size() + 1
    std::vector<std::pair<double, double>> lines;  ///< (slope, intercept) in t per piece
    double operator()(double t) const;
};
CrossSection cross_section(const PLConcaveFunction& u, const Vec2& origin, const Vec2& direction);

// ---------------------------------------------------------------------------
// d = 3 helpers (brute force; intended for small facet counts).

/// {x : normal . x <= offset} in R^3.
struct Halfspace3 {
    Vec3 normal;
    double offset = 0.0;
    bool operator==(const Halfspace3&) const = default;
};

struct Polytope3 {
    std::vector<Vec3> vertices;
    std::vector<std::vector<int>> faces;   ///< CCW seen from outside
    std::vector<Vec3> face_normals;
};

/// Bounded intersection of halfspaces by vertex enumeration.
Polytope3 halfspace_intersection(std::span<const Halfspace3> halfspaces);

struct EnvelopeVertex3 {
    Vec3 x;
    double height = 0.0;
    std::vector<std::size_t> pieces;
};

/// Points where four or more pieces meet on a d = 3 envelope.
std::vector<EnvelopeVertex3> envelope_vertices_3d(const PLConcaveFunction& u);

}  // namespace kfree
