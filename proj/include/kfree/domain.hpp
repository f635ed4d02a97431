#pragma once

#include "kfree/geometry.hpp"

#include <variant>
#include <vector>

namespace kfree {

struct BoundarySample {
    Vec2 point;
    Vec2 normal;        ///< outward unit normal
    double curvature = 0.0;
    double param = 0.0; ///< arc-length fraction in [0, 1)
};

/// How boundary points are chosen when a smooth boundary is discretized.
enum class PlanePlacement {
    ArcLength,    ///< equispaced in arc length, starting at parameter 0
    NormalAngle,  ///< equispaced outward-normal angle, starting at angle 0
};

/// The base domain Omega. Polygons are CCW vertex lists; ellipses are given
/// by center, semi-axes and a rotation angle; sampled boundaries carry their
/// own normals and curvatures. Polytopes are the d = 3 case, as halfspaces.
class ConvexDomain {
public:
    enum class Kind { Polygon, Disk, Ellipse, Sampled, Polytope };

    struct PolygonData {
        std::vector<Vec2> vertices;
    };
    struct DiskData {
        Vec2 center;
        double radius;
    };
    struct EllipseData {
        Vec2 center;
        double a;
        double b;
        double rotation;
        std::vector<double> theta_table;   ///< parameter samples
        std::vector<double> length_table;  ///< cumulative arc length at theta_table
    };
    struct SampledData {
        std::vector<Vec2> points;
        std::vector<Vec2> normals;
        std::vector<double> curvatures;
        std::vector<double> cumulative;  ///< chord length up to point i
    };
    struct PolytopeData {
        std::vector<Halfspace3> facets;  ///< unit normals
        Polytope3 shape;
    };

    static ConvexDomain polygon(std::vector<Vec2> ccw_vertices);
    static ConvexDomain disk(const Vec2& center, double radius);
    static ConvexDomain ellipse(const Vec2& center, double a, double b, double rotation = 0.0);
    static ConvexDomain sampled(std::vector<Vec2> points, std::vector<Vec2> normals,
                                std::vector<double> curvatures);
    static ConvexDomain polytope(std::vector<Halfspace3> facets);

    Kind kind() const;
    int dim() const { return kind() == Kind::Polytope ? 3 : 2; }
    bool smooth() const;

    const PolygonData* as_polygon() const { return std::get_if<PolygonData>(&data_); }
    const DiskData* as_disk() const { return std::get_if<DiskData>(&data_); }
    const EllipseData* as_ellipse() const { return std::get_if<EllipseData>(&data_); }
    const SampledData* as_sampled() const { return std::get_if<SampledData>(&data_); }
    const PolytopeData* as_polytope() const { return std::get_if<PolytopeData>(&data_); }

    double perimeter() const;
    double area() const;
    Vec2 center() const;

    /// Boundary point at arc-length fraction s (wrapped into [0, 1)).
    /// At polygon vertices the normal of the edge that starts there is used.
    BoundarySample boundary_at(double s) const;

    /// Boundary point whose outward normal has the given angle (smooth kinds).
    BoundarySample boundary_with_normal(double angle) const;

    std::vector<BoundarySample> sample_boundary(int n, PlanePlacement placement) const;

    /// Outward unit normal at a boundary point. Throws NonSmoothBoundaryPoint
    /// at polygon vertices and OutOfDomain if x is not on the boundary.
    Vec2 normal_at(const Vec2& x) const;

    /// max over the closed domain of x . direction
    double support(const Vec2& direction) const;

    bool contains(const Vec2& x, double tol = 0.0) const;

    /// Negative inside, positive outside.
    double signed_distance(const Vec2& x) const;

    /// Smallest boundary curvature; zero for polygons.
    double min_curvature() const;

    /// Dense CCW polygon following the boundary (the exact vertex list for polygons).
    std::vector<Vec2> boundary_polygon(int n = 1024) const;

private:
    using Data = std::variant<PolygonData, DiskData, EllipseData, SampledData, PolytopeData>;
    explicit ConvexDomain(Data d) : data_(std::move(d)) {}
    Data data_;
};

/// The support plane through (x, h0) whose slope is lambda0 times the inward
/// normal at x, i.e. the graph descends away from the domain.
Hyperplane support_plane_with_slope(const ConvexDomain& omega, const Vec2& x, double h0, double lambda0);

}  // namespace kfree
