#include "kfree/domain.hpp"

#include "kfree/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kfree {

namespace {

constexpr int kEllipseTable = 4096;

Vec2 rotate(const Vec2& v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

double wrap01(double s) {
    s -= std::floor(s);
    return s >= 1.0 ? 0.0 : s;
}

double ellipse_speed(const ConvexDomain::EllipseData& e, double t) {
    return std::hypot(e.a * std::sin(t), e.b * std::cos(t));
}

BoundarySample ellipse_at_theta(const ConvexDomain::EllipseData& e, double t) {
    BoundarySample b;
    b.point = e.center + rotate(Vec2(e.a * std::cos(t), e.b * std::sin(t)), e.rotation);
    b.normal = rotate(Vec2(e.b * std::cos(t), e.a * std::sin(t)).normalized(), e.rotation);
    const double sp = ellipse_speed(e, t);
    b.curvature = e.a * e.b / (sp * sp * sp);
    return b;
}

double ellipse_length_at(const ConvexDomain::EllipseData& e, double t) {
    // table lookup plus Gauss-Legendre on the remainder
    const double step = 2.0 * M_PI / kEllipseTable;
    auto k = static_cast<std::size_t>(std::clamp(std::floor(t / step), 0.0, double(kEllipseTable - 1)));
    const double t0 = e.theta_table[k];
    static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
    static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
    double acc = 0.0;
    const double half = 0.5 * (t - t0);
    for (int q = 0; q < 4; ++q) acc += gw[q] * ellipse_speed(e, t0 + half * (gx[q] + 1.0));
    return e.length_table[k] + half * acc;
}

double ellipse_theta_for_length(const ConvexDomain::EllipseData& e, double len) {
    const auto it = std::upper_bound(e.length_table.begin(), e.length_table.end(), len);
    std::size_t k = it == e.length_table.begin() ? 0 : static_cast<std::size_t>(it - e.length_table.begin()) - 1;
    k = std::min<std::size_t>(k, kEllipseTable - 1);
    double lo = e.theta_table[k];
    double hi = e.theta_table[k + 1];
    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 60; ++iter) {
        const double f = ellipse_length_at(e, t) - len;
        if (std::abs(f) < 1e-15 * std::max(1.0, len)) break;
        if (f > 0) hi = t; else lo = t;
        const double tn = t - f / ellipse_speed(e, t);
        t = (tn > lo && tn < hi) ? tn : 0.5 * (lo + hi);
    }
    return t;
}

double ellipse_theta_of_point(const ConvexDomain::EllipseData& e, const Vec2& x) {
    const Vec2 l = rotate(x - e.center, -e.rotation);
    return std::atan2(l.y() / e.b, l.x() / e.a);
}

struct PolygonEdge {
    Vec2 a, b, normal;
    double length;
};

std::vector<PolygonEdge> polygon_edges(const std::vector<Vec2>& v) {
    std::vector<PolygonEdge> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 a = v[i];
        const Vec2 b = v[(i + 1) % v.size()];
        const Vec2 e = b - a;
        out.push_back({a, b, Vec2(e.y(), -e.x()).normalized(), e.norm()});
    }
    return out;
}

double poly_scale(const std::vector<Vec2>& v) {
    double s = 0.0;
    for (const auto& p : v) s = std::max(s, p.norm());
    return std::max(1.0, s);
}

}  // namespace

ConvexDomain ConvexDomain::polygon(std::vector<Vec2> v) {
    if (v.size() < 3) fail(ErrorCode::NotAPolytope, "polygon needs at least three vertices");
    if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
    if (!is_convex_ccw(v, true)) fail(ErrorCode::NotAPolytope, "polygon vertices are not strictly convex");
    return ConvexDomain(PolygonData{std::move(v)});
}

ConvexDomain ConvexDomain::disk(const Vec2& center, double radius) {
    if (!(radius > 0.0)) fail(ErrorCode::InvalidParam, "disk radius must be positive");
    return ConvexDomain(DiskData{center, radius});
}

ConvexDomain ConvexDomain::ellipse(const Vec2& center, double a, double b, double rotation) {
    if (!(a > 0.0 && b > 0.0)) fail(ErrorCode::InvalidParam, "ellipse semi-axes must be positive");
    EllipseData e{center, a, b, rotation, {}, {}};
    e.theta_table.resize(kEllipseTable + 1);
    e.length_table.resize(kEllipseTable + 1);
    const double step = 2.0 * M_PI / kEllipseTable;
    static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
    static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
    e.theta_table[0] = 0.0;
    e.length_table[0] = 0.0;
    for (int k = 0; k < kEllipseTable; ++k) {
        const double t0 = k * step;
        double acc = 0.0;
        for (int q = 0; q < 4; ++q) acc += gw[q] * ellipse_speed(e, t0 + 0.5 * step * (gx[q] + 1.0));
        e.theta_table[k + 1] = (k + 1) * step;
        e.length_table[k + 1] = e.length_table[k] + 0.5 * step * acc;
    }
    return ConvexDomain(std::move(e));
}

ConvexDomain ConvexDomain::sampled(std::vector<Vec2> points, std::vector<Vec2> normals,
                                   std::vector<double> curvatures) {
    const std::size_t n = points.size();
    if (n < 3 || normals.size() != n || curvatures.size() != n)
        fail(ErrorCode::InvalidParam, "sampled boundary needs matching points, normals and curvatures (n >= 3)");
    if (signed_area(points) < 0.0) {
        std::reverse(points.begin(), points.end());
        std::reverse(normals.begin(), normals.end());
        std::reverse(curvatures.begin(), curvatures.end());
    }
    if (!is_convex_ccw(points, false)) fail(ErrorCode::InvalidParam, "sampled boundary is not convex");
    for (auto& nrm : normals) {
        if (nrm.norm() == 0.0) fail(ErrorCode::InvalidParam, "zero normal in sampled boundary");
        nrm.normalize();
    }
    for (double k : curvatures)
        if (k < 0.0) fail(ErrorCode::InvalidParam, "negative curvature in sampled boundary");
    SampledData s{std::move(points), std::move(normals), std::move(curvatures), {}};
    s.cumulative.resize(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) s.cumulative[i + 1] = s.cumulative[i] + (s.points[(i + 1) % n] - s.points[i]).norm();
    return ConvexDomain(std::move(s));
}

ConvexDomain ConvexDomain::polytope(std::vector<Halfspace3> facets) {
    if (facets.size() < 4) fail(ErrorCode::NotAPolytope, "a 3D polytope needs at least four facets");
    for (auto& f : facets) {
        const double n = f.normal.norm();
        if (n == 0.0) fail(ErrorCode::NotAPolytope, "zero facet normal");
        f.normal /= n;
        f.offset /= n;
    }
    Polytope3 shape = halfspace_intersection(facets);
    if (shape.vertices.size() < 4 || shape.faces.size() < 4)
        fail(ErrorCode::NotAPolytope, "halfspaces do not bound a solid polytope");
    // drop redundant halfspaces so that every facet is a true face
    std::vector<Halfspace3> kept;
    for (const auto& f : facets) {
        const bool is_face = std::any_of(shape.face_normals.begin(), shape.face_normals.end(),
                                         [&](const Vec3& n) { return (n - f.normal).norm() < 1e-9; });
        const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Halfspace3& k) {
            return (k.normal - f.normal).norm() < 1e-9;
        });
        if (is_face && !dup) kept.push_back(f);
    }
    return ConvexDomain(PolytopeData{std::move(kept), std::move(shape)});
}

ConvexDomain::Kind ConvexDomain::kind() const {
    switch (data_.index()) {
        case 0: return Kind::Polygon;
        case 1: return Kind::Disk;
        case 2: return Kind::Ellipse;
        case 3: return Kind::Sampled;
        default: return Kind::Polytope;
    }
}

bool ConvexDomain::smooth() const {
    const Kind k = kind();
    return k == Kind::Disk || k == Kind::Ellipse || k == Kind::Sampled;
}

double ConvexDomain::perimeter() const {
    if (auto p = as_polygon()) {
        double acc = 0.0;
        for (const auto& e : polygon_edges(p->vertices)) acc += e.length;
        return acc;
    }
    if (auto d = as_disk()) return 2.0 * M_PI * d->radius;
    if (auto e = as_ellipse()) return e->length_table.back();
    if (auto s = as_sampled()) return s->cumulative.back();
    fail(ErrorCode::InvalidParam, "perimeter is defined for planar domains only");
}

double ConvexDomain::area() const {
    if (auto p = as_polygon()) return signed_area(p->vertices);
    if (auto d = as_disk()) return M_PI * d->radius * d->radius;
    if (auto e = as_ellipse()) return M_PI * e->a * e->b;
    if (auto s = as_sampled()) return signed_area(s->points);
    fail(ErrorCode::InvalidParam, "area is defined for planar domains only");
}

Vec2 ConvexDomain::center() const {
    if (auto p = as_polygon()) return polygon_from_vertices(p->vertices).centroid();
    if (auto d = as_disk()) return d->center;
    if (auto e = as_ellipse()) return e->center;
    if (auto s = as_sampled()) return polygon_from_vertices(s->points).centroid();
    fail(ErrorCode::InvalidParam, "center is defined for planar domains only");
}

BoundarySample ConvexDomain::boundary_at(double s) const {
    s = wrap01(s);
    BoundarySample b;
    b.param = s;
    if (auto p = as_polygon()) {
        const auto edges = polygon_edges(p->vertices);
        double len = s * perimeter();
        for (const auto& e : edges) {
            if (len < e.length || &e == &edges.back()) {
                const double t = std::clamp(len / e.length, 0.0, 1.0);
                b.point = e.a + t * (e.b - e.a);
                b.normal = e.normal;
                b.curvature = 0.0;
                return b;
            }
            len -= e.length;
        }
    }
    if (auto d = as_disk()) {
        const double t = 2.0 * M_PI * s;
        b.normal = Vec2(std::cos(t), std::sin(t));
        b.point = d->center + d->radius * b.normal;
        b.curvature = 1.0 / d->radius;
        return b;
    }
    if (auto e = as_ellipse()) {
        const double t = ellipse_theta_for_length(*e, s * e->length_table.back());
        BoundarySample r = ellipse_at_theta(*e, t);
        r.param = s;
        return r;
    }
    if (auto sm = as_sampled()) {
        const double len = s * sm->cumulative.back();
        const auto it = std::upper_bound(sm->cumulative.begin(), sm->cumulative.end(), len);
        const std::size_t n = sm->points.size();
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - sm->cumulative.begin()) - 1, n - 1);
        const std::size_t j = (i + 1) % n;
        const double seg = sm->cumulative[i + 1] - sm->cumulative[i];
        const double t = seg > 0.0 ? (len - sm->cumulative[i]) / seg : 0.0;
        b.point = sm->points[i] + t * (sm->points[j] - sm->points[i]);
        b.normal = ((1.0 - t) * sm->normals[i] + t * sm->normals[j]).normalized();
        b.curvature = (1.0 - t) * sm->curvatures[i] + t * sm->curvatures[j];
        return b;
    }
    fail(ErrorCode::InvalidParam, "boundary_at is defined for planar domains only");
}

BoundarySample ConvexDomain::boundary_with_normal(double angle) const {
    const Vec2 dir(std::cos(angle), std::sin(angle));
    if (auto d = as_disk()) {
        BoundarySample b;
        b.normal = dir;
        b.point = d->center + d->radius * dir;
        b.curvature = 1.0 / d->radius;
        b.param = wrap01(angle / (2.0 * M_PI));
        return b;
    }
    if (auto e = as_ellipse()) {
        const double local = angle - e->rotation;
        const double t = std::atan2(e->b * std::sin(local), e->a * std::cos(local));
        BoundarySample b = ellipse_at_theta(*e, t);
        const double tt = t < 0.0 ? t + 2.0 * M_PI : t;
        b.param = wrap01(ellipse_length_at(*e, tt) / e->length_table.back());
        return b;
    }
    if (auto p = as_polygon()) {
        // the vertex whose normal cone contains dir
        std::size_t best = 0;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p->vertices.size(); ++i)
            if (p->vertices[i].dot(dir) > m) {
                m = p->vertices[i].dot(dir);
                best = i;
            }
        double len = 0.0;
        const auto edges = polygon_edges(p->vertices);
        for (std::size_t i = 0; i < best; ++i) len += edges[i].length;
        BoundarySample b;
        b.point = p->vertices[best];
        b.normal = dir;
        b.param = len / perimeter();
        return b;
    }
    if (auto sm = as_sampled()) {
        // interpolate between the two samples whose normals bracket dir
        const std::size_t n = sm->points.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            const double ci = cross(sm->normals[i], dir);
            const double cj = cross(dir, sm->normals[j]);
            if (ci >= 0.0 && cj >= 0.0 && sm->normals[i].dot(dir) > 0.0) {
                const double ai = std::atan2(ci, sm->normals[i].dot(dir));
                const double aj = std::atan2(cj, sm->normals[j].dot(dir));
                const double t = (ai + aj) > 0.0 ? ai / (ai + aj) : 0.0;
                BoundarySample b;
                b.point = sm->points[i] + t * (sm->points[j] - sm->points[i]);
                b.normal = dir;
                b.curvature = (1.0 - t) * sm->curvatures[i] + t * sm->curvatures[j];
                const double seg = sm->cumulative[i + 1] - sm->cumulative[i];
                b.param = wrap01((sm->cumulative[i] + t * seg) / sm->cumulative.back());
                return b;
            }
        }
        fail(ErrorCode::DegenerateSolution, "sampled normals do not cover the circle");
    }
    fail(ErrorCode::InvalidParam, "boundary_with_normal is defined for planar domains only");
}

std::vector<BoundarySample> ConvexDomain::sample_boundary(int n, PlanePlacement placement) const {
    std::vector<BoundarySample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        if (placement == PlanePlacement::ArcLength)
            out.push_back(boundary_at(static_cast<double>(k) / n));
        else
            out.push_back(boundary_with_normal(2.0 * M_PI * k / n));
    }
    return out;
}

Vec2 ConvexDomain::normal_at(const Vec2& x) const {
    if (auto p = as_polygon()) {
        const double scale = poly_scale(p->vertices);
        for (const auto& v : p->vertices)
            if ((v - x).norm() <= kDegeneracyTol * scale)
                fail(ErrorCode::NonSmoothBoundaryPoint, "polygon vertex has no unique normal");
        for (const auto& e : polygon_edges(p->vertices)) {
            const Vec2 d = e.b - e.a;
            const double t = (x - e.a).dot(d) / d.squaredNorm();
            if (t > 0.0 && t < 1.0 && std::abs(e.normal.dot(x - e.a)) <= kDegeneracyTol * scale) return e.normal;
        }
        fail(ErrorCode::OutOfDomain, "point is not on the polygon boundary");
    }
    if (auto d = as_disk()) {
        const Vec2 r = x - d->center;
        if (std::abs(r.norm() - d->radius) > 1e-9 * std::max(1.0, d->radius))
            fail(ErrorCode::OutOfDomain, "point is not on the circle");
        return r.normalized();
    }
    if (auto e = as_ellipse()) {
        if (std::abs(signed_distance(x)) > 1e-9 * std::max(e->a, e->b))
            fail(ErrorCode::OutOfDomain, "point is not on the ellipse");
        return ellipse_at_theta(*e, ellipse_theta_of_point(*e, x)).normal;
    }
    if (auto sm = as_sampled()) {
        const std::size_t n = sm->points.size();
        double best = std::numeric_limits<double>::infinity();
        Vec2 nrm = Vec2::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            const Vec2 d = sm->points[j] - sm->points[i];
            const double t = std::clamp((x - sm->points[i]).dot(d) / d.squaredNorm(), 0.0, 1.0);
            const double dist = (sm->points[i] + t * d - x).norm();
            if (dist < best) {
                best = dist;
                nrm = ((1.0 - t) * sm->normals[i] + t * sm->normals[j]).normalized();
            }
        }
        if (best > 1e-9 * poly_scale(sm->points)) fail(ErrorCode::OutOfDomain, "point is not on the sampled boundary");
        return nrm;
    }
    fail(ErrorCode::InvalidParam, "normal_at is defined for planar domains only");
}

double ConvexDomain::support(const Vec2& dir) const {
    if (auto d = as_disk()) return d->center.dot(dir) + d->radius * dir.norm();
    if (auto e = as_ellipse()) {
        const Vec2 l = rotate(dir, -e->rotation);
        return e->center.dot(dir) + std::hypot(e->a * l.x(), e->b * l.y());
    }
    const std::vector<Vec2>* pts = nullptr;
    if (auto p = as_polygon()) pts = &p->vertices;
    if (auto s = as_sampled()) pts = &s->points;
    if (!pts) fail(ErrorCode::InvalidParam, "support is defined for planar domains only");
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& v : *pts) m = std::max(m, v.dot(dir));
    return m;
}

bool ConvexDomain::contains(const Vec2& x, double tol) const {
    if (auto d = as_disk()) return (x - d->center).norm() <= d->radius + tol;
    if (kind() == Kind::Ellipse) return signed_distance(x) <= tol;
    if (auto p = as_polygon()) return kfree::contains(p->vertices, x, tol);
    if (auto s = as_sampled()) return kfree::contains(s->points, x, tol);
    fail(ErrorCode::InvalidParam, "contains is defined for planar domains only");
}

double ConvexDomain::signed_distance(const Vec2& x) const {
    if (auto d = as_disk()) return (x - d->center).norm() - d->radius;
    if (auto e = as_ellipse()) {
        const Vec2 l = rotate(x - e->center, -e->rotation);
        // closest point by Newton on the parameter, seeded by a coarse scan
        auto f = [&](double t) { return Vec2(e->a * std::cos(t), e->b * std::sin(t)); };
        double best_t = 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 64; ++k) {
            const double t = 2.0 * M_PI * k / 64;
            const double dd = (f(t) - l).squaredNorm();
            if (dd < best) {
                best = dd;
                best_t = t;
            }
        }
        double t = best_t;
        for (int it = 0; it < 50; ++it) {
            const Vec2 p = f(t);
            const Vec2 dp(-e->a * std::sin(t), e->b * std::cos(t));
            const Vec2 ddp(-e->a * std::cos(t), -e->b * std::sin(t));
            const double g = (p - l).dot(dp);
            const double h = dp.squaredNorm() + (p - l).dot(ddp);
            if (h <= 0.0) break;
            const double step = g / h;
            t -= std::clamp(step, -0.5, 0.5);
            if (std::abs(step) < 1e-15) break;
        }
        const double dist = (f(t) - l).norm();
        const double q = (l.x() / e->a) * (l.x() / e->a) + (l.y() / e->b) * (l.y() / e->b);
        return q <= 1.0 ? -dist : dist;
    }
    if (auto p = as_polygon()) return kfree::signed_distance(p->vertices, x);
    if (auto s = as_sampled()) return kfree::signed_distance(s->points, x);
    fail(ErrorCode::InvalidParam, "signed_distance is defined for planar domains only");
}

double ConvexDomain::min_curvature() const {
    if (as_polygon() || as_polytope()) return 0.0;
    if (auto d = as_disk()) return 1.0 / d->radius;
    if (auto e = as_ellipse()) {
        const double big = std::max(e->a, e->b);
        return std::min(e->a, e->b) / (big * big);
    }
    const auto* s = as_sampled();
    return *std::min_element(s->curvatures.begin(), s->curvatures.end());
}

std::vector<Vec2> ConvexDomain::boundary_polygon(int n) const {
    if (auto p = as_polygon()) return p->vertices;
    if (auto s = as_sampled()) return s->points;
    std::vector<Vec2> out;
    for (const auto& b : sample_boundary(n, PlanePlacement::ArcLength)) out.push_back(b.point);
    return out;
}

Hyperplane support_plane_with_slope(const ConvexDomain& omega, const Vec2& x, double h0, double lambda0) {
    if (!(lambda0 > 0.0)) fail(ErrorCode::InvalidParam, "lambda0 must be positive");
    if (!(h0 > 0.0)) fail(ErrorCode::InvalidParam, "h0 must be positive");
    const Vec2 n = omega.normal_at(x);
    const double c = 1.0 / std::sqrt(1.0 + lambda0 * lambda0);
    Hyperplane h;
    h.normal.resize(3);
    h.normal << -lambda0 * c * n.x(), -lambda0 * c * n.y(), -c;
    h.offset = h.normal[0] * x.x() + h.normal[1] * x.y() + h.normal[2] * h0;
    return h;
}

}  // namespace kfree
