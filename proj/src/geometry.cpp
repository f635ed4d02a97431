#include "kfree/geometry.hpp"

#include "kfree/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kfree {

// ---------------------------------------------------------------------------
// Hyperplanes

SlopeVector slope_of(const Hyperplane& h) {
    const int d = h.dim();
    if (d < 1) fail(ErrorCode::InvalidParam, "hyperplane needs at least two coordinates");
    const double last = h.normal[d];
    if (std::abs(last) <= 1e-12) fail(ErrorCode::VerticalPlane, "normal has no height component");
    SlopeVector s;
    s.components = -h.normal.head(d) / last;
    s.magnitude = s.components.norm();
    return s;
}

AffinePiece graph_of(const Hyperplane& h) {
    const int d = h.dim();
    if (d < 1 || d > 3) fail(ErrorCode::InvalidParam, "graph_of supports d in [1,3]");
    const double last = h.normal[d];
    if (std::abs(last) <= 1e-12) fail(ErrorCode::VerticalPlane, "normal has no height component");
    // x.nu_bar + z nu_last = offset  =>  z = (offset - x.nu_bar) / nu_last
    AffinePiece p;
    for (int k = 0; k < d; ++k) p.slope[k] = -h.normal[k] / last;
    p.offset = h.offset / last;
    return p;
}

Hyperplane plane_of(const AffinePiece& piece, int dim) {
    if (dim < 1 || dim > 3) fail(ErrorCode::InvalidParam, "plane_of supports d in [1,3]");
    // z = a.x + b  <=>  (a, -1).(x, z) = -b ; scale so that the last entry is negative
    Eigen::VectorXd n(dim + 1);
    for (int k = 0; k < dim; ++k) n[k] = piece.slope[k];
    n[dim] = -1.0;
    const double len = n.norm();
    return Hyperplane{n / len, -piece.offset / len};
}

// ---------------------------------------------------------------------------
// Polygons

double signed_area(std::span<const Vec2> ring) {
    const std::size_t n = ring.size();
    if (n < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += cross(ring[i], ring[(i + 1) % n]);
    return 0.5 * acc;
}

double ConvexPolygon::area() const { return empty() ? 0.0 : signed_area(vertices); }

Vec2 ConvexPolygon::centroid() const {
    if (vertices.empty()) return Vec2::Zero();
    const double a = area();
    if (a <= 0.0) {
        Vec2 c = Vec2::Zero();
        for (const auto& v : vertices) c += v;
        return c / static_cast<double>(vertices.size());
    }
    Vec2 c = Vec2::Zero();
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = vertices[i];
        const Vec2& q = vertices[(i + 1) % n];
        c += (p + q) * cross(p, q);
    }
    return c / (6.0 * a);
}

ConvexPolygon make_box(const Vec2& lo, const Vec2& hi, int tag) {
    ConvexPolygon p;
    p.vertices = {lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}};
    p.edge_tags.assign(4, tag);
    return p;
}

ConvexPolygon make_circumscribed_ngon(const Vec2& center, double radius, int n, int tag) {
    ConvexPolygon p;
    const double r = radius / std::cos(M_PI / n);
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * M_PI * k / n;
        p.vertices.push_back(center + r * Vec2(std::cos(t), std::sin(t)));
    }
    p.edge_tags.assign(n, tag);
    return p;
}

ConvexPolygon polygon_from_vertices(std::vector<Vec2> ccw_vertices, int tag) {
    ConvexPolygon p;
    p.edge_tags.assign(ccw_vertices.size(), tag);
    p.vertices = std::move(ccw_vertices);
    return p;
}

ConvexPolygon clip_polygon(const ConvexPolygon& poly, const Halfplane& hp) {
    ConvexPolygon out;
    const std::size_t n = poly.vertices.size();
    if (n == 0) return out;

    const double scale = std::max(1.0, std::abs(hp.offset)) * hp.normal.norm();
    double vmax = 0.0;
    for (const auto& v : poly.vertices) vmax = std::max(vmax, v.cwiseAbs().maxCoeff());
    const double eps = 1e-14 * std::max(scale, hp.normal.norm() * vmax);

    std::vector<double> s(n);
    bool all_in = true;
    bool all_out = true;
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = hp.normal.dot(poly.vertices[i]) - hp.offset;
        if (s[i] > eps) all_in = false;
        if (s[i] < -eps) all_out = false;
    }
    if (all_in) return poly;
    if (all_out) return out;

    out.vertices.reserve(n + 1);
    out.edge_tags.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const bool in_i = s[i] <= eps;
        const bool in_j = s[j] <= eps;
        const int tag = poly.edge_tags.empty() ? -1 : poly.edge_tags[i];
        if (in_i) {
            out.vertices.push_back(poly.vertices[i]);
            if (in_j) {
                out.edge_tags.push_back(tag);
            } else {
                // exits along edge i: the new clip edge starts at the crossing
                out.edge_tags.push_back(tag);
                const double t = s[i] / (s[i] - s[j]);
                out.vertices.push_back(poly.vertices[i] + t * (poly.vertices[j] - poly.vertices[i]));
                out.edge_tags.push_back(hp.tag);
            }
        } else if (in_j) {
            const double t = s[i] / (s[i] - s[j]);
            out.vertices.push_back(poly.vertices[i] + t * (poly.vertices[j] - poly.vertices[i]));
            out.edge_tags.push_back(tag);
        }
    }

    // Remove coincident consecutive vertices; keep the tag of the surviving edge.
    ConvexPolygon clean;
    const std::size_t m = out.vertices.size();
    double extent = 0.0;
    for (const auto& v : out.vertices) extent = std::max(extent, v.cwiseAbs().maxCoeff());
    const double dup = 1e-13 * std::max(1.0, extent);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& v = out.vertices[i];
        const Vec2& w = out.vertices[(i + 1) % m];
        if ((v - w).norm() <= dup) continue;  // zero-length edge i
        clean.vertices.push_back(v);
        clean.edge_tags.push_back(out.edge_tags[i]);
    }
    if (clean.vertices.size() < 3) return ConvexPolygon{};
    return clean;
}

ConvexPolygon clip_polygon(ConvexPolygon poly, std::span<const Halfplane> halfplanes) {
    for (const auto& hp : halfplanes) {
        poly = clip_polygon(poly, hp);
        if (poly.empty()) break;
    }
    return poly;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    double extent = 0.0;
    for (const auto& p : pts) extent = std::max(extent, p.cwiseAbs().maxCoeff());
    const double eps = kDegeneracyTol * std::max(1.0, extent) * std::max(1.0, extent);
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= eps) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        const Vec2& p = pts[i];
        while (k >= t && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= eps) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    return hull;
}

bool is_convex_ccw(std::span<const Vec2> ring, bool strict) {
    const std::size_t n = ring.size();
    if (n < 3) return false;
    double extent = 0.0;
    for (const auto& p : ring) extent = std::max(extent, p.cwiseAbs().maxCoeff());
    const double eps = 1e-14 * std::max(1.0, extent * extent);
    double winding = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e0 = ring[(i + 1) % n] - ring[i];
        const Vec2 e1 = ring[(i + 2) % n] - ring[(i + 1) % n];
        const double c = cross(e0, e1);
        if (strict ? c <= 0.0 : c < -eps) return false;
        winding += std::atan2(c, e0.dot(e1));
    }
    // a simple convex ring turns exactly once
    return std::abs(winding - 2.0 * M_PI) < 1e-6;
}

bool contains(std::span<const Vec2> poly, const Vec2& x, double tol) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        const Vec2 e = b - a;
        const double len = e.norm();
        if (len == 0.0) continue;
        if (cross(e, x - a) / len < -tol) return false;
    }
    return true;
}

double signed_distance(std::span<const Vec2> poly, const Vec2& x) {
    const std::size_t n = poly.size();
    double inside_dist = std::numeric_limits<double>::infinity();
    bool inside = true;
    double outside_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        const Vec2 e = b - a;
        const double len2 = e.squaredNorm();
        if (len2 == 0.0) continue;
        const double side = cross(e, x - a) / std::sqrt(len2);
        if (side < 0.0) inside = false;
        inside_dist = std::min(inside_dist, std::abs(side));
        const double t = std::clamp((x - a).dot(e) / len2, 0.0, 1.0);
        outside_dist = std::min(outside_dist, (a + t * e - x).norm());
    }
    return inside ? -inside_dist : outside_dist;
}

std::vector<Vec2> simplify_ring(std::span<const Vec2> ring, double rel_tol) {
    std::vector<Vec2> out;
    double extent = 0.0;
    for (const auto& p : ring) extent = std::max(extent, p.cwiseAbs().maxCoeff());
    const double dup = rel_tol * std::max(1.0, extent);
    for (const auto& p : ring) {
        if (!out.empty() && (out.back() - p).norm() <= dup) continue;
        out.push_back(p);
    }
    while (out.size() > 1 && (out.front() - out.back()).norm() <= dup) out.pop_back();
    bool changed = true;
    while (changed && out.size() > 3) {
        changed = false;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::size_t n = out.size();
            const Vec2& a = out[(i + n - 1) % n];
            const Vec2& b = out[i];
            const Vec2& c = out[(i + 1) % n];
            const double len = (c - a).norm();
            if (len > 0.0 && std::abs(cross(b - a, c - a)) / len <= dup) {
                out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// PL concave functions

PLConcaveFunction::PLConcaveFunction(int dim, std::vector<AffinePiece> pieces)
    : dim_(dim), pieces_(std::move(pieces)) {
    if (dim_ < 1 || dim_ > 3) fail(ErrorCode::InvalidParam, "PLConcaveFunction supports d in [1,3]");
    if (pieces_.empty()) fail(ErrorCode::EmptyInput, "no affine pieces");
    for (const auto& p : pieces_) {
        bool finite = std::isfinite(p.offset);
        for (double a : p.slope) finite = finite && std::isfinite(a);
        if (!finite) fail(ErrorCode::InvalidParam, "non-finite piece coefficient");
    }
}

double PLConcaveFunction::operator()(const Vec2& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) m = std::min(m, p(x));
    return m;
}

double PLConcaveFunction::operator()(const Vec3& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) m = std::min(m, p(x));
    return m;
}

std::size_t PLConcaveFunction::active_piece(const Vec2& x) const {
    std::size_t best = 0;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const double v = pieces_[i](x);
        if (v < m) {
            m = v;
            best = i;
        }
    }
    return best;
}

std::size_t PLConcaveFunction::active_piece(const Vec3& x) const {
    std::size_t best = 0;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const double v = pieces_[i](x);
        if (v < m) {
            m = v;
            best = i;
        }
    }
    return best;
}

std::vector<std::size_t> PLConcaveFunction::active_pieces(const Vec2& x, double tol) const {
    const double m = (*this)(x);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pieces_.size(); ++i)
        if (pieces_[i](x) <= m + tol) out.push_back(i);
    return out;
}

namespace {

// Halfplanes {x : p_i(x) <= p_j(x)} for j != i. Returns false if some
// parallel piece lies strictly below p_i everywhere.
bool region_halfplanes(const std::vector<AffinePiece>& pieces, std::size_t i,
                       std::vector<Halfplane>& out) {
    out.clear();
    const AffinePiece& pi = pieces[i];
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        if (j == i) continue;
        const AffinePiece& pj = pieces[j];
        const Vec2 n(pi.slope[0] - pj.slope[0], pi.slope[1] - pj.slope[1]);
        const double off = pj.offset - pi.offset;
        const double scale = std::max({1.0, std::abs(pi.slope[0]), std::abs(pi.slope[1])});
        if (n.norm() <= kDegeneracyTol * scale) {
            if (off < -kDegeneracyTol * std::max(1.0, std::abs(pi.offset))) return false;
            if (j < i && std::abs(off) <= kDegeneracyTol * std::max(1.0, std::abs(pi.offset)))
                return false;  // duplicate of an earlier piece
            continue;
        }
        out.push_back(Halfplane{n, off, static_cast<int>(j)});
    }
    return true;
}

Box2 huge_box(const std::vector<AffinePiece>& pieces) {
    double amax = 0.0;
    double bmax = 0.0;
    for (const auto& p : pieces) {
        amax = std::max({amax, std::abs(p.slope[0]), std::abs(p.slope[1])});
        bmax = std::max(bmax, std::abs(p.offset));
    }
    const double r = 1e6 * (1.0 + bmax / std::max(amax, 1e-12));
    return {Vec2(-r, -r), Vec2(r, r)};
}

bool on_box_boundary(const Vec2& v, const Box2& box) {
    const double tol = 1e-9 * std::max(1.0, (box.hi - box.lo).maxCoeff());
    return std::abs(v.x() - box.lo.x()) <= tol || std::abs(v.x() - box.hi.x()) <= tol ||
           std::abs(v.y() - box.lo.y()) <= tol || std::abs(v.y() - box.hi.y()) <= tol;
}

ConvexPolygon region_in_box(const std::vector<AffinePiece>& pieces, std::size_t i, const Box2& box,
                            std::vector<Halfplane>& scratch) {
    if (!region_halfplanes(pieces, i, scratch)) return {};
    return clip_polygon(make_box(box.lo, box.hi, -1), scratch);
}

Box2 tight_box(const std::vector<AffinePiece>& pieces) {
    const Box2 big = huge_box(pieces);
    std::vector<Halfplane> scratch;
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    bool any = false;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const ConvexPolygon r = region_in_box(pieces, i, big, scratch);
        for (const auto& v : r.vertices) {
            if (on_box_boundary(v, big)) continue;
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
            any = true;
        }
    }
    // also cover the zero sets, which is where callers usually look
    double amax = 0.0;
    double bmax = 0.0;
    for (const auto& p : pieces) {
        amax = std::max(amax, std::hypot(p.slope[0], p.slope[1]));
        bmax = std::max(bmax, std::abs(p.offset));
    }
    const double zero_reach = amax > 0.0 ? bmax / amax : 1.0;
    if (!any) {
        lo = Vec2::Constant(-zero_reach);
        hi = Vec2::Constant(zero_reach);
    }
    lo = lo.cwiseMin(Vec2::Constant(-zero_reach));
    hi = hi.cwiseMax(Vec2::Constant(zero_reach));
    const Vec2 c = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo).maxCoeff();
    const double r = 2.0 * half + 1.0;
    return {c - Vec2::Constant(r), c + Vec2::Constant(r)};
}

// d = 3: positive-volume test of {x : p_i <= p_j for all j} inside a box.
bool region3_has_volume(const std::vector<AffinePiece>& pieces, std::size_t i, double box_r) {
    std::vector<Halfspace3> hs;
    const AffinePiece& pi = pieces[i];
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        if (j == i) continue;
        const AffinePiece& pj = pieces[j];
        const Vec3 n = pi.gradient3() - pj.gradient3();
        const double off = pj.offset - pi.offset;
        const double scale = std::max(1.0, pi.gradient3().cwiseAbs().maxCoeff());
        if (n.norm() <= kDegeneracyTol * scale) {
            if (off < -kDegeneracyTol * std::max(1.0, std::abs(pi.offset))) return false;
            if (j < i && std::abs(off) <= kDegeneracyTol * std::max(1.0, std::abs(pi.offset))) return false;
            continue;
        }
        hs.push_back({n, off});
    }
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = 1.0;
        hs.push_back({e, box_r});
        hs.push_back({-e, box_r});
    }
    const Polytope3 p = halfspace_intersection(hs);
    if (p.vertices.size() < 4) return false;
    const Vec3 o = p.vertices[0];
    Eigen::MatrixXd m(3, p.vertices.size() - 1);
    for (std::size_t k = 1; k < p.vertices.size(); ++k) m.col(static_cast<Eigen::Index>(k - 1)) = p.vertices[k] - o;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto sv = svd.singularValues();
    return sv.size() == 3 && sv[2] > 1e-9 * std::max(1.0, sv[0]);
}

}  // namespace

PLConcaveFunction lower_envelope(int dim, std::vector<AffinePiece> pieces) {
    if (pieces.empty()) fail(ErrorCode::EmptyInput, "lower_envelope of an empty list");
    [[maybe_unused]] const PLConcaveFunction validated(dim, pieces);
    std::vector<AffinePiece> kept;
    if (dim != 2 && dim != 3) fail(ErrorCode::InvalidParam, "lower_envelope supports d = 2, 3");
    if (dim == 2) {
        const Box2 box = huge_box(pieces);
        // Mean width (area over diameter) separates genuine cells from
        // slivers that only touch the envelope along a line or at a point.
        const double width_floor = 1e-9 * (box.hi - box.lo).maxCoeff() / 2e6;
        std::vector<Halfplane> scratch;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const ConvexPolygon r = region_in_box(pieces, i, box, scratch);
            if (r.empty()) continue;
            Vec2 lo = r.vertices.front(), hi = lo;
            for (const auto& v : r.vertices) {
                lo = lo.cwiseMin(v);
                hi = hi.cwiseMax(v);
            }
            if (r.area() > width_floor * (hi - lo).norm()) kept.push_back(pieces[i]);
        }
    } else {
        double amax = 0.0;
        double bmax = 0.0;
        for (const auto& p : pieces) {
            amax = std::max(amax, p.gradient3().cwiseAbs().maxCoeff());
            bmax = std::max(bmax, std::abs(p.offset));
        }
        const double r = 1e4 * (1.0 + bmax / std::max(amax, 1e-12));
        for (std::size_t i = 0; i < pieces.size(); ++i)
            if (region3_has_volume(pieces, i, r)) kept.push_back(pieces[i]);
    }
    if (kept.empty()) fail(ErrorCode::DegenerateSolution, "envelope pruning removed every piece");
    return PLConcaveFunction(dim, std::move(kept));
}

Box2 envelope_bounding_box(const PLConcaveFunction& u) {
    if (u.dim() != 2) fail(ErrorCode::InvalidParam, "envelope_bounding_box needs d = 2");
    return tight_box(u.pieces());
}

ConvexPolygon active_region(const PLConcaveFunction& u, std::size_t i, const Box2& box) {
    if (u.dim() != 2) fail(ErrorCode::InvalidParam, "active_region needs d = 2");
    std::vector<Halfplane> scratch;
    return region_in_box(u.pieces(), i, box, scratch);
}

std::vector<EnvelopeVertex> envelope_vertices(const PLConcaveFunction& u) {
    if (u.dim() != 2) fail(ErrorCode::InvalidParam, "envelope_vertices needs d = 2");
    const Box2 box = tight_box(u.pieces());
    std::vector<Halfplane> scratch;
    std::vector<EnvelopeVertex> out;
    const double merge = 1e-9 * std::max(1.0, (box.hi - box.lo).maxCoeff());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const ConvexPolygon r = region_in_box(u.pieces(), i, box, scratch);
        for (const auto& v : r.vertices) {
            if (on_box_boundary(v, box)) continue;
            auto it = std::find_if(out.begin(), out.end(),
                                   [&](const EnvelopeVertex& e) { return (e.x - v).norm() <= merge; });
            if (it == out.end()) {
                EnvelopeVertex e;
                e.x = v;
                e.height = u(v);
                out.push_back(std::move(e));
                it = out.end() - 1;
            }
            if (std::find(it->pieces.begin(), it->pieces.end(), i) == it->pieces.end()) it->pieces.push_back(i);
        }
    }
    // a vertex of one region that lies on a single ridge of the arrangement
    // is not an envelope vertex
    std::erase_if(out, [](const EnvelopeVertex& e) { return e.pieces.size() < 3; });
    return out;
}

double CrossSection::operator()(double t) const {
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    const auto k = static_cast<std::size_t>(it - breakpoints.begin());
    return lines[k].first * t + lines[k].second;
}

CrossSection cross_section(const PLConcaveFunction& u, const Vec2& origin, const Vec2& direction) {
    if (u.dim() != 2) fail(ErrorCode::InvalidParam, "cross_section needs d = 2");
    struct Line {
        double m, c;
        std::size_t idx;
    };
    std::vector<Line> lines;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const AffinePiece& p = u.pieces()[i];
        lines.push_back({p.slope[0] * direction.x() + p.slope[1] * direction.y(), p(origin), i});
    }
    // min envelope from t = -inf: decreasing slopes
    std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
        return a.m > b.m || (a.m == b.m && a.c < b.c);
    });
    std::vector<Line> hull;
    auto x_of = [](const Line& a, const Line& b) { return (b.c - a.c) / (a.m - b.m); };
    for (const auto& l : lines) {
        if (!hull.empty() && hull.back().m == l.m) continue;  // higher or equal intercept
        while (hull.size() >= 2 && x_of(hull[hull.size() - 2], l) <= x_of(hull[hull.size() - 2], hull.back()))
            hull.pop_back();
        hull.push_back(l);
    }
    CrossSection cs;
    for (std::size_t k = 0; k < hull.size(); ++k) {
        if (k > 0) cs.breakpoints.push_back(x_of(hull[k - 1], hull[k]));
        cs.pieces.push_back(hull[k].idx);
        cs.lines.emplace_back(hull[k].m, hull[k].c);
    }
    return cs;
}

// ---------------------------------------------------------------------------
// d = 3

Polytope3 halfspace_intersection(std::span<const Halfspace3> hs) {
    Polytope3 out;
    const std::size_t m = hs.size();
    double scale = 1.0;
    for (const auto& h : hs) scale = std::max(scale, std::abs(h.offset) / std::max(h.normal.norm(), 1e-300));
    const double feas = 1e-9 * scale;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            for (std::size_t c = b + 1; c < m; ++c) {
                Eigen::Matrix3d A;
                A.row(0) = hs[a].normal.transpose();
                A.row(1) = hs[b].normal.transpose();
                A.row(2) = hs[c].normal.transpose();
                const double det = A.determinant();
                if (std::abs(det) <= 1e-12 * hs[a].normal.norm() * hs[b].normal.norm() * hs[c].normal.norm())
                    continue;
                const Vec3 x = A.partialPivLu().solve(Vec3(hs[a].offset, hs[b].offset, hs[c].offset));
                bool ok = true;
                for (const auto& h : hs)
                    if (h.normal.dot(x) - h.offset > feas * std::max(1.0, h.normal.norm())) {
                        ok = false;
                        break;
                    }
                if (!ok) continue;
                const bool dup = std::any_of(out.vertices.begin(), out.vertices.end(),
                                             [&](const Vec3& v) { return (v - x).norm() <= 1e-9 * scale; });
                if (!dup) out.vertices.push_back(x);
            }
    if (out.vertices.size() < 4) return out;

    Vec3 center = Vec3::Zero();
    for (const auto& v : out.vertices) center += v;
    center /= static_cast<double>(out.vertices.size());

    for (const auto& h : hs) {
        const double nn = h.normal.norm();
        std::vector<int> on;
        for (std::size_t k = 0; k < out.vertices.size(); ++k)
            if (std::abs(h.normal.dot(out.vertices[k]) - h.offset) <= 1e-9 * scale * std::max(1.0, nn))
                on.push_back(static_cast<int>(k));
        if (on.size() < 3) continue;
        const Vec3 n = h.normal / nn;
        // skip duplicate facets (same vertex set already recorded)
        std::vector<int> key = on;
        std::sort(key.begin(), key.end());
        bool seen = false;
        for (const auto& f : out.faces) {
            std::vector<int> fk = f;
            std::sort(fk.begin(), fk.end());
            if (fk == key) seen = true;
        }
        if (seen) continue;
        Vec3 fc = Vec3::Zero();
        for (int k : on) fc += out.vertices[k];
        fc /= static_cast<double>(on.size());
        const Vec3 e1 = (out.vertices[on[0]] - fc).normalized();
        const Vec3 e2 = n.cross(e1);
        std::sort(on.begin(), on.end(), [&](int p, int q) {
            const Vec3 dp = out.vertices[p] - fc;
            const Vec3 dq = out.vertices[q] - fc;
            return std::atan2(dp.dot(e2), dp.dot(e1)) < std::atan2(dq.dot(e2), dq.dot(e1));
        });
        out.faces.push_back(std::move(on));
        out.face_normals.push_back(n);
    }
    return out;
}

std::vector<EnvelopeVertex3> envelope_vertices_3d(const PLConcaveFunction& u) {
    if (u.dim() != 3) fail(ErrorCode::InvalidParam, "envelope_vertices_3d needs d = 3");
    const auto& P = u.pieces();
    const std::size_t n = P.size();
    std::vector<EnvelopeVertex3> out;
    double scale = 1.0;
    for (const auto& p : P) scale = std::max(scale, std::abs(p.offset));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            for (std::size_t c = b + 1; c < n; ++c)
                for (std::size_t d = c + 1; d < n; ++d) {
                    Eigen::Matrix3d A;
                    A.row(0) = (P[a].gradient3() - P[b].gradient3()).transpose();
                    A.row(1) = (P[a].gradient3() - P[c].gradient3()).transpose();
                    A.row(2) = (P[a].gradient3() - P[d].gradient3()).transpose();
                    if (std::abs(A.determinant()) <= 1e-12) continue;
                    const Vec3 rhs(P[b].offset - P[a].offset, P[c].offset - P[a].offset,
                                   P[d].offset - P[a].offset);
                    const Vec3 x = A.partialPivLu().solve(rhs);
                    const double h = P[a](x);
                    if (u(x) < h - 1e-9 * scale) continue;  // not on the envelope
                    const bool dup = std::any_of(out.begin(), out.end(),
                                                 [&](const EnvelopeVertex3& e) { return (e.x - x).norm() <= 1e-9 * scale; });
                    if (dup) continue;
                    EnvelopeVertex3 v;
                    v.x = x;
                    v.height = h;
                    for (std::size_t k = 0; k < n; ++k)
                        if (P[k](x) <= h + 1e-9 * scale) v.pieces.push_back(k);
                    out.push_back(std::move(v));
                }
    return out;
}

}  // namespace kfree
