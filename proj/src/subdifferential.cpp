#include "kfree/subdifferential.hpp"

#include "kfree/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kfree {

double PsiSpec::operator()(double r) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::One: return 1.0;
        case Kind::Gauss: return std::pow(1.0 + r * r, 0.5 * (dim + 2));
        case Kind::Power: return std::pow(1.0 + r * r, 0.5 * power);
    }
    return 1.0;
}

std::string PsiSpec::name() const {
    switch (kind) {
        case Kind::Zero: return "zero";
        case Kind::One: return "one";
        case Kind::Gauss: return "gauss";
        case Kind::Power: return "power";
    }
    return "one";
}

PsiSpec parse_psi(const std::string& kind, int dim, double power) {
    if (kind == "zero") return PsiSpec::zero();
    if (kind == "one") return PsiSpec::one();
    if (kind == "gauss") return PsiSpec::gauss(dim);
    if (kind == "power") {
        if (!std::isfinite(power) || power < 0.0) fail(ErrorCode::InvalidParam, "psi power must be >= 0");
        return PsiSpec::power_law(power);
    }
    fail(ErrorCode::InvalidParam, "unknown psi kind '" + kind + "'");
}

namespace {

double piece_scale(const PLConcaveFunction& u, const Vec2& x) {
    double s = 1.0;
    for (const auto& p : u.pieces()) s = std::max(s, std::abs(p(x)));
    return s;
}

SubdifferentialCell cell_from_gradients(const Vec2& site, std::vector<Vec2> grads) {
    SubdifferentialCell c;
    c.site = site;
    c.hull = convex_hull(std::move(grads));
    if (c.hull.size() >= 3) c.cell = polygon_from_vertices(c.hull);
    return c;
}

constexpr double kEps = std::numeric_limits<double>::epsilon();

// 7-point degree-5 rule on the reference triangle (barycentric weights).
struct TriRule {
    double a, b, c, w;
};
constexpr double kA1 = 0.059715871789770, kB1 = 0.470142064105115;
constexpr double kA2 = 0.797426985353087, kB2 = 0.101286507323456;
constexpr double kW0 = 0.225, kW1 = 0.132394152788506, kW2 = 0.125939180544827;
constexpr TriRule kRule[7] = {
    {1.0 / 3, 1.0 / 3, 1.0 / 3, kW0},
    {kA1, kB1, kB1, kW1}, {kB1, kA1, kB1, kW1}, {kB1, kB1, kA1, kW1},
    {kA2, kB2, kB2, kW2}, {kB2, kA2, kB2, kW2}, {kB2, kB2, kA2, kW2},
};

double tri_rule(const Vec2& p, const Vec2& q, const Vec2& r, const PsiSpec& psi) {
    const double area = 0.5 * std::abs(cross(q - p, r - p));
    double acc = 0.0;
    for (const auto& t : kRule) acc += t.w / psi(t.a * p + t.b * q + t.c * r);
    return area * acc;
}

double tri_adaptive(const Vec2& p, const Vec2& q, const Vec2& r, const PsiSpec& psi, double coarse,
                    double abs_tol, double floor, int depth, int max_depth) {
    const Vec2 pq = 0.5 * (p + q), qr = 0.5 * (q + r), rp = 0.5 * (r + p);
    const double s1 = tri_rule(p, pq, rp, psi);
    const double s2 = tri_rule(pq, q, qr, psi);
    const double s3 = tri_rule(rp, qr, r, psi);
    const double s4 = tri_rule(pq, qr, rp, psi);
    const double fine = s1 + s2 + s3 + s4;
    // floor: a few ulps of the whole polygon's integral
    if (std::abs(fine - coarse) <= std::max(abs_tol, floor)) return fine;
    if (depth >= max_depth) fail(ErrorCode::QuadratureFail, "triangle quadrature did not reach tolerance");
    const double t = 0.25 * abs_tol;
    return tri_adaptive(p, pq, rp, psi, s1, t, floor, depth + 1, max_depth) +
           tri_adaptive(pq, q, qr, psi, s2, t, floor, depth + 1, max_depth) +
           tri_adaptive(rp, qr, r, psi, s3, t, floor, depth + 1, max_depth) +
           tri_adaptive(pq, qr, rp, psi, s4, t, floor, depth + 1, max_depth);
}

constexpr double kGx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
constexpr double kGw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                           0.2369268850561891};

double seg_rule(const Vec2& a, const Vec2& b, const PsiSpec& psi) {
    const double len = (b - a).norm();
    double acc = 0.0;
    for (int q = 0; q < 5; ++q) acc += kGw[q] / psi(a + 0.5 * (kGx[q] + 1.0) * (b - a));
    return 0.5 * len * acc;
}

double seg_adaptive(const Vec2& a, const Vec2& b, const PsiSpec& psi, double coarse, double abs_tol, double floor,
                    int depth, int max_depth) {
    const Vec2 m = 0.5 * (a + b);
    const double l = seg_rule(a, m, psi);
    const double r = seg_rule(m, b, psi);
    if (std::abs(l + r - coarse) <= std::max(abs_tol, floor)) return l + r;
    if (depth >= max_depth) fail(ErrorCode::QuadratureFail, "segment quadrature did not reach tolerance");
    return seg_adaptive(a, m, psi, l, 0.5 * abs_tol, floor, depth + 1, max_depth) +
           seg_adaptive(m, b, psi, r, 0.5 * abs_tol, floor, depth + 1, max_depth);
}

}  // namespace

SubdifferentialCell gradient_cell(const PLConcaveFunction& u, const Vec2& site) {
    if (u.size() == 0) fail(ErrorCode::EmptyInput, "function has no pieces");
    if (!site.allFinite()) fail(ErrorCode::OutOfDomain, "site is not finite");
    const double tol = kActiveTol * piece_scale(u, site);
    std::vector<Vec2> grads;
    for (std::size_t i : u.active_pieces(site, tol)) grads.push_back(-u.pieces()[i].gradient2());
    return cell_from_gradients(site, std::move(grads));
}

SubdifferentialCell gradient_cell(const PLConcaveFunction& u, const Vec2& site, const Box2& region) {
    if (!site.allFinite() || (site.array() < region.lo.array()).any() || (site.array() > region.hi.array()).any())
        fail(ErrorCode::OutOfDomain, "site lies outside the region of interest");
    return gradient_cell(u, site);
}

ConvexPolygon gradient_image(const PLConcaveFunction& u) {
    std::vector<Vec2> g;
    for (const auto& p : u.pieces()) g.push_back(-p.gradient2());
    auto h = convex_hull(std::move(g));
    if (h.size() < 3) return {};
    return polygon_from_vertices(std::move(h));
}

double psi_weighted_mass(const ConvexPolygon& poly, const PsiSpec& psi, const QuadratureOptions& opt) {
    if (psi.kind == PsiSpec::Kind::Zero) fail(ErrorCode::WrongPsi, "psi = zero has no weighted measure");
    if (poly.empty()) return 0.0;
    if (psi.kind == PsiSpec::Kind::One) return poly.area();
    const auto& v = poly.vertices;
    std::vector<double> coarse;
    double estimate = 0.0;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        coarse.push_back(tri_rule(v[0], v[k], v[k + 1], psi));
        estimate += coarse.back();
    }
    const double area = poly.area();
    double total = 0.0;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        const double share = 0.5 * std::abs(cross(v[k] - v[0], v[k + 1] - v[0])) / area;
        const double tol = std::max(opt.rel_tol * std::abs(estimate) * share, 1e-300);
        total += tri_adaptive(v[0], v[k], v[k + 1], psi, coarse[k - 1], tol, 64 * kEps * std::abs(estimate), 0, opt.max_depth);
    }
    return total;
}

double psi_weighted_mass(const SubdifferentialCell& cell, const PsiSpec& psi, const QuadratureOptions& opt) {
    return psi_weighted_mass(cell.cell, psi, opt);
}

double psi_weighted_length(const Vec2& a, const Vec2& b, const PsiSpec& psi, const QuadratureOptions& opt) {
    if (psi.kind == PsiSpec::Kind::Zero) fail(ErrorCode::WrongPsi, "psi = zero has no weighted measure");
    const double len = (b - a).norm();
    if (len == 0.0) return 0.0;
    if (psi.kind == PsiSpec::Kind::One) return len;
    const double coarse = seg_rule(a, b, psi);
    return seg_adaptive(a, b, psi, coarse, std::max(opt.rel_tol * std::abs(coarse), 1e-300), 64 * kEps * std::abs(coarse), 0,
                        opt.max_depth);
}

MAMeasure ma_measure(const PLConcaveFunction& u, std::span<const Vec2> sites, const PsiSpec& psi,
                     std::optional<double> clip_radius) {
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(sites[a].x(), sites[a].y()) < std::tie(sites[b].x(), sites[b].y());
    });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (sites[order[k]] == sites[order[k - 1]]) fail(ErrorCode::DuplicateSites, "sites must be distinct");

    ConvexPolygon clip;
    if (clip_radius) clip = make_circumscribed_ngon(Vec2::Zero(), *clip_radius, 256);

    MAMeasure m;
    m.sites.assign(sites.begin(), sites.end());
    for (const auto& s : sites) {
        SubdifferentialCell c = gradient_cell(u, s);
        if (clip_radius && !c.cell.empty()) {
            std::vector<Halfplane> hps;
            const auto& cv = clip.vertices;
            for (std::size_t k = 0; k < cv.size(); ++k) {
                const Vec2 e = cv[(k + 1) % cv.size()] - cv[k];
                const Vec2 n(e.y(), -e.x());
                hps.push_back({n, n.dot(cv[k]), -1});
            }
            c.cell = clip_polygon(c.cell, hps);
        }
        // ridge and point cells carry no mass; polygon cells of distinct
        // envelope vertices meet only along edges
        const double mass = c.cell.empty() ? 0.0 : psi_weighted_mass(c.cell, psi);
        m.masses.push_back(mass);
        m.total += mass;
        m.cells.push_back(std::move(c));
    }
    return m;
}

ConvexPolygon nodal_cell(const Vec2& x, double value, std::span<const StencilNeighbour> neighbours, double bound) {
    ConvexPolygon cell = make_box(Vec2(-bound, -bound), Vec2(bound, bound), -1);
    for (const auto& nb : neighbours) {
        const Halfplane hp{nb.x - x, value - nb.value, nb.tag};
        cell = clip_polygon(cell, hp);
        if (cell.empty()) break;
    }
    return cell;
}

}  // namespace kfree
