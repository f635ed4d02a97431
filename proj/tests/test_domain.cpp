#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kfree/domain.hpp"
#include "kfree/error.hpp"

#include <cmath>

using namespace kfree;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("disk basics") {
    const auto d = ConvexDomain::disk(Vec2(1.0, -2.0), 0.5);
    CHECK(d.perimeter() == doctest::Approx(M_PI));
    CHECK(d.area() == doctest::Approx(M_PI / 4));
    CHECK(d.min_curvature() == doctest::Approx(2.0));
    CHECK(d.signed_distance(Vec2(3.0, -2.0)) == doctest::Approx(1.5));
    CHECK(d.signed_distance(Vec2(1.0, -2.0)) == doctest::Approx(-0.5));
    const auto b = d.boundary_at(0.25);
    CHECK((b.point - Vec2(1.0, -1.5)).norm() < 1e-14);
    CHECK((b.normal - Vec2(0.0, 1.0)).norm() < 1e-14);
    CHECK(d.support(Vec2(1.0, 0.0)) == doctest::Approx(1.5));
}

TEST_CASE("ellipse perimeter against a series") {
    const double a = 1.0, b = 0.8;
    // Gauss-Kummer series in h = ((a - b) / (a + b))^2.
    const double h = std::pow((a - b) / (a + b), 2);
    const double series = M_PI * (a + b) * (1 + h / 4 + h * h / 64 + h * h * h / 256 + 25 * std::pow(h, 4) / 16384);
    const auto e = ConvexDomain::ellipse(Vec2::Zero(), a, b, 0.3);
    CHECK(e.perimeter() == doctest::Approx(series).epsilon(1e-9));
    CHECK(e.area() == doctest::Approx(M_PI * a * b).epsilon(1e-12));
    CHECK(e.min_curvature() == doctest::Approx(b / (a * a)).epsilon(1e-9));
}

TEST_CASE("ellipse arc length parametrization is uniform") {
    const auto e = ConvexDomain::ellipse(Vec2(0.5, 0.2), 2.0, 0.7, 1.1);
    const int n = 400;
    const auto pts = e.sample_boundary(n, PlanePlacement::ArcLength);
    double lo = 1e300, hi = 0;
    for (int i = 0; i < n; ++i) {
        const double c = (pts[(i + 1) % n].point - pts[i].point).norm();
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    CHECK(hi / lo < 1.0 + 1e-3);
    for (const auto& s : pts) {
        CHECK(std::abs(e.signed_distance(s.point)) < 1e-12);
        CHECK((e.normal_at(s.point) - s.normal).norm() < 1e-9);
    }
}

TEST_CASE("normal angle placement hits the requested normals") {
    const auto e = ConvexDomain::ellipse(Vec2::Zero(), 1.5, 1.0, 0.25);
    const auto pts = e.sample_boundary(64, PlanePlacement::NormalAngle);
    for (int i = 0; i < 64; ++i) {
        const double t = 2 * M_PI * i / 64;
        CHECK((pts[i].normal - Vec2(std::cos(t), std::sin(t))).norm() < 1e-10);
    }
}

TEST_CASE("ellipse signed distance by brute force") {
    const auto e = ConvexDomain::ellipse(Vec2(0.1, 0.0), 1.3, 0.6, 0.7);
    const auto ring = e.boundary_polygon(200000);
    for (const Vec2& x : {Vec2(2.0, 1.0), Vec2(-1.5, 0.2), Vec2(0.0, -2.0)}) {
        double best = 1e300;
        for (const auto& p : ring) best = std::min(best, (p - x).norm());
        CHECK(e.signed_distance(x) == doctest::Approx(best).epsilon(1e-6));
    }
}

TEST_CASE("polygon normals and rejections") {
    const auto sq = ConvexDomain::polygon({{0, 0}, {2, 0}, {2, 1}, {0, 1}});
    CHECK((sq.normal_at(Vec2(1.0, 0.0)) - Vec2(0, -1)).norm() < 1e-15);
    CHECK(code_of([&] { sq.normal_at(Vec2(2.0, 1.0)); }) == ErrorCode::NonSmoothBoundaryPoint);
    CHECK(code_of([&] { sq.normal_at(Vec2(0.5, 0.5)); }) == ErrorCode::OutOfDomain);
    CHECK(sq.min_curvature() == 0.0);
    CHECK(code_of([] { ConvexDomain::polygon({{0, 0}, {2, 0}, {0.5, 0.5}, {0, 2}}); }) == ErrorCode::NotAPolytope);
    CHECK(code_of([] { ConvexDomain::disk(Vec2::Zero(), -1.0); }) == ErrorCode::InvalidParam);
}

TEST_CASE("sampled circle behaves like the disk") {
    std::vector<Vec2> p, n;
    std::vector<double> k;
    const int N = 720;
    for (int i = 0; i < N; ++i) {
        const double t = 2 * M_PI * i / N;
        n.emplace_back(std::cos(t), std::sin(t));
        p.push_back(2.0 * n.back());
        k.push_back(0.5);
    }
    const auto s = ConvexDomain::sampled(p, n, k);
    CHECK(s.min_curvature() == doctest::Approx(0.5));
    CHECK(s.perimeter() == doctest::Approx(4 * M_PI).epsilon(1e-4));
    CHECK(s.contains(Vec2(1.0, 1.0)));
    CHECK(!s.contains(Vec2(2.0, 1.0)));
}

TEST_CASE("polytope factory drops redundant facets") {
    std::vector<Halfspace3> hs;
    for (int a = 0; a < 3; ++a)
        for (double s : {1.0, -1.0}) {
            Vec3 nrm = Vec3::Zero();
            nrm[a] = 2.0 * s;
            hs.push_back({nrm, 2.0});
        }
    hs.push_back({Vec3(1, 1, 1), 10.0});
    const auto p = ConvexDomain::polytope(hs);
    CHECK(p.dim() == 3);
    CHECK(p.as_polytope()->facets.size() == 6);
    for (const auto& f : p.as_polytope()->facets) CHECK(f.normal.norm() == doctest::Approx(1.0));
}

TEST_CASE("support plane rejects bad slopes") {
    const auto d = ConvexDomain::disk(Vec2::Zero(), 1.0);
    CHECK(code_of([&] { support_plane_with_slope(d, Vec2(1, 0), 1.0, 0.0); }) == ErrorCode::InvalidParam);
    CHECK(code_of([&] { support_plane_with_slope(d, Vec2(1, 0), -1.0, 1.0); }) == ErrorCode::InvalidParam);
}
