#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kfree/error.hpp"
#include "kfree/homogeneous.hpp"
#include "kfree/subdifferential.hpp"

#include <cmath>
#include <random>

using namespace kfree;

namespace {

PLConcaveFunction negative_norm(int n) {
    std::vector<AffinePiece> pieces;
    for (int k = 0; k < n; ++k) {
        const double t = 2 * M_PI * k / n;
        AffinePiece p;
        p.slope = {-std::cos(t), -std::sin(t), 0.0};
        pieces.push_back(p);
    }
    return lower_envelope(2, pieces);
}

/// Tangent planes of h0 + alpha (r0^2 - |x|^2) at grid points of spacing h on [-1, 1]^2.
PLConcaveFunction paraboloid_planes(double alpha, double h, std::uint64_t seed, double wobble = 0.2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-wobble * h, wobble * h);
    std::vector<AffinePiece> pieces;
    const int n = static_cast<int>(std::lround(2.0 / h));
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const Vec2 t(-1.0 + i * h + jitter(rng), -1.0 + j * h + jitter(rng));
            AffinePiece p;
            p.slope = {-2 * alpha * t.x(), -2 * alpha * t.y(), 0.0};
            p.offset = 1.0 + alpha + alpha * t.squaredNorm();
            pieces.push_back(p);
        }
    return lower_envelope(2, pieces);
}

double mass_in_box(const PLConcaveFunction& u, double half) {
    std::vector<Vec2> sites;
    for (const auto& v : envelope_vertices(u))
        if (std::abs(v.x.x()) < half && std::abs(v.x.y()) < half) sites.push_back(v.x);
    return ma_measure(u, sites, PsiSpec::one()).total;
}

}  // namespace

TEST_CASE("psi kinds") {
    CHECK(PsiSpec::one()(3.0) == 1.0);
    CHECK(PsiSpec::gauss(2)(1.0) == doctest::Approx(4.0));
    CHECK(PsiSpec::gauss(3)(1.0) == doctest::Approx(std::pow(2.0, 2.5)));
    CHECK(PsiSpec::power_law(3.0)(1.0) == doctest::Approx(std::pow(2.0, 1.5)));
    CHECK(parse_psi("gauss", 2, 0.0).kind == PsiSpec::Kind::Gauss);
    for (double r = 0.0; r < 5.0; r += 0.25) CHECK(PsiSpec::gauss(2)(r + 0.25) >= PsiSpec::gauss(2)(r));
}

TEST_CASE("cell of the negative norm at the apex") {
    const auto u = negative_norm(64);
    const auto c = gradient_cell(u, Vec2::Zero());
    CHECK(c.hull.size() == 64);
    CHECK(std::abs(c.area() - M_PI) / M_PI < 2 * M_PI / 64);
    CHECK(psi_weighted_mass(c, PsiSpec::one()) == doctest::Approx(M_PI).epsilon(1e-2));
}

TEST_CASE("affine function has a singleton cell") {
    AffinePiece p;
    p.slope = {0.3, -0.4, 0.0};
    p.offset = 2.0;
    const auto u = lower_envelope(2, {p});
    const auto c = gradient_cell(u, Vec2(0.1, 0.2));
    CHECK(c.hull.size() == 1);
    CHECK(c.area() == 0.0);
    const std::vector<Vec2> site{Vec2(0.5, 0.5)};
    CHECK(ma_measure(u, site, PsiSpec::one()).total == 0.0);
}

TEST_CASE("ridge point of a tent has a segment cell") {
    AffinePiece a, b;
    a.slope = {1.0, 0.0, 0.0};
    b.slope = {-1.0, 0.0, 0.0};
    const auto u = lower_envelope(2, {a, b});
    const auto c = gradient_cell(u, Vec2(0.0, 0.7));
    CHECK(c.hull.size() == 2);
    CHECK(c.area() == 0.0);
}

TEST_CASE("gradient cell outside the region") {
    const auto u = negative_norm(8);
    try {
        gradient_cell(u, Vec2(5.0, 0.0), Box2{Vec2(-1, -1), Vec2(1, 1)});
        FAIL("expected OutOfDomain");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfDomain);
    }
}

TEST_CASE("gauss weighted mass of the unit disk") {
    const auto u64 = negative_norm(64);
    const auto c = gradient_cell(u64, Vec2::Zero());
    CHECK(psi_weighted_mass(c, PsiSpec::gauss(2)) == doctest::Approx(M_PI / 2).epsilon(1e-2));
    // On a fine polygon the closed-form radial integral is matched tightly.
    const ConvexPolygon fine = make_circumscribed_ngon(Vec2::Zero(), 1.0, 4096);
    CHECK(psi_weighted_mass(fine, PsiSpec::gauss(2)) == doctest::Approx(M_PI / 2).epsilon(1e-5));
}

TEST_CASE("empty cell has zero mass and psi = zero is rejected") {
    CHECK(psi_weighted_mass(ConvexPolygon{}, PsiSpec::one()) == 0.0);
    CHECK(psi_weighted_mass(ConvexPolygon{}, PsiSpec::gauss(2)) == 0.0);
    try {
        psi_weighted_mass(make_box(Vec2(0, 0), Vec2(1, 1)), PsiSpec::zero());
        FAIL("expected WrongPsi");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WrongPsi);
    }
}

TEST_CASE("unit mass equals the shoelace area") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        std::vector<Vec2> pts;
        for (int k = 0; k < 12; ++k) pts.emplace_back(U(rng), U(rng));
        const auto hull = convex_hull(pts);
        CHECK(std::abs(psi_weighted_mass(polygon_from_vertices(hull), PsiSpec::one()) - signed_area(hull)) <= 1e-12);
    }
}

TEST_CASE("power weighted mass against a radial integral") {
    // 2 pi int_0^1 rho (1 + rho^2)^{-p/2} d rho with p = 4 is pi / 2.
    const ConvexPolygon fine = make_circumscribed_ngon(Vec2::Zero(), 1.0, 4096);
    CHECK(psi_weighted_mass(fine, PsiSpec::power_law(4.0)) == doctest::Approx(M_PI / 2).epsilon(1e-5));
    CHECK(psi_weighted_length(Vec2(0, 0), Vec2(1, 0), PsiSpec::gauss(2)) ==
          doctest::Approx(0.25 + M_PI / 8.0).epsilon(1e-10));
}

TEST_CASE("zero measure on the ridges of the square solution") {
    const auto sq = ConvexDomain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    const auto sol = solve_polytope(sq, 1.0, 1.0);
    REQUIRE(sol.surface.size() == 4);
    std::vector<Vec2> sites;
    for (double t : {0.1, 0.3, 0.6, 0.9}) {
        sites.emplace_back(1.0 + t, 1.0 + t);
        sites.emplace_back(-t, 1.0 + t);
        sites.emplace_back(-t, -t);
        sites.emplace_back(1.0 + t, -t);
    }
    const auto m = ma_measure(sol.surface, sites, PsiSpec::one());
    for (double v : m.masses) CHECK(v == 0.0);
    for (const auto& c : m.cells) CHECK(c.hull.size() == 2);
    CHECK(m.total == 0.0);
}

TEST_CASE("paraboloid tangent planes carry mass (2 alpha)^2 |E|") {
    const double alpha = 0.5;
    const auto u = paraboloid_planes(alpha, 0.05, 1);
    const double total = mass_in_box(u, 0.5);
    CHECK(std::abs(total - 4 * alpha * alpha * 1.0) / (4 * alpha * alpha) < 0.05);
}

TEST_CASE("masses converge weakly under refinement") {
    // Integrate the measure against the bump (1 - |x|^2 / R^2)^2, whose
    // integral against (2 alpha)^2 dx is (2 alpha)^2 pi R^2 / 3.
    const double alpha = 0.75, R = 0.6;
    const double exact = 4 * alpha * alpha * M_PI * R * R / 3.0;
    double prev = 1e300;
    for (double h : {0.2, 0.1, 0.05}) {
        const auto u = paraboloid_planes(alpha, h, 2, 0.0);
        std::vector<Vec2> sites;
        for (const auto& v : envelope_vertices(u))
            if (v.x.norm() < R) sites.push_back(v.x);
        const auto m = ma_measure(u, sites, PsiSpec::one());
        double sum = 0.0;
        for (std::size_t i = 0; i < sites.size(); ++i) sum += m.masses[i] * std::pow(1 - sites[i].squaredNorm() / (R * R), 2);
        const double err = std::abs(sum - exact);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev / exact < 1e-2);
}

TEST_CASE("cells overlap only on null sets") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<AffinePiece> pieces(30);
        for (auto& p : pieces) {
            p.slope = {U(rng), U(rng), 0.0};
            p.offset = U(rng);
        }
        const auto u = lower_envelope(2, pieces);
        std::vector<Vec2> sites;
        for (const auto& v : envelope_vertices(u)) sites.push_back(v.x);
        const auto m = ma_measure(u, sites, PsiSpec::one());
        double sum = 0.0;
        for (double v : m.masses) sum += v;
        CHECK(std::abs(sum - m.total) < 1e-12);
        CHECK(m.total <= gradient_image(u).area() + 1e-8);
    }
}

TEST_CASE("duplicate sites are rejected") {
    const auto u = negative_norm(8);
    const std::vector<Vec2> sites{Vec2(0.1, 0.1), Vec2(0.1, 0.1)};
    try {
        ma_measure(u, sites, PsiSpec::one());
        FAIL("expected DuplicateSites");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateSites);
    }
}

TEST_CASE("clip radius bounds the apex cell") {
    const auto u = negative_norm(64);
    const std::vector<Vec2> site{Vec2::Zero()};
    const auto m = ma_measure(u, site, PsiSpec::one(), 0.5);
    CHECK(m.total == doctest::Approx(M_PI * 0.25).epsilon(2e-3));
}

TEST_CASE("nodal cell of a quadratic on a square stencil") {
    const double h = 0.1;
    std::vector<StencilNeighbour> nb;
    int tag = 0;
    for (const Vec2& d : {Vec2(h, 0), Vec2(-h, 0), Vec2(0, h), Vec2(0, -h)}) nb.push_back({d, -0.5 * d.squaredNorm(), tag++});
    const auto cell = nodal_cell(Vec2::Zero(), 0.0, nb, 10.0);
    CHECK(cell.area() == doctest::Approx(h * h).epsilon(1e-12));
    for (int t : cell.edge_tags) CHECK(t >= 0);
    const auto boxed = nodal_cell(Vec2::Zero(), 0.0, nb, 0.01);
    CHECK(boxed.area() == doctest::Approx(0.02 * 0.02).epsilon(1e-12));
}
