#pragma once

#include "kfree/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kfree {

/// Gradient weight psi(|xi|) on the right-hand side of the equation.
struct PsiSpec {
    enum class Kind { Zero, One, Gauss, Power };

    Kind kind = Kind::One;
    int dim = 2;         ///< exponent (dim + 2) / 2 for Gauss
    double power = 0.0;  ///< exponent power / 2 for Power

    static PsiSpec zero() { return {Kind::Zero, 2, 0.0}; }
    static PsiSpec one() { return {Kind::One, 2, 0.0}; }
    static PsiSpec gauss(int dim) { return {Kind::Gauss, dim, 0.0}; }
    static PsiSpec power_law(double p) { return {Kind::Power, 2, p}; }

    double operator()(double r) const;
    double operator()(const Vec2& xi) const { return (*this)(xi.norm()); }

    std::string name() const;
};

/// Parses "zero", "one", "gauss" or "power"; Power needs the exponent.
PsiSpec parse_psi(const std::string& kind, int dim, double power);

/// Subdifferential of -u at a site: the convex hull of the negated active
/// gradients. Fewer than three hull points means a null set (point or segment).
struct SubdifferentialCell {
    Vec2 site;
    std::vector<Vec2> hull;  ///< CCW hull of the generating gradients
    ConvexPolygon cell;      ///< polygon form, empty when hull.size() < 3

    double area() const { return cell.empty() ? 0.0 : cell.area(); }
};

/// Tolerance for deciding which pieces are active, relative to the scale of u.
inline constexpr double kActiveTol = 1e-9;

SubdifferentialCell gradient_cell(const PLConcaveFunction& u, const Vec2& site);

/// Same, but throws OutOfDomain if the site is outside the box.
SubdifferentialCell gradient_cell(const PLConcaveFunction& u, const Vec2& site, const Box2& region);

/// Convex hull of every negated gradient of u: the gradient image of -u over R^2.
ConvexPolygon gradient_image(const PLConcaveFunction& u);

struct QuadratureOptions {
    double rel_tol = 1e-9;
    int max_depth = 20;
};

/// Integral of 1/psi over a convex polygon. Exact shoelace area for psi = one;
/// adaptive triangle subdivision otherwise. Throws WrongPsi for psi = zero and
/// QuadratureFail if the tolerance is not met at max depth.
double psi_weighted_mass(const ConvexPolygon& poly, const PsiSpec& psi, const QuadratureOptions& opt = {});
double psi_weighted_mass(const SubdifferentialCell& cell, const PsiSpec& psi, const QuadratureOptions& opt = {});

/// Integral of 1/psi along the segment a-b (arc length).
double psi_weighted_length(const Vec2& a, const Vec2& b, const PsiSpec& psi, const QuadratureOptions& opt = {});

struct MAMeasure {
    std::vector<Vec2> sites;
    std::vector<double> masses;
    std::vector<SubdifferentialCell> cells;
    double total = 0.0;
};

/// Per-site psi-weighted Monge-Ampere masses. With clip_radius set every cell
/// is first intersected with a 256-gon circumscribing that disk.
MAMeasure ma_measure(const PLConcaveFunction& u, std::span<const Vec2> sites, const PsiSpec& psi,
                     std::optional<double> clip_radius = std::nullopt);

/// Neighbour of a node in a discrete stencil; the tag labels the cell edge it creates.
struct StencilNeighbour {
    Vec2 x;
    double value = 0.0;
    int tag = -1;
};

/// Discrete subdifferential of -u at node x with value u: all xi with
/// xi . (x_j - x) <= u - u_j for every neighbour, intersected with the box
/// |xi_k| <= bound. Edge tags identify the neighbour (or -1 for the box).
ConvexPolygon nodal_cell(const Vec2& x, double value, std::span<const StencilNeighbour> neighbours, double bound);

}  // namespace kfree
