#pragma once

#include "kfree/domain.hpp"
#include "kfree/subdifferential.hpp"

#include <memory>
#include <string>

namespace kfree {

/// Sufficient condition for a paraboloid super-solution:
/// K0^{1/d} <= psi(lambda0)^{-1/d} * 2 alpha.
struct ExistenceCheck {
    bool holds = false;
    double lhs = 0.0;     ///< K0^{1/d}
    double rhs = 0.0;     ///< psi(lambda0)^{-1/d} kappa0 lambda0^2 / (h0 kappa0 + sqrt(lambda0^2 + h0^2 kappa0^2))
    double margin = 0.0;  ///< rhs - lhs
    double kappa0 = 0.0;
    double alpha = 0.0;
};

/// Relative slack allowed when deciding holds (the boundary case counts as holding).
inline constexpr double kConditionSlack = 1e-12;

ExistenceCheck check_existence_condition(const ConvexDomain& omega, double h0, double lambda0, double K0,
                                         const PsiSpec& psi, int dim = 2);

/// Positive root of 4 r0^2 a^2 + 4 h0 a - lambda0^2 = 0.
double paraboloid_coefficient(double r0, double h0, double lambda0);

/// Minimum of paraboloids h0 + alpha r0^2 - alpha |x - z_k|^2, one per
/// boundary sample, with z_k the center of the enclosing ball of radius
/// r0 = 1/kappa0 touching the boundary at the sample.
struct Supersolution {
    double h0 = 0.0;
    double lambda0 = 0.0;
    double alpha = 0.0;
    double r0 = 0.0;
    std::vector<Vec2> contacts;
    std::vector<Vec2> centers;

    double operator()(const Vec2& x) const;
    std::size_t active(const Vec2& x) const;
    Vec2 gradient(const Vec2& x) const;
    /// sqrt((h0 + alpha r0^2) / alpha): radius of each paraboloid's zero circle.
    double zero_radius() const;
    /// Distance from `origin` along `dir` (unit) to the zero level set.
    double ray_exit(const Vec2& origin, const Vec2& dir) const;
};

/// Throws ConditionViolated if the existence condition fails.
Supersolution build_supersolution(const ConvexDomain& omega, double h0, double lambda0, double K0,
                                  const PsiSpec& psi, int n);

/// Structured annulus: `sectors` rays along the outward normals of the domain,
/// each carrying rings + 1 nodes from the boundary (k = 0, height h0) to the
/// trial free boundary (k = rings, height 0).
struct AnnulusGrid {
    int sectors = 0;
    int rings = 0;
    int stencil = 3;
    double h0 = 0.0;
    std::vector<Vec2> base;
    std::vector<Vec2> normals;
    std::vector<double> extent;  ///< ray length to the trial free boundary, per sector
    std::vector<double> values;  ///< index k * sectors + s

    int index(int s, int k) const { return k * sectors + wrap(s); }
    int wrap(int s) const { return ((s % sectors) + sectors) % sectors; }
    Vec2 node(int s, int k) const;
    Vec2 node(int i) const { return node(i % sectors, i / sectors); }
    double& value(int s, int k) { return values[static_cast<std::size_t>(index(s, k))]; }
    double value(int s, int k) const { return values[static_cast<std::size_t>(index(s, k))]; }
    int size() const { return sectors * (rings + 1); }
    bool interior(int i) const { const int k = i / sectors; return k > 0 && k < rings; }
    std::vector<Vec2> free_boundary() const;
    std::vector<Vec2> inner_boundary() const;
};

/// Nodes with base points at arc-length fractions s / sectors and boundary values set.
AnnulusGrid make_annulus(const ConvexDomain& omega, double h0, int sectors, int rings, int stencil,
                         const std::vector<double>& extent);

struct NodalCells {
    std::vector<ConvexPolygon> cells;  ///< per node (empty for boundary nodes)
    std::vector<double> masses;
    std::vector<double> areas;         ///< Voronoi area of interior nodes
};

/// Discrete subdifferential cell, psi-weighted mass and Voronoi area of every interior node.
NodalCells nodal_cells(const AnnulusGrid& grid, const PsiSpec& psi, double gradient_bound, bool with_areas = true);

struct DirichletOptions {
    double tol = 1e-8;   ///< max absolute per-node residual
    int max_newton = 60;
    double gradient_bound = 0.0;  ///< box half-size in gradient space (required)
};

struct DirichletReport {
    int iterations = 0;
    double max_residual = 0.0;
};

/// Solves psi_mass(cell_i) = K0 A_i at every interior node by damped Newton,
/// starting from the values stored in the grid. Throws NoConvergence or
/// NonAdmissibleBoundary.
DirichletReport ma_dirichlet_solve(AnnulusGrid& grid, double K0, const PsiSpec& psi, const DirichletOptions& opt);

/// |grad u| at each free boundary node from the one-sided second-order difference along the ray.
std::vector<double> free_boundary_gradients(const AnnulusGrid& grid);

/// -grad u at the inner and outer boundary nodes.
std::vector<Vec2> boundary_gradient_images(const AnnulusGrid& grid, bool outer);

struct EllipticOptions {
    int sectors = 64;
    int rings = 32;
    int stencil = 3;
    int n_planes = 256;  ///< paraboloids in the super-solution
    double ma_tol = 1e-8;
    double fb_tol = 1e-3;
    int max_outer = 300;
    int max_newton = 60;
    double damping = 0.5;
};

enum class SolveStatus { Converged, NonexistenceSuspected };

struct EllipticSolution {
    std::shared_ptr<const ConvexDomain> omega;
    double h0 = 0.0, lambda0 = 0.0, K0 = 0.0;
    PsiSpec psi;
    AnnulusGrid grid;
    ExistenceCheck condition;
    SolveStatus status = SolveStatus::NonexistenceSuspected;
    bool converged = false;
    std::string reason;
    int outer_iterations = 0;
    int newton_iterations = 0;
    double ma_residual = 0.0;           ///< sum |mass - K0 A| / sum K0 A over interior nodes
    double ma_max_residual = 0.0;       ///< max absolute per-node residual
    double fb_gradient_residual = 0.0;  ///< max ||g| - lambda0| / lambda0
    std::vector<double> fb_gradients;
    std::vector<Vec2> free_boundary;
};

/// Trial free boundary iteration. Failure modes that indicate a genuine
/// nonexistence regime are returned as NonexistenceSuspected, not thrown.
EllipticSolution solve_free_boundary(const ConvexDomain& omega, double h0, double lambda0, double K0,
                                     const PsiSpec& psi, const EllipticOptions& opt = {});

/// Least-squares quadratic fit over the 8-neighbourhood; returns the largest
/// Hessian eigenvalue per interior node with k <= rings - 2 (NaN elsewhere).
std::vector<double> hessian_max_eigenvalues(const AnnulusGrid& grid);

}  // namespace kfree
