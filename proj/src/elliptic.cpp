#include "kfree/elliptic.hpp"

#include "kfree/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kfree {

double paraboloid_coefficient(double r0, double h0, double lambda0) {
    // rationalized root, stable for small r0 * lambda0
    return lambda0 * lambda0 / (2.0 * (h0 + std::sqrt(h0 * h0 + r0 * r0 * lambda0 * lambda0)));
}

ExistenceCheck check_existence_condition(const ConvexDomain& omega, double h0, double lambda0, double K0,
                                         const PsiSpec& psi, int dim) {
    if (!(h0 > 0.0) || !(lambda0 > 0.0) || !(K0 >= 0.0))
        fail(ErrorCode::InvalidParam, "need h0 > 0, lambda0 > 0, K0 >= 0");
    ExistenceCheck c;
    c.kappa0 = omega.min_curvature();
    if (!(c.kappa0 > 0.0)) fail(ErrorCode::ZeroCurvature, "boundary curvature must be bounded below by a positive constant");
    c.alpha = paraboloid_coefficient(1.0 / c.kappa0, h0, lambda0);
    const double psi_l = psi.kind == PsiSpec::Kind::Zero ? 1.0 : psi(lambda0);
    c.lhs = std::pow(K0, 1.0 / dim);
    c.rhs = std::pow(psi_l, -1.0 / dim) * 2.0 * c.alpha;
    c.margin = c.rhs - c.lhs;
    c.holds = c.lhs <= c.rhs * (1.0 + kConditionSlack);
    return c;
}

double Supersolution::operator()(const Vec2& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& z : centers) m = std::min(m, h0 + alpha * r0 * r0 - alpha * (x - z).squaredNorm());
    return m;
}

std::size_t Supersolution::active(const Vec2& x) const {
    std::size_t best = 0;
    double far = -1.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = (x - centers[k]).squaredNorm();
        if (d > far) {
            far = d;
            best = k;
        }
    }
    return best;
}

Vec2 Supersolution::gradient(const Vec2& x) const { return -2.0 * alpha * (x - centers[active(x)]); }

double Supersolution::zero_radius() const { return std::sqrt((h0 + alpha * r0 * r0) / alpha); }

double Supersolution::ray_exit(const Vec2& origin, const Vec2& dir) const {
    const double rho2 = (h0 + alpha * r0 * r0) / alpha;
    double t = std::numeric_limits<double>::infinity();
    for (const auto& z : centers) {
        const Vec2 w = origin - z;
        const double b = dir.dot(w);
        const double c = w.squaredNorm() - rho2;
        t = std::min(t, -b + std::sqrt(std::max(0.0, b * b - c)));
    }
    return t;
}

Supersolution build_supersolution(const ConvexDomain& omega, double h0, double lambda0, double K0,
                                  const PsiSpec& psi, int n) {
    const ExistenceCheck c = check_existence_condition(omega, h0, lambda0, K0, psi, 2);
    if (!c.holds) fail(ErrorCode::ConditionViolated, "curvature bound fails; no paraboloid super-solution");
    if (n < 1) fail(ErrorCode::InvalidParam, "need at least one paraboloid");
    Supersolution s;
    s.h0 = h0;
    s.lambda0 = lambda0;
    s.alpha = c.alpha;
    s.r0 = 1.0 / c.kappa0;
    for (const auto& b : omega.sample_boundary(n, PlanePlacement::ArcLength)) {
        s.contacts.push_back(b.point);
        s.centers.push_back(b.point - s.r0 * b.normal);
    }
    return s;
}

Vec2 AnnulusGrid::node(int s, int k) const {
    const auto si = static_cast<std::size_t>(wrap(s));
    return base[si] + (static_cast<double>(k) / rings) * extent[si] * normals[si];
}

std::vector<Vec2> AnnulusGrid::free_boundary() const {
    std::vector<Vec2> out;
    for (int s = 0; s < sectors; ++s) out.push_back(node(s, rings));
    return out;
}

std::vector<Vec2> AnnulusGrid::inner_boundary() const {
    std::vector<Vec2> out;
    for (int s = 0; s < sectors; ++s) out.push_back(node(s, 0));
    return out;
}

AnnulusGrid make_annulus(const ConvexDomain& omega, double h0, int sectors, int rings, int stencil,
                         const std::vector<double>& extent) {
    if (sectors < 8 || rings < 3 || stencil < 1) fail(ErrorCode::InvalidParam, "need sectors >= 8, rings >= 3, stencil >= 1");
    if (static_cast<int>(extent.size()) != sectors) fail(ErrorCode::InvalidParam, "one extent per sector");
    AnnulusGrid g;
    g.sectors = sectors;
    g.rings = rings;
    g.stencil = stencil;
    g.h0 = h0;
    g.extent = extent;
    for (const auto& b : omega.sample_boundary(sectors, PlanePlacement::ArcLength)) {
        g.base.push_back(b.point);
        g.normals.push_back(b.normal);
    }
    g.values.assign(static_cast<std::size_t>(g.size()), 0.0);
    for (int s = 0; s < sectors; ++s) {
        g.value(s, 0) = h0;
        for (int k = 1; k < rings; ++k) g.value(s, k) = h0 * (1.0 - static_cast<double>(k) / rings);
    }
    return g;
}

namespace {

std::vector<StencilNeighbour> neighbours_of(const AnnulusGrid& g, int s, int k) {
    std::vector<StencilNeighbour> out;
    for (int dk = -g.stencil; dk <= g.stencil; ++dk) {
        const int kk = k + dk;
        if (kk < 0 || kk > g.rings) continue;
        for (int ds = -g.stencil; ds <= g.stencil; ++ds) {
            if (ds == 0 && dk == 0) continue;
            const int j = g.index(s + ds, kk);
            out.push_back({g.node(j), g.values[static_cast<std::size_t>(j)], j});
        }
    }
    return out;
}

double voronoi_area(const Vec2& x, const std::vector<StencilNeighbour>& nb) {
    double reach = 0.0;
    for (const auto& n : nb) reach = std::max(reach, (n.x - x).norm());
    ConvexPolygon cell = make_box(x - Vec2::Constant(reach), x + Vec2::Constant(reach));
    for (const auto& n : nb) {
        const Vec2 d = n.x - x;
        cell = clip_polygon(cell, Halfplane{d, 0.5 * (n.x.squaredNorm() - x.squaredNorm()), n.tag});
    }
    return cell.area();
}

void check_boundary(const AnnulusGrid& g) {
    for (double e : g.extent)
        if (!(e > 0.0) || !std::isfinite(e)) fail(ErrorCode::NonAdmissibleBoundary, "free boundary must lie outside the domain");
    for (int s = 0; s < g.sectors; ++s)
        if (g.value(s, 0) != g.h0 || g.value(s, g.rings) != 0.0)
            fail(ErrorCode::NonAdmissibleBoundary, "boundary heights must be h0 inside and 0 outside");
}

bool admissible(const NodalCells& c, const AnnulusGrid& g) {
    for (int i = 0; i < g.size(); ++i)
        if (g.interior(i) && c.cells[static_cast<std::size_t>(i)].empty()) return false;
    return true;
}

}  // namespace

NodalCells nodal_cells(const AnnulusGrid& grid, const PsiSpec& psi, double gradient_bound, bool with_areas) {
    NodalCells out;
    const auto n = static_cast<std::size_t>(grid.size());
    out.cells.resize(n);
    out.masses.assign(n, 0.0);
    out.areas.assign(n, 0.0);
    for (int i = 0; i < grid.size(); ++i) {
        if (!grid.interior(i)) continue;
        const int s = i % grid.sectors, k = i / grid.sectors;
        const auto nb = neighbours_of(grid, s, k);
        const Vec2 x = grid.node(i);
        const auto ui = static_cast<std::size_t>(i);
        out.cells[ui] = nodal_cell(x, grid.values[ui], nb, gradient_bound);
        out.masses[ui] = psi_weighted_mass(out.cells[ui], psi);
        if (with_areas) out.areas[ui] = voronoi_area(x, nb);
    }
    return out;
}

DirichletReport ma_dirichlet_solve(AnnulusGrid& grid, double K0, const PsiSpec& psi, const DirichletOptions& opt) {
    if (!(opt.gradient_bound > 0.0)) fail(ErrorCode::InvalidParam, "gradient bound must be positive");
    if (!(K0 > 0.0)) fail(ErrorCode::InvalidParam, "K0 must be positive for the Dirichlet solve");
    check_boundary(grid);
    const int S = grid.sectors;
    const int unknowns = S * (grid.rings - 1);
    auto unknown = [&](int i) { return i - S; };

    NodalCells cells = nodal_cells(grid, psi, opt.gradient_bound, true);
    const std::vector<double> areas = cells.areas;

    // lift an inadmissible guess by a concave bump along the rays
    if (!admissible(cells, grid)) {
        const std::vector<double> start = grid.values;
        bool ok = false;
        for (double beta = 0.05; beta <= 20.0 && !ok; beta *= 2.0) {
            for (int i = 0; i < grid.size(); ++i) {
                if (!grid.interior(i)) continue;
                const double t = static_cast<double>(i / S) / grid.rings;
                grid.values[static_cast<std::size_t>(i)] = start[static_cast<std::size_t>(i)] + beta * grid.h0 * t * (1.0 - t);
            }
            cells = nodal_cells(grid, psi, opt.gradient_bound, false);
            ok = admissible(cells, grid);
        }
        if (!ok) fail(ErrorCode::NoConvergence, "no admissible starting heights");
    }

    auto residual = [&](const NodalCells& c, Eigen::VectorXd& F) {
        F.resize(unknowns);
        for (int i = S; i < S * grid.rings; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            F[unknown(i)] = c.masses[ui] - K0 * areas[ui];
        }
    };

    Eigen::VectorXd F;
    residual(cells, F);
    DirichletReport rep;
    for (rep.iterations = 0; rep.iterations < opt.max_newton; ++rep.iterations) {
        rep.max_residual = F.cwiseAbs().maxCoeff();
        if (rep.max_residual < opt.tol) return rep;

        std::vector<Eigen::Triplet<double>> trips;
        for (int i = S; i < S * grid.rings; ++i) {
            const auto& cell = cells.cells[static_cast<std::size_t>(i)];
            const Vec2 xi = grid.node(i);
            double diag = 0.0;
            const std::size_t m = cell.vertices.size();
            for (std::size_t e = 0; e < m; ++e) {
                const int j = cell.edge_tags[e];
                if (j < 0) continue;
                const double w = psi_weighted_length(cell.vertices[e], cell.vertices[(e + 1) % m], psi) /
                                 (grid.node(j) - xi).norm();
                diag += w;
                if (grid.interior(j)) trips.emplace_back(unknown(i), unknown(j), -w);
            }
            trips.emplace_back(unknown(i), unknown(i), diag);
        }
        Eigen::SparseMatrix<double> J(unknowns, unknowns);
        J.setFromTriplets(trips.begin(), trips.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "singular Newton matrix");
        const Eigen::VectorXd delta = lu.solve(-F);
        if (lu.info() != Eigen::Success || !delta.allFinite()) fail(ErrorCode::NoConvergence, "Newton solve failed");

        const std::vector<double> old = grid.values;
        const double norm0 = F.norm();
        bool accepted = false;
        for (double t = 1.0; t > 1e-6; t *= 0.5) {
            for (int i = S; i < S * grid.rings; ++i)
                grid.values[static_cast<std::size_t>(i)] = old[static_cast<std::size_t>(i)] + t * delta[unknown(i)];
            NodalCells trial = nodal_cells(grid, psi, opt.gradient_bound, false);
            if (!admissible(trial, grid)) continue;
            Eigen::VectorXd Ft;
            residual(trial, Ft);
            if (Ft.norm() < norm0) {
                cells = std::move(trial);
                F = std::move(Ft);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            grid.values = old;
            fail(ErrorCode::NoConvergence, "line search failed in the Dirichlet solve");
        }
    }
    rep.max_residual = F.cwiseAbs().maxCoeff();
    if (rep.max_residual < opt.tol) return rep;
    fail(ErrorCode::NoConvergence, "Dirichlet solve hit the Newton iteration limit");
}

namespace {

Vec2 outer_normal(const AnnulusGrid& g, int s) {
    const Vec2 t = g.node(s + 1, g.rings) - g.node(s - 1, g.rings);
    return Vec2(t.y(), -t.x()).normalized();
}

double outer_directional(const AnnulusGrid& g, int s) {
    const double h = g.extent[static_cast<std::size_t>(s)] / g.rings;
    const int M = g.rings;
    return (3.0 * g.value(s, M) - 4.0 * g.value(s, M - 1) + g.value(s, M - 2)) / (2.0 * h);
}

}  // namespace

std::vector<double> free_boundary_gradients(const AnnulusGrid& grid) {
    std::vector<double> out;
    for (int s = 0; s < grid.sectors; ++s) {
        const double d = outer_directional(grid, s);
        const double c = outer_normal(grid, s).dot(grid.normals[static_cast<std::size_t>(s)]);
        out.push_back(-d / c);
    }
    return out;
}

std::vector<Vec2> boundary_gradient_images(const AnnulusGrid& grid, bool outer) {
    std::vector<Vec2> out;
    const auto g = outer ? free_boundary_gradients(grid) : std::vector<double>{};
    for (int s = 0; s < grid.sectors; ++s) {
        const auto si = static_cast<std::size_t>(s);
        if (outer) {
            out.push_back(g[si] * outer_normal(grid, s));
        } else {
            const double h = grid.extent[si] / grid.rings;
            const double d = (-3.0 * grid.value(s, 0) + 4.0 * grid.value(s, 1) - grid.value(s, 2)) / (2.0 * h);
            out.push_back(-d * grid.normals[si]);
        }
    }
    return out;
}

EllipticSolution solve_free_boundary(const ConvexDomain& omega, double h0, double lambda0, double K0,
                                     const PsiSpec& psi, const EllipticOptions& opt) {
    if (omega.dim() != 2) fail(ErrorCode::InvalidParam, "the curvature solver is planar only");
    if (!(K0 > 0.0)) fail(ErrorCode::InvalidParam, "K0 must be positive for the curvature solver");
    if (psi.kind == PsiSpec::Kind::Zero) fail(ErrorCode::WrongPsi, "psi = zero is the homogeneous problem");
    if (!(opt.damping > 0.0)) fail(ErrorCode::InvalidParam, "damping must be positive");
    EllipticSolution sol;
    sol.omega = std::make_shared<ConvexDomain>(omega);
    sol.h0 = h0;
    sol.lambda0 = lambda0;
    sol.K0 = K0;
    sol.psi = psi;
    sol.condition = check_existence_condition(omega, h0, lambda0, K0, psi, 2);
    if (!sol.condition.holds) {
        sol.reason = "curvature bound fails: no paraboloid super-solution to start from";
        return sol;
    }
    const Supersolution sup = build_supersolution(omega, h0, lambda0, K0, psi, opt.n_planes);

    std::vector<double> extent;
    for (const auto& b : omega.sample_boundary(opt.sectors, PlanePlacement::ArcLength))
        extent.push_back(sup.ray_exit(b.point, b.normal));
    AnnulusGrid grid = make_annulus(omega, h0, opt.sectors, opt.rings, opt.stencil, extent);
    for (int i = 0; i < grid.size(); ++i)
        if (grid.interior(i)) grid.values[static_cast<std::size_t>(i)] = sup(grid.node(i));

    const double start_mean = [&] {
        double a = 0.0;
        for (double e : extent) a += e;
        return a / static_cast<double>(extent.size());
    }();
    DirichletOptions dopt;
    dopt.tol = opt.ma_tol;
    dopt.max_newton = opt.max_newton;
    dopt.gradient_bound = 2.0 * lambda0;

    for (sol.outer_iterations = 0; sol.outer_iterations < opt.max_outer; ++sol.outer_iterations) {
        try {
            const DirichletReport r = ma_dirichlet_solve(grid, K0, psi, dopt);
            sol.newton_iterations += r.iterations;
            sol.ma_max_residual = r.max_residual;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoConvergence) throw;
            sol.grid = grid;
            sol.reason = std::string("Dirichlet step failed: ") + e.what();
            return sol;
        }
        sol.fb_gradients = free_boundary_gradients(grid);
        double worst = 0.0;
        for (double g : sol.fb_gradients) worst = std::max(worst, std::abs(g - lambda0) / lambda0);
        sol.fb_gradient_residual = worst;
        if (worst < opt.fb_tol) {
            sol.converged = true;
            sol.status = SolveStatus::Converged;
            break;
        }
        for (int s = 0; s < grid.sectors; ++s) {
            auto& e = grid.extent[static_cast<std::size_t>(s)];
            e += opt.damping * e * (sol.fb_gradients[static_cast<std::size_t>(s)] - lambda0) / lambda0;
            if (!(e > 1e-3 * start_mean)) {
                sol.grid = grid;
                sol.reason = "free boundary collapsed onto the domain";
                return sol;
            }
            if (e > 100.0 * start_mean) {
                sol.grid = grid;
                sol.reason = "free boundary drifted beyond any admissible radius";
                return sol;
            }
        }
    }
    sol.grid = grid;
    if (!sol.converged) {
        sol.reason = "trial free boundary did not settle within the outer iteration limit";
        return sol;
    }
    const NodalCells cells = nodal_cells(grid, psi, dopt.gradient_bound, true);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        if (!grid.interior(i)) continue;
        const auto ui = static_cast<std::size_t>(i);
        num += std::abs(cells.masses[ui] - K0 * cells.areas[ui]);
        den += K0 * cells.areas[ui];
    }
    sol.ma_residual = num / den;
    sol.free_boundary = grid.free_boundary();
    return sol;
}

std::vector<double> hessian_max_eigenvalues(const AnnulusGrid& grid) {
    std::vector<double> out(static_cast<std::size_t>(grid.size()), std::numeric_limits<double>::quiet_NaN());
    for (int k = 1; k <= grid.rings - 2; ++k) {
        for (int s = 0; s < grid.sectors; ++s) {
            const Vec2 x0 = grid.node(s, k);
            Eigen::Matrix<double, 9, 6> A;
            Eigen::Matrix<double, 9, 1> b;
            int row = 0;
            for (int dk = -1; dk <= 1; ++dk)
                for (int ds = -1; ds <= 1; ++ds) {
                    const Vec2 d = grid.node(s + ds, k + dk) - x0;
                    A.row(row) << 1.0, d.x(), d.y(), 0.5 * d.x() * d.x(), d.x() * d.y(), 0.5 * d.y() * d.y();
                    b[row] = grid.value(s + ds, k + dk);
                    ++row;
                }
            const Eigen::Matrix<double, 6, 1> c = A.colPivHouseholderQr().solve(b);
            Eigen::Matrix2d H;
            H << c[3], c[4], c[4], c[5];
            const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H, Eigen::EigenvaluesOnly);
            out[static_cast<std::size_t>(grid.index(s, k))] = es.eigenvalues().maxCoeff();
        }
    }
    return out;
}

}  // namespace kfree
