#pragma once

#include "kfree/elliptic.hpp"
#include "kfree/homogeneous.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kfree {

struct Check {
    std::string name;
    bool passed = false;
    double residual = 0.0;
    double tolerance = 0.0;
    std::string statement;  ///< the property being certified
};

struct Certificate {
    std::vector<Check> checks;
    std::vector<std::pair<std::string, double>> quantities;  ///< reported values (radii, areas, ...)
    bool overall = true;
    std::uint64_t seed = 0;

    /// Records residual <= tolerance.
    void add(std::string name, double residual, double tolerance, std::string statement);
    void note(std::string name, double value) { quantities.emplace_back(std::move(name), value); }
    const Check* find(const std::string& name) const;
    std::optional<double> quantity(const std::string& name) const;
};

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct HomogeneousCertOptions {
    double measure_tol = 1e-8;
    double boundary_tol = 1e-10;
    double slope_tol = 1e-10;
    int random_sites = 200;
    int ruled_samples = 200;
    std::uint64_t seed = kDefaultSeed;
};

struct EllipticCertOptions {
    double measure_tol = 1e-3;
    double slope_tol = 1e-3;       ///< relative to lambda0
    double comparison_tol = 1e-8;
    double symmetry_tol = 1e-2;
    double regular_turn_deg = 1.0;
    std::uint64_t seed = kDefaultSeed;
};

Certificate certify_weak_solution(const HomogeneousSolution& sol, const HomogeneousCertOptions& opt = {});

Certificate certify_weak_solution(const EllipticSolution& sol, const EllipticCertOptions& opt = {});

/// Same checks on a bare grid (e.g. an oracle profile sampled onto the mesh).
Certificate certify_grid(const AnnulusGrid& grid, const ConvexDomain& omega, double h0, double lambda0, double K0,
                         const PsiSpec& psi, const EllipticCertOptions& opt = {});

/// Free boundary nodes whose turn angle differs from the mean of its two
/// neighbours' by less than the threshold (discrete differentiability).
std::vector<bool> regular_nodes(const std::vector<Vec2>& ring, double threshold_deg);

/// Nested domains: hull containment of the free boundaries and ordering of the
/// extended solutions at random points. Throws DomainsNotNested.
Certificate certify_comparison(const HomogeneousSolution& inner, const HomogeneousSolution& outer, int samples = 1000,
                               std::uint64_t seed = kDefaultSeed);

/// Area of the positivity annulus against (1/K0) times the area of its
/// gradient image. k0_override replaces K0 in the formula (fault injection).
Certificate certify_ot_mass(const EllipticSolution& sol, std::optional<double> k0_override = std::nullopt,
                            double tol = 1e-2);

/// Homogeneous solution value h0 - lambda0 dist(x, omega) outside the domain.
double zero_curvature_value(const ConvexDomain& omega, double h0, double lambda0, const Vec2& x);

/// Samples a radial profile on the annulus grid of a disk.
AnnulusGrid sample_profile(const ConvexDomain& disk, double h0, double r_fb,
                           const std::function<double(double)>& profile, int sectors, int rings, int stencil = 3);

}  // namespace kfree
