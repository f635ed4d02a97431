#pragma once

#include "kfree/subdifferential.hpp"

#include <functional>
#include <optional>

namespace kfree {

enum class RadialCase { Cone, Paraboloid, LogCase, Shot };

std::string to_string(RadialCase c);

/// Radially symmetric solution v(|x|) on the annulus R0 <= |x| <= r_fb.
struct RadialProfile {
    int dim = 2;
    double K0 = 0.0;
    double h0 = 0.0;
    double lambda0 = 0.0;
    double R0 = 0.0;
    RadialCase kind = RadialCase::Cone;
    double A = 0.0;              ///< integration constant of (v')^d = K0 r^d + A (closed forms)
    double r_fb = 0.0;           ///< free boundary radius
    double initial_slope = 0.0;  ///< v'(R0)

    std::function<double(double)> value;  ///< v(r)
    std::function<double(double)> slope;  ///< v'(r)
};

RadialProfile cone(double R0, double h0, double lambda0);

/// Paraboloid solution for psi = one; lambda0 is an output.
RadialProfile radial_case1(int dim, double R0, double h0, double K0);

/// Existence data for the d = 2 log-case family.
struct Case2Existence {
    bool exists = false;           ///< some r in (R0, R_max] solves the joint boundary conditions
    bool rmax_test_holds = false;  ///< v(R_max) <= 0 for the profile with A = -K0 R0^2
    double r_max = 0.0;
    double v_at_rmax = 0.0;
    /// h0 + phi(R0) - phi(R_max) where phi has A replaced by lambda0^2 - K0 r^2
    double substituted_phi_value = 0.0;
    std::optional<double> r_fb;    ///< minimal root when it exists
};

/// phi_A(r) = r sqrt(K r^2 + A) / 2 + A / (2 sqrt K) ln|r + sqrt(r^2 + A / K)|.
double phi_A(double r, double K0, double A);

Case2Existence case2_existence(double R0, double h0, double lambda0, double K0);

struct Case2Result {
    RadialProfile profile;
    Case2Existence existence;
};

/// d = 2, psi = one, with A = lambda0^2 - K0 r_fb^2 solved jointly with v(r_fb) = 0.
/// Returns the smallest admissible free boundary radius. Throws NoRoot if none.
Case2Result radial_case2_d2(double R0, double h0, double lambda0, double K0);

struct ShootOptions {
    double step_fraction = 1e-4;  ///< RK4 step as a fraction of R0
    double slope_tol = 1e-12;
    int scan_points = 400;
};

/// Radial ODE (-v'')(-v'/r)^{d-1} = K0 psi(|v'|), shooting on v'(R0) for the
/// first zero of v to have |v'| = lambda0. Returns the steepest admissible
/// initial slope (smallest free boundary). Throws NoSolution.
RadialProfile radial_shoot(int dim, double R0, double h0, double lambda0, double K0, const PsiSpec& psi,
                           const ShootOptions& opt = {});

}  // namespace kfree
