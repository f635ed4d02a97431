#include "kfree/oracles.hpp"

#include "kfree/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace kfree {

std::string to_string(RadialCase c) {
    switch (c) {
        case RadialCase::Cone: return "cone";
        case RadialCase::Paraboloid: return "paraboloid";
        case RadialCase::LogCase: return "logcase";
        case RadialCase::Shot: return "shot";
    }
    return "cone";
}

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidParam, std::string(name) + " must be positive");
}

}  // namespace

RadialProfile cone(double R0, double h0, double lambda0) {
    require_positive(R0, "R0");
    require_positive(h0, "h0");
    require_positive(lambda0, "lambda0");
    RadialProfile p;
    p.R0 = R0;
    p.h0 = h0;
    p.lambda0 = lambda0;
    p.kind = RadialCase::Cone;
    p.r_fb = R0 + h0 / lambda0;
    p.initial_slope = -lambda0;
    p.value = [=](double r) { return h0 - lambda0 * (r - R0); };
    p.slope = [=](double) { return -lambda0; };
    return p;
}

RadialProfile radial_case1(int dim, double R0, double h0, double K0) {
    if (dim < 2) fail(ErrorCode::InvalidParam, "dimension must be >= 2");
    require_positive(R0, "R0");
    require_positive(h0, "h0");
    require_positive(K0, "K0");
    const double k = std::pow(K0, 1.0 / dim);
    RadialProfile p;
    p.dim = dim;
    p.K0 = K0;
    p.R0 = R0;
    p.h0 = h0;
    p.kind = RadialCase::Paraboloid;
    p.A = 0.0;
    p.r_fb = std::sqrt(R0 * R0 + 2.0 * h0 / k);
    p.lambda0 = k * p.r_fb;
    p.initial_slope = -k * R0;
    p.value = [=](double r) { return h0 + 0.5 * k * (R0 * R0 - r * r); };
    p.slope = [=](double r) { return -k * r; };
    return p;
}

double phi_A(double r, double K0, double A) {
    const double rad = std::max(0.0, K0 * r * r + A);
    double out = 0.5 * r * std::sqrt(rad);
    if (A != 0.0) out += A / (2.0 * std::sqrt(K0)) * std::log(std::abs(r + std::sqrt(rad / K0)));
    return out;
}

namespace {

// height at r_fb of the profile whose boundary slope at r_fb is lambda0
double case2_residual(double R0, double h0, double lambda0, double K0, double r) {
    const double A = lambda0 * lambda0 - K0 * r * r;
    return h0 - (phi_A(r, K0, A) - phi_A(R0, K0, A));
}

double substituted_phi(double r, double lambda0, double K0) {
    return 0.5 * r * lambda0 +
           0.5 * (lambda0 * lambda0 - K0 * r * r) / std::sqrt(K0) * std::log(std::abs(r + lambda0 / std::sqrt(K0)));
}

}  // namespace

Case2Existence case2_existence(double R0, double h0, double lambda0, double K0) {
    require_positive(R0, "R0");
    require_positive(h0, "h0");
    require_positive(lambda0, "lambda0");
    require_positive(K0, "K0");
    Case2Existence e;
    e.r_max = std::sqrt(R0 * R0 + lambda0 * lambda0 / K0);
    const double A_min = -K0 * R0 * R0;
    e.v_at_rmax = h0 + phi_A(R0, K0, A_min) - phi_A(e.r_max, K0, A_min);
    e.rmax_test_holds = e.v_at_rmax <= 0.0;
    e.substituted_phi_value = h0 + substituted_phi(R0, lambda0, K0) - substituted_phi(e.r_max, lambda0, K0);

    // first sign change of the residual walking outward from R0
    constexpr int kScan = 4000;
    auto F = [&](double r) { return case2_residual(R0, h0, lambda0, K0, r); };
    double r_prev = R0;
    double f_prev = h0;
    for (int i = 1; i <= kScan; ++i) {
        const double r = R0 + (e.r_max - R0) * i / kScan;
        const double f = F(r);
        if (f <= 0.0) {
            double lo = r_prev, hi = r;
            if (f == 0.0) {
                lo = hi;
            } else {
                for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (F(mid) > 0.0) lo = mid; else hi = mid;
                }
            }
            e.exists = true;
            e.r_fb = 0.5 * (lo + hi);
            return e;
        }
        r_prev = r;
        f_prev = f;
    }
    (void)f_prev;
    return e;
}

Case2Result radial_case2_d2(double R0, double h0, double lambda0, double K0) {
    Case2Result out;
    out.existence = case2_existence(R0, h0, lambda0, K0);
    if (!out.existence.r_fb)
        fail(ErrorCode::NoRoot, "no free boundary radius in (R0, R_max] satisfies both boundary conditions");
    const double r_fb = *out.existence.r_fb;
    const double A = lambda0 * lambda0 - K0 * r_fb * r_fb;
    const double B = h0 + phi_A(R0, K0, A);
    RadialProfile& p = out.profile;
    p.dim = 2;
    p.K0 = K0;
    p.h0 = h0;
    p.lambda0 = lambda0;
    p.R0 = R0;
    p.kind = RadialCase::LogCase;
    p.A = A;
    p.r_fb = r_fb;
    p.initial_slope = -std::sqrt(std::max(0.0, K0 * R0 * R0 + A));
    p.value = [=](double r) { return B - phi_A(r, K0, A); };
    p.slope = [=](double r) { return -std::sqrt(std::max(0.0, K0 * r * r + A)); };
    return out;
}

namespace {

struct ShotState {
    double v;
    double w;  // (-v')^d
};

struct ShotTrace {
    std::vector<double> r, v, dv;
};

enum class ShotOutcome { Crossed, Escaped, BlewUp };

struct ShotResult {
    ShotOutcome outcome;
    double r_cross = 0.0;
    double slope_mag = 0.0;  // |v'| at the crossing
    double sign = 0.0;       // slope_mag - lambda0, or +/- inf for non-crossings
};

class Shooter {
public:
    Shooter(int dim, double R0, double h0, double lambda0, double K0, PsiSpec psi, double step)
        : d_(dim), R0_(R0), h0_(h0), lambda0_(lambda0), K0_(K0), psi_(psi), h_(step) {
        r_end_ = 10.0 * (R0 + lambda0 / std::max(K0, 1e-3));
    }

    ShotResult run(double s, ShotTrace* trace) const {
        double r = R0_;
        ShotState y{h0_, std::pow(-s, d_)};
        if (trace) record(trace, r, y);
        const bool growth = K0_ > 0.0 && psi_.kind != PsiSpec::Kind::Zero;
        while (r < r_end_) {
            const double q = slope_mag(y);
            if (!std::isfinite(q) || q > 1e8) return {ShotOutcome::BlewUp, r, q, std::numeric_limits<double>::infinity()};
            // |v'| never decreases, so a crossing would be too steep
            if (!trace && growth && q > lambda0_ * (1.0 + 1e-9))
                return {ShotOutcome::Crossed, r, q, q - lambda0_};
            const ShotState next = step(r, y, h_);
            if (next.v <= 0.0) {
                double lo = 0.0, hi = h_;
                for (int it = 0; it < 200 && hi - lo > 1e-17 * std::max(1.0, r); ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (step(r, y, mid).v > 0.0) lo = mid; else hi = mid;
                }
                const double hc = 0.5 * (lo + hi);
                const ShotState c = step(r, y, hc);
                const double qc = slope_mag(c);
                if (trace) record(trace, r + hc, {0.0, c.w});
                return {ShotOutcome::Crossed, r + hc, qc, qc - lambda0_};
            }
            y = next;
            r += h_;
            if (trace) record(trace, r, y);
        }
        return {ShotOutcome::Escaped, r, slope_mag(y), -std::numeric_limits<double>::infinity()};
    }

private:
    double slope_mag(const ShotState& y) const { return std::pow(std::max(0.0, y.w), 1.0 / d_); }

    ShotState rhs(double r, const ShotState& y) const {
        const double q = slope_mag(y);
        return {-q, d_ * std::pow(r, d_ - 1) * K0_ * psi_(q)};
    }

    ShotState step(double r, const ShotState& y, double h) const {
        const ShotState k1 = rhs(r, y);
        const ShotState k2 = rhs(r + 0.5 * h, {y.v + 0.5 * h * k1.v, y.w + 0.5 * h * k1.w});
        const ShotState k3 = rhs(r + 0.5 * h, {y.v + 0.5 * h * k2.v, y.w + 0.5 * h * k2.w});
        const ShotState k4 = rhs(r + h, {y.v + h * k3.v, y.w + h * k3.w});
        return {y.v + h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v), y.w + h / 6.0 * (k1.w + 2 * k2.w + 2 * k3.w + k4.w)};
    }

    void record(ShotTrace* t, double r, const ShotState& y) const {
        t->r.push_back(r);
        t->v.push_back(y.v);
        t->dv.push_back(-slope_mag(y));
    }

    int d_;
    double R0_, h0_, lambda0_, K0_;
    PsiSpec psi_;
    double h_;
    double r_end_;
};

// cubic Hermite interpolation on the recorded trace
double hermite(const ShotTrace& t, double r, bool derivative) {
    const auto& R = t.r;
    if (r <= R.front()) return derivative ? t.dv.front() : t.v.front() + t.dv.front() * (r - R.front());
    if (r >= R.back()) return derivative ? t.dv.back() : t.v.back() + t.dv.back() * (r - R.back());
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(R.begin(), R.end(), r) - R.begin()) - 1;
    const double h = R[i + 1] - R[i];
    const double s = (r - R[i]) / h;
    const double y0 = t.v[i], y1 = t.v[i + 1], m0 = t.dv[i] * h, m1 = t.dv[i + 1] * h;
    if (derivative) {
        const double d = (6 * s * s - 6 * s) * y0 + (3 * s * s - 4 * s + 1) * m0 + (-6 * s * s + 6 * s) * y1 +
                         (3 * s * s - 2 * s) * m1;
        return d / h;
    }
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
}

}  // namespace

RadialProfile radial_shoot(int dim, double R0, double h0, double lambda0, double K0, const PsiSpec& psi,
                           const ShootOptions& opt) {
    if (dim < 2) fail(ErrorCode::InvalidParam, "dimension must be >= 2");
    require_positive(R0, "R0");
    require_positive(h0, "h0");
    require_positive(lambda0, "lambda0");
    if (!(K0 >= 0.0) || !std::isfinite(K0)) fail(ErrorCode::InvalidParam, "K0 must be >= 0");
    const Shooter shooter(dim, R0, h0, lambda0, K0, psi, opt.step_fraction * R0);

    const double s_steep = -lambda0 - 10.0;
    const double s_shallow = -1e-6;
    double s_prev = s_steep;
    ShotResult prev = shooter.run(s_prev, nullptr);
    if (!(prev.sign > 0.0)) fail(ErrorCode::NoSolution, "steepest shooting slope does not overshoot");
    std::optional<std::pair<double, double>> bracket;
    for (int i = 1; i <= opt.scan_points; ++i) {
        const double s = s_steep + (s_shallow - s_steep) * i / opt.scan_points;
        const ShotResult cur = shooter.run(s, nullptr);
        if (cur.sign == 0.0) {
            bracket = {{s, s}};
            break;
        }
        if (cur.sign < 0.0) {
            bracket = {{s_prev, s}};
            break;
        }
        s_prev = s;
    }
    if (!bracket) fail(ErrorCode::NoSolution, "no initial slope meets the free boundary condition");
    double lo = bracket->first, hi = bracket->second;  // sign(lo) > 0 >= sign(hi)
    while (hi - lo > opt.slope_tol) {
        const double mid = 0.5 * (lo + hi);
        if (shooter.run(mid, nullptr).sign > 0.0) lo = mid; else hi = mid;
    }
    const double s = 0.5 * (lo + hi);
    auto trace = std::make_shared<ShotTrace>();
    const ShotResult res = shooter.run(s, trace.get());
    if (res.outcome != ShotOutcome::Crossed) fail(ErrorCode::NoSolution, "bracketed slope does not reach zero height");

    RadialProfile p;
    p.dim = dim;
    p.K0 = K0;
    p.h0 = h0;
    p.lambda0 = lambda0;
    p.R0 = R0;
    p.kind = (K0 == 0.0 || psi.kind == PsiSpec::Kind::Zero) ? RadialCase::Cone : RadialCase::Shot;
    p.r_fb = res.r_cross;
    p.initial_slope = s;
    p.value = [trace](double r) { return hermite(*trace, r, false); };
    p.slope = [trace](double r) { return hermite(*trace, r, true); };
    return p;
}

}  // namespace kfree
