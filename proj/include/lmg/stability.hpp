// stability.hpp — fixed points of the delayed flow and their linear stability analysis
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "core.hpp"
#include "meanfield.hpp"

namespace lmg {

enum class FixedPointBranch { normal, broken_plus, broken_minus };

// Broken branches exist only above the critical coupling; the reason travels with
// the result so callers can tell "not requested" from "not present".
enum class BrokenBranchStatus { present, coupling_below_critical };

struct FixedPoint {
    FixedPointBranch branch{FixedPointBranch::normal};
    SpinState state;
};

struct FixedPointSet {
    std::vector<FixedPoint> points;
    BrokenBranchStatus broken_status{BrokenBranchStatus::present};
};

// Pitchfork location gamma_c = h + kappa^2 / (4h); losses postpone symmetry breaking.
inline double critical_coupling(const ModelParams& p) {
    return p.h + p.kappa * p.kappa / (4.0 * p.h);
}

// Steady states of the flow.  The feedback term cancels at any fixed point, so
// lambda and tau never enter here.  The normal branch is the north pole; the
// broken pair appears for gamma >= gamma_c and carries a Jy component that is
// purely loss-induced (it vanishes with kappa).
inline FixedPointSet fixed_points(const ModelParams& p) {
    p.validate();
    FixedPointSet set;
    set.points.push_back({FixedPointBranch::normal, SpinState{0.0, 0.0, 0.5}});
    if (p.gamma < critical_coupling(p)) {
        set.broken_status = BrokenBranchStatus::coupling_below_critical;
        return set;
    }
    SpinState s;
    if (p.kappa == 0.0) {
        s.jz = p.h / (2.0 * p.gamma);
        s.jy = 0.0;
        s.jx = std::sqrt(std::max(0.0, p.gamma * p.gamma - p.h * p.h)) / (2.0 * p.gamma);
    } else {
        const double r = std::sqrt(p.gamma * p.gamma - p.kappa * p.kappa);
        const double u = p.gamma - r; // u (2 gamma - u) = kappa^2
        const double k2 = p.kappa * p.kappa;
        const double num = -4.0 * p.h * p.h * u + k2 * (p.gamma + r);
        s.jx = std::sqrt(std::max(0.0, num / (8.0 * p.gamma * k2)));
        s.jy = (u / p.kappa) * s.jx;
        s.jz = p.h * u / k2;
    }
    set.points.push_back({FixedPointBranch::broken_plus, s});
    set.points.push_back({FixedPointBranch::broken_minus, SpinState{-s.jx, -s.jy, s.jz}});
    return set;
}

inline FixedPoint broken_fixed_point(const ModelParams& p) {
    const FixedPointSet set = fixed_points(p);
    for (const FixedPoint& fp : set.points)
        if (fp.branch == FixedPointBranch::broken_plus) return fp;
    throw std::invalid_argument("broken_fixed_point: gamma below critical coupling");
}

// ---- delayed linearization around a broken fixed point ----

// Perturbation dynamics in (dJx, dJy) after eliminating dJz through the sphere
// constraint: d/dt dv = B dv(t) + A dv(t - tau).  Only the delayed half of the
// feedback lands in A; the instantaneous half sits inside B.
struct LinearizedSystem {
    Eigen::Matrix2d b;
    Eigen::Matrix2d a;
    double tau{0.0};
};

inline LinearizedSystem linearize(const FixedPoint& fp, const ModelParams& p) {
    if (fp.branch == FixedPointBranch::normal)
        throw std::invalid_argument("linearize: normal branch has Jz-degenerate azimuth, "
                                    "use normal_branch_jacobian instead");
    const double x = fp.state.jx, y = fp.state.jy, z = fp.state.jz;
    if (z == 0.0) throw std::invalid_argument("linearize: fixed point on the equator");
    const double h = p.h, g = p.gamma, k = p.kappa, l = p.lambda;

    LinearizedSystem sys;
    sys.tau = p.tau;
    sys.b(0, 0) = k * x * x / z - k * z;
    sys.b(0, 1) = h + k * x * y / z;
    sys.b(1, 0) = 4.0 * l * z * x * x - 2.0 * g * x * x / z + k * x * y / z - h + 2.0 * g * z;
    sys.b(1, 1) = k * y * y / z + 4.0 * l * x * z * y - 2.0 * g * x * y / z - k * z;
    sys.a(0, 0) = 0.0;
    sys.a(0, 1) = 0.0;
    sys.a(1, 0) = -4.0 * l * z * x * x;
    sys.a(1, 1) = -4.0 * l * z * x * y;
    return sys;
}

// det(Lambda I - B - A exp(-Lambda tau)); roots are the characteristic exponents.
inline std::complex<double> char_residual(std::complex<double> lambda,
                                          const LinearizedSystem& sys) {
    const std::complex<double> e = std::exp(-lambda * sys.tau);
    const std::complex<double> m00 = lambda - sys.b(0, 0) - sys.a(0, 0) * e;
    const std::complex<double> m01 = -sys.b(0, 1) - sys.a(0, 1) * e;
    const std::complex<double> m10 = -sys.b(1, 0) - sys.a(1, 0) * e;
    const std::complex<double> m11 = lambda - sys.b(1, 1) - sys.a(1, 1) * e;
    return m00 * m11 - m01 * m10;
}

// d/dLambda of char_residual, for Newton steps.
inline std::complex<double> char_residual_deriv(std::complex<double> lambda,
                                                const LinearizedSystem& sys) {
    const std::complex<double> e = std::exp(-lambda * sys.tau);
    const std::complex<double> m00 = lambda - sys.b(0, 0) - sys.a(0, 0) * e;
    const std::complex<double> m01 = -sys.b(0, 1) - sys.a(0, 1) * e;
    const std::complex<double> m10 = -sys.b(1, 0) - sys.a(1, 0) * e;
    const std::complex<double> m11 = lambda - sys.b(1, 1) - sys.a(1, 1) * e;
    const std::complex<double> d00 = 1.0 + sys.tau * sys.a(0, 0) * e;
    const std::complex<double> d01 = sys.tau * sys.a(0, 1) * e;
    const std::complex<double> d10 = sys.tau * sys.a(1, 0) * e;
    const std::complex<double> d11 = 1.0 + sys.tau * sys.a(1, 1) * e;
    return d00 * m11 + m00 * d11 - d01 * m10 - m01 * d10;
}

struct RootSearchOptions {
    double re_min{-5.0};
    double re_max{2.0};
    double im_max{15.0};
    int n_re{33};
    int n_im{46};
    int max_iter{60};
    double accept_tol{1e-10}; // |det| at an accepted root
};

// Rightmost characteristic exponent, located by Newton iteration from a grid of
// seeds in the upper half plane (roots come in conjugate pairs, so Im >= 0 covers
// the spectrum).  The transcendental equation has infinitely many roots marching
// off to Re -> -inf; only the rightmost decides stability.
inline std::complex<double> rightmost_root(const LinearizedSystem& sys,
                                           const RootSearchOptions& opts = {}) {
    std::vector<std::complex<double>> roots;
    const double dre = (opts.re_max - opts.re_min) / (opts.n_re - 1);
    const double dim = opts.im_max / (opts.n_im - 1);
    for (int i = 0; i < opts.n_re; ++i) {
        for (int j = 0; j < opts.n_im; ++j) {
            std::complex<double> z(opts.re_min + i * dre, j * dim);
            bool converged = false;
            for (int it = 0; it < opts.max_iter; ++it) {
                const std::complex<double> f = char_residual(z, sys);
                const std::complex<double> df = char_residual_deriv(z, sys);
                if (df == 0.0) break;
                const std::complex<double> step = f / df;
                z -= step;
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) break;
                if (std::abs(step) < 1e-13 * (1.0 + std::abs(z))) {
                    converged = true;
                    break;
                }
            }
            if (!converged || std::abs(char_residual(z, sys)) > opts.accept_tol) continue;
            if (std::abs(z) > 100.0) continue;
            z = {z.real(), std::abs(z.imag())};
            bool dup = false;
            for (const auto& r : roots)
                if (std::abs(r - z) < 1e-8) { dup = true; break; }
            if (!dup) roots.push_back(z);
        }
    }
    if (roots.empty())
        throw std::runtime_error("rightmost_root: Newton search found no roots in the window");
    return *std::max_element(roots.begin(), roots.end(),
                             [](const auto& a, const auto& b) { return a.real() < b.real(); });
}

// Smallest delay where the broken branch loses stability, by bisection on the sign
// of the rightmost exponent.  Requires a sign change across [tau_lo, tau_hi].
inline double hopf_threshold_tau(const ModelParams& p, double tau_lo, double tau_hi,
                                 double tol = 1e-7) {
    const FixedPoint fp = broken_fixed_point(p);
    auto unstable_at = [&](double tau) {
        ModelParams q = p;
        q.tau = tau;
        return rightmost_root(linearize(fp, q)).real() > 0.0;
    };
    if (unstable_at(tau_lo) || !unstable_at(tau_hi))
        throw std::invalid_argument("hopf_threshold_tau: no stable-to-unstable change in bracket");
    while (tau_hi - tau_lo > tol) {
        const double mid = 0.5 * (tau_lo + tau_hi);
        (unstable_at(mid) ? tau_hi : tau_lo) = mid;
    }
    return 0.5 * (tau_lo + tau_hi);
}

// ---- purely imaginary crossings (stability boundaries in the tau-lambda plane) ----

struct StabilityBoundaryPoint {
    double lambda{0.0};
    double tau{0.0};
    double s{0.0};  // crossing frequency, Lambda = i s
    int z{0};       // 2 pi branch index of the delay phase
    double resid_im{0.0};
    double resid_re{0.0};
};

// Closed-form boundary search.  Splitting det(i s I - B - A e^{-i s tau}) = 0 into
// real and imaginary parts gives two lines in (cos(s tau), sin(s tau)); eliminating
// the phase leaves a quadratic in s^2 whose positive roots are the admissible
// crossing frequencies.  Both line/circle intersection branches and every phase
// winding z are enumerated, then validated by residual rather than by case
// analysis, which sidesteps quadrant bookkeeping entirely.
inline std::vector<StabilityBoundaryPoint> boundary_curves(const ModelParams& p,
                                                           const std::vector<double>& lambdas,
                                                           int z_max = 10) {
    if (z_max < 0) throw std::invalid_argument("boundary_curves: z_max must be >= 0");
    const FixedPoint fp = broken_fixed_point(p);
    std::vector<StabilityBoundaryPoint> out;
    for (const double lam : lambdas) {
        ModelParams q = p;
        q.lambda = lam;
        const LinearizedSystem sys = linearize(fp, q);
        const double tr_b = sys.b(0, 0) + sys.b(1, 1);
        const double det_b = sys.b(0, 0) * sys.b(1, 1) - sys.b(0, 1) * sys.b(1, 0);
        const double a22 = sys.a(1, 1);
        const double g2 = sys.b(0, 1) * sys.a(1, 0) - a22 * sys.b(0, 0);
        const double f1 = tr_b * tr_b - a22 * a22 - 2.0 * det_b;
        const double f0 = det_b * det_b - g2 * g2;
        const double disc = f1 * f1 - 4.0 * f0;
        if (disc < 0.0) continue;

        std::vector<StabilityBoundaryPoint> pts;
        for (const double s2 : {0.5 * (-f1 + std::sqrt(disc)), 0.5 * (-f1 - std::sqrt(disc))}) {
            if (!(s2 > 0.0)) continue;
            const double s = std::sqrt(s2);
            // Negative s reproduces the same delays, so only s > 0 is enumerated.
            const double g0 = -tr_b * s;
            const double g1 = -a22 * s;
            const double cd = g1 * g1 + g2 * g2;
            if (cd < 1e-30) continue;
            const double circ = cd - g0 * g0;
            if (circ < 0.0) continue;
            const double rt = std::sqrt(circ);
            for (const double sign : {1.0, -1.0}) {
                const double cth = (-g0 * g1 + sign * g2 * rt) / cd;
                const double sth = (-g0 * g2 - sign * g1 * rt) / cd;
                const double theta = std::atan2(sth, cth);
                for (int z = 0; z <= z_max; ++z) {
                    const double tau = (theta + 2.0 * std::numbers::pi * z) / s;
                    if (tau < 0.0) continue;
                    const double c = std::cos(s * tau), sn = std::sin(s * tau);
                    const double r_im = g0 + g1 * c + g2 * sn;
                    const double r_re = (det_b - s2) - g2 * c + g1 * sn;
                    if (std::abs(r_im) > 1e-8 || std::abs(r_re) > 1e-8) continue;
                    pts.push_back({lam, tau, s, z, r_im, r_re});
                }
            }
        }
        std::sort(pts.begin(), pts.end(),
                  [](const auto& a, const auto& b) { return a.tau < b.tau; });
        for (const auto& pt : pts)
            if (out.empty() || out.back().lambda != lam || pt.tau - out.back().tau > 1e-9)
                out.push_back(pt);
    }
    return out;
}

// ---- normal branch ----

// Jacobian of the instantaneous 3-variable flow.  At the poles the azimuthal
// perturbation pair is degenerate with Jz, so the planar reduction above does not
// apply; the full Jacobian does.  The feedback enters the RHS only multiplied by
// Jx, hence dF/dgamma_x vanishes at the pole and neither lambda nor tau appears.
inline Eigen::Matrix3d normal_branch_jacobian(const ModelParams& p) {
    const double g = p.gamma, k = p.kappa, h = p.h;
    const double x = 0.0, y = 0.0, z = 0.5;
    Eigen::Matrix3d j;
    j << -k * z, h, -k * x,
         -h + 2.0 * g * z, -k * z, 2.0 * g * x - k * y,
         -2.0 * g * y + 2.0 * k * x, -2.0 * g * x + 2.0 * k * y, 0.0;
    return j;
}

// Largest real part over the two physical modes.  |J|^2 conservation forces one
// exact zero eigenvalue (the radial direction); it is discarded before the max.
inline double normal_branch_rightmost(const ModelParams& p) {
    const Eigen::Matrix3d j = normal_branch_jacobian(p);
    Eigen::EigenSolver<Eigen::Matrix3d> es(j);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("normal_branch_rightmost: eigensolver failed");
    const auto ev = es.eigenvalues();
    int radial = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(ev(i)) < std::abs(ev(radial))) radial = i;
    double re = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i)
        if (i != radial) re = std::max(re, ev(i).real());
    return re;
}

// Pitchfork of the normal branch, located by bisection on the rightmost physical
// mode.  Below threshold the pole is (marginally) stable, above it strictly unstable.
inline double normal_branch_critical_gamma(const ModelParams& p, double gamma_lo,
                                           double gamma_hi, double tol = 1e-8) {
    auto unstable_at = [&](double gamma) {
        ModelParams q = p;
        q.gamma = gamma;
        return normal_branch_rightmost(q) > 1e-9;
    };
    if (unstable_at(gamma_lo) || !unstable_at(gamma_hi))
        throw std::invalid_argument("normal_branch_critical_gamma: bracket does not straddle "
                                    "the pitchfork");
    while (gamma_hi - gamma_lo > tol) {
        const double mid = 0.5 * (gamma_lo + gamma_hi);
        (unstable_at(mid) ? gamma_hi : gamma_lo) = mid;
    }
    return 0.5 * (gamma_lo + gamma_hi);
}

} // namespace lmg
