// core.hpp — model parameters, collective-spin state, energy and feedback coupling laws
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace lmg {

// All rates are quoted in units of the field h, all times in units of 1/h.
// Keeping h explicit (instead of fixing h = 1) lets tests scale the unit system.
struct ModelParams {
    double h{1.0};       // transverse field, sets the unit system, must be > 0
    double gamma{1.5};   // x-axis spin-spin coupling
    double gamma_y{0.0}; // y-axis spin-spin coupling (spectrum only, mean field assumes 0)
    double kappa{0.05};  // collective loss rate
    double lambda{1.0};  // delayed-feedback gain
    double tau{0.0};     // feedback delay, 0 disables the delay line
    int n_spins{1000};   // system size N, Hilbert dimension is N + 1

    void validate() const {
        if (!(h > 0.0)) throw std::invalid_argument("ModelParams: h must be > 0");
        if (!(gamma >= 0.0)) throw std::invalid_argument("ModelParams: gamma must be >= 0");
        if (!(gamma_y >= 0.0)) throw std::invalid_argument("ModelParams: gamma_y must be >= 0");
        if (!(kappa >= 0.0)) throw std::invalid_argument("ModelParams: kappa must be >= 0");
        if (!(tau >= 0.0)) throw std::invalid_argument("ModelParams: tau must be >= 0");
        if (n_spins < 1) throw std::invalid_argument("ModelParams: n_spins must be >= 1");
        if (!std::isfinite(lambda)) throw std::invalid_argument("ModelParams: lambda must be finite");
    }
};

// Normalized spin expectation (Jx, Jy, Jz) = <J>/N, confined to the sphere |J| = 1/2.
struct SpinState {
    double jx{0.0};
    double jy{0.0};
    double jz{0.5};
};

inline constexpr double spin_norm2_target = 0.25;

inline double norm2(const SpinState& s) {
    return s.jx * s.jx + s.jy * s.jy + s.jz * s.jz;
}

inline double sphere_drift(const SpinState& s) {
    return std::abs(norm2(s) - spin_norm2_target);
}

inline bool on_sphere(const SpinState& s, double tol = 1e-9) {
    return sphere_drift(s) <= tol;
}

// Polar/azimuthal construction; membership holds to rounding because
// sin^2 + cos^2 = 1 identically.
inline SpinState from_angles(double theta, double phi) {
    return {0.5 * std::sin(theta) * std::cos(phi),
            0.5 * std::sin(theta) * std::sin(phi),
            0.5 * std::cos(theta)};
}

inline SpinState rescale_to_sphere(const SpinState& s) {
    const double r = std::sqrt(norm2(s));
    if (!(r > 0.0)) throw std::invalid_argument("rescale_to_sphere: zero-length state");
    const double f = 0.5 / r;
    return {s.jx * f, s.jy * f, s.jz * f};
}

// Classical energy per spin, e = E/N: e = -h Jz - gamma Jx^2 - gamma_y Jy^2.
// Total function, no sphere check; callers own the membership precondition.
inline double classical_energy(const SpinState& s, const ModelParams& p) {
    return -p.h * s.jz - p.gamma * s.jx * s.jx - p.gamma_y * s.jy * s.jy;
}

// Time-dependent coupling gamma_x(t) = gamma + lambda (Jz(t - tau)^2 - Jz(t)^2).
// The delayed and instantaneous Jz^2 cancel at any fixed point, so steady states
// of the undriven flow survive the feedback unchanged.
inline double feedback_coupling(const ModelParams& p, double jz_delayed, double jz_now) {
    return p.gamma + p.lambda * (jz_delayed * jz_delayed - jz_now * jz_now);
}

} // namespace lmg
