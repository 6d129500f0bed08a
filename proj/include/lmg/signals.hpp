// signals.hpp — observables extracted from trajectories: periods, window averages, sweeps
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "meanfield.hpp"
#include "stability.hpp"

namespace lmg {

// ---- azimuthal rotation periods ----

// Per-revolution periods of the precession about the Jz axis.  The azimuth is
// unwrapped sample to sample; each time the winding |phi(t) - phi(0)| first
// exceeds the next multiple of 2 pi, one revolution is booked (with linear
// interpolation between samples).  Bounded librations never wind and produce an
// empty result.  Samples must stay off the poles for the azimuth to be defined.
inline std::vector<double> rotation_period(const Trajectory& traj) {
    if (traj.size() < 2) return {};
    std::vector<double> crossings;
    double prev_phi = std::atan2(traj.states[0].jy, traj.states[0].jx);
    double winding = 0.0;
    double prev_abs = 0.0;
    double target = 2.0 * std::numbers::pi;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        double dphi = std::atan2(traj.states[i].jy, traj.states[i].jx) - prev_phi;
        prev_phi += dphi;
        while (dphi > std::numbers::pi) dphi -= 2.0 * std::numbers::pi;
        while (dphi <= -std::numbers::pi) dphi += 2.0 * std::numbers::pi;
        winding += dphi;
        const double cur_abs = std::abs(winding);
        while (cur_abs >= target) {
            const double frac = (target - prev_abs) / (cur_abs - prev_abs);
            crossings.push_back(traj.times[i - 1] + frac * traj.dt);
            target += 2.0 * std::numbers::pi;
        }
        prev_abs = cur_abs;
    }
    std::vector<double> periods;
    double prev_t = traj.times.front();
    for (const double c : crossings) {
        periods.push_back(c - prev_t);
        prev_t = c;
    }
    return periods;
}

// ---- window averages ----

enum class AveragingMethod { stationary_window, effective_window };

struct AveragedObservables {
    double jz_bar{0.0};
    double jx2_bar{0.0};
    double t_start{0.0};
    double t_end{0.0};
    AveragingMethod method{AveragingMethod::stationary_window};
    bool warn{false}; // averaging window was not demonstrably stationary
};

namespace detail {

// Prefix trapezoid integrals of jz and jx^2 on the sample grid, with piecewise
// quadratic evaluation between nodes so window edges need not sit on samples.
class TrajectoryIntegrals {
public:
    explicit TrajectoryIntegrals(const Trajectory& traj) : traj_(traj) {
        const std::size_t n = traj.size();
        if (n < 2) throw std::invalid_argument("TrajectoryIntegrals: need at least 2 samples");
        jz_.resize(n);
        jx2_.resize(n);
        izz_.resize(n);
        ixx_.resize(n);
        izz_[0] = ixx_[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            jz_[i] = traj.states[i].jz;
            jx2_[i] = traj.states[i].jx * traj.states[i].jx;
        }
        for (std::size_t i = 1; i < n; ++i) {
            izz_[i] = izz_[i - 1] + 0.5 * traj.dt * (jz_[i - 1] + jz_[i]);
            ixx_[i] = ixx_[i - 1] + 0.5 * traj.dt * (jx2_[i - 1] + jx2_[i]);
        }
    }

    AveragedObservables average(double t1, double t2, AveragingMethod method) const {
        if (!(t2 > t1))
            throw std::invalid_argument("TrajectoryIntegrals: window must have t2 > t1");
        if (t1 < traj_.times.front() - 1e-9 || t2 > traj_.times.back() + 1e-9)
            throw std::invalid_argument("TrajectoryIntegrals: window outside the trajectory");
        AveragedObservables out;
        out.t_start = t1;
        out.t_end = t2;
        out.method = method;
        const double span = t2 - t1;
        out.jz_bar = (eval(izz_, jz_, t2) - eval(izz_, jz_, t1)) / span;
        out.jx2_bar = (eval(ixx_, jx2_, t2) - eval(ixx_, jx2_, t1)) / span;
        return out;
    }

private:
    double eval(const std::vector<double>& prefix, const std::vector<double>& f, double t) const {
        const double pos = std::clamp((t - traj_.times.front()) / traj_.dt, 0.0,
                                      static_cast<double>(traj_.size() - 1));
        const auto i = std::min(static_cast<std::size_t>(pos), traj_.size() - 2);
        const double u = (pos - static_cast<double>(i)) * traj_.dt;
        const double fi = f[i];
        const double ft = fi + (f[i + 1] - fi) * (u / traj_.dt);
        return prefix[i] + 0.5 * u * (fi + ft);
    }

    const Trajectory& traj_;
    std::vector<double> jz_, jx2_, izz_, ixx_;
};

struct Extremum {
    double time{0.0};
    double value{0.0};
    bool is_max{false};
};

// Strict sign changes of the discrete derivative, refined by the 3-point parabola.
inline std::vector<Extremum> find_extrema(const Trajectory& traj, std::size_t i_begin) {
    std::vector<Extremum> out;
    for (std::size_t i = std::max<std::size_t>(i_begin, 1); i + 1 < traj.size(); ++i) {
        const double a = traj.states[i - 1].jx;
        const double b = traj.states[i].jx;
        const double c = traj.states[i + 1].jx;
        const double dl = b - a, dr = c - b;
        if (dl == 0.0 || dr == 0.0 || (dl > 0.0) == (dr > 0.0)) continue;
        const double curv = a - 2.0 * b + c;
        const double delta = std::clamp(0.5 * (a - c) / curv, -0.5, 0.5);
        out.push_back({traj.times[i] + delta * traj.dt,
                       b - 0.25 * (a - c) * delta,
                       dl > 0.0});
    }
    return out;
}

} // namespace detail

// Deterministic nudge off the broken fixed point, the standard launch state for
// delay scans: on the sphere, 1e-2 along +x before rescaling.
inline SpinState near_fixed_point_state(const ModelParams& p) {
    const FixedPoint fp = broken_fixed_point(p);
    SpinState s = fp.state;
    s.jx += 0.01;
    return rescale_to_sphere(s);
}

// Sliding-window averages, one per stride, windows clipped to the trajectory.
inline std::vector<AveragedObservables> windowed_average(const Trajectory& traj, double delta_t,
                                                         double stride) {
    if (!(delta_t > 0.0)) throw std::invalid_argument("windowed_average: delta_t must be > 0");
    if (!(stride > 0.0)) throw std::invalid_argument("windowed_average: stride must be > 0");
    if (delta_t > traj.t_end() - traj.times.front() + 1e-9)
        throw std::invalid_argument("windowed_average: window longer than the trajectory");
    const detail::TrajectoryIntegrals integrals(traj);
    std::vector<AveragedObservables> out;
    for (double a = traj.times.front(); a + delta_t <= traj.t_end() + 1e-9; a += stride)
        out.push_back(integrals.average(a, std::min(a + delta_t, traj.t_end()),
                                        AveragingMethod::effective_window));
    return out;
}

// Time average over [t1, t2]; the caller vouches that the dynamics is stationary
// there (settled cycle or steady state).
inline AveragedObservables stationary_average(const Trajectory& traj, double t1, double t2) {
    return detail::TrajectoryIntegrals(traj).average(t1, t2, AveragingMethod::stationary_window);
}

// ---- energy-resolved reference curve from closed conservative orbits ----

enum class EsqptSource { closed_orbit, feedback_sweep, chaotic_window };

struct EsqptCurve {
    std::vector<double> control; // energy per spin, delay, or window time (see source)
    std::vector<double> jz_bar;
    std::vector<double> jx2_bar;
    std::vector<bool> warn;
    EsqptSource source{EsqptSource::closed_orbit};
};

// One-period averages over closed orbits of the conservative flow (kappa = lambda
// = 0), parameterized by energy per spin.  The launch point is the smaller-Jz root
// of the energy condition on the Jy = 0, Jx > 0 slice; the orbit is closed when it
// recrosses that slice with the original sign of dJy/dt.  Acts as the mean-field
// prediction the delayed-feedback averages are compared against.
inline EsqptCurve closed_orbit_reference(const ModelParams& p, const std::vector<double>& energies,
                                         double dt = 0.002) {
    if (p.kappa != 0.0 || p.lambda != 0.0 || p.gamma_y != 0.0)
        throw std::invalid_argument(
            "closed_orbit_reference: requires kappa = lambda = gamma_y = 0");
    if (!(p.gamma > p.h))
        throw std::invalid_argument("closed_orbit_reference: requires gamma > h (broken phase)");
    ModelParams q = p;
    q.tau = 0.0;
    const double e_ground = -p.h * p.h / (4.0 * p.gamma) - p.gamma / 4.0;

    EsqptCurve curve;
    curve.source = EsqptSource::closed_orbit;
    for (const double e : energies) {
        const double disc = p.h * p.h + 4.0 * p.gamma * (p.gamma / 4.0 + e);
        if (e <= e_ground || disc <= 0.0)
            throw std::invalid_argument("closed_orbit_reference: energy below the ground band");
        const double jz0 = (p.h - std::sqrt(disc)) / (2.0 * p.gamma);
        const double jx2 = 0.25 - jz0 * jz0;
        if (jx2 <= 0.0)
            throw std::invalid_argument("closed_orbit_reference: energy outside the orbit band");
        const SpinState start{std::sqrt(jx2), 0.0, jz0};
        const double djy0 = start.jx * (2.0 * p.gamma * jz0 - p.h);

        double t_max = 200.0;
        double period = -1.0;
        Trajectory traj;
        while (period < 0.0) {
            traj = integrate_dde(q, start, t_max, dt);
            for (std::size_t i = 2; i + 1 < traj.size(); ++i) {
                const double y0 = traj.states[i].jy, y1 = traj.states[i + 1].jy;
                if (y0 == 0.0 || (y0 > 0.0) == (y1 > 0.0)) continue;
                if (traj.states[i].jx <= 0.0) continue;
                if (((y1 - y0) > 0.0) != (djy0 > 0.0)) continue;
                period = traj.times[i] + traj.dt * y0 / (y0 - y1);
                break;
            }
            if (period < 0.0) {
                t_max *= 2.0;
                if (t_max > 3200.0)
                    throw std::runtime_error("closed_orbit_reference: orbit failed to close");
            }
        }
        const AveragedObservables avg = stationary_average(traj, 0.0, period);
        curve.control.push_back(e);
        curve.jz_bar.push_back(avg.jz_bar);
        curve.jx2_bar.push_back(avg.jx2_bar);
        curve.warn.push_back(false);
    }
    return curve;
}

// Orbit period at one energy, by the same section-return construction.
inline double closed_orbit_period(const ModelParams& p, double energy, double dt = 0.002) {
    ModelParams q = p;
    const double disc = p.h * p.h + 4.0 * p.gamma * (p.gamma / 4.0 + energy);
    if (p.kappa != 0.0 || p.lambda != 0.0)
        throw std::invalid_argument("closed_orbit_period: requires kappa = lambda = 0");
    if (disc <= 0.0)
        throw std::invalid_argument("closed_orbit_period: energy below the ground band");
    q.tau = 0.0;
    const double jz0 = (p.h - std::sqrt(disc)) / (2.0 * p.gamma);
    const double jx2 = 0.25 - jz0 * jz0;
    if (jx2 <= 0.0)
        throw std::invalid_argument("closed_orbit_period: energy outside the orbit band");
    const SpinState start{std::sqrt(jx2), 0.0, jz0};
    const double djy0 = start.jx * (2.0 * p.gamma * jz0 - p.h);
    double t_max = 200.0;
    while (t_max <= 3200.0) {
        const Trajectory traj = integrate_dde(q, start, t_max, dt);
        for (std::size_t i = 2; i + 1 < traj.size(); ++i) {
            const double y0 = traj.states[i].jy, y1 = traj.states[i + 1].jy;
            if (y0 == 0.0 || (y0 > 0.0) == (y1 > 0.0)) continue;
            if (traj.states[i].jx <= 0.0) continue;
            if (((y1 - y0) > 0.0) != (djy0 > 0.0)) continue;
            return traj.times[i] + traj.dt * y0 / (y0 - y1);
        }
        t_max *= 2.0;
    }
    throw std::runtime_error("closed_orbit_period: orbit failed to close");
}

// ---- delayed-feedback sweeps ----

struct SweepOptions {
    double dt{0.005};
    double settle_min{500.0};  // discarded transient, also scaled as 50 tau
    double window_min{200.0};  // shortest averaging window, also scaled as 20 periods
    double steady_amplitude{1e-6};
    double period_spread{1e-2}; // relative spread of extremum spacings felt as stationary
};

namespace detail {

inline AveragedObservables settled_average(const ModelParams& p, const SweepOptions& opt) {
    const double dt = std::min(opt.dt, max_step_for(p));
    const double t1 = std::max(50.0 * p.tau, opt.settle_min);
    const SpinState start = near_fixed_point_state(p);

    double t_max = t1 + opt.window_min + 60.0;
    Trajectory traj = integrate_dde(p, start, t_max, dt);
    for (int attempt = 0;; ++attempt) {
        const std::size_t i1 = traj.index_at(std::ceil(t1 / dt) * dt);
        double lo = traj.states[i1].jx, hi = lo;
        for (std::size_t i = i1; i < traj.size(); ++i) {
            lo = std::min(lo, traj.states[i].jx);
            hi = std::max(hi, traj.states[i].jx);
        }
        if (hi - lo < opt.steady_amplitude)
            return stationary_average(traj, traj.t_end() - opt.window_min, traj.t_end());

        const auto extrema = find_extrema(traj, i1);
        std::vector<double> maxima_t;
        for (const auto& ex : extrema)
            if (ex.is_max) maxima_t.push_back(ex.time);

        if (maxima_t.size() >= 3) {
            const std::size_t use = std::min<std::size_t>(maxima_t.size() - 1, 10);
            double d_lo = 0.0, d_hi = 0.0, d_sum = 0.0;
            for (std::size_t k = maxima_t.size() - use; k < maxima_t.size(); ++k) {
                const double d = maxima_t[k] - maxima_t[k - 1];
                d_sum += d;
                d_lo = (d_lo == 0.0) ? d : std::min(d_lo, d);
                d_hi = std::max(d_hi, d);
            }
            const double period = d_sum / static_cast<double>(use);
            const bool periodic = (d_hi - d_lo) < opt.period_spread * period;
            const double window =
                std::ceil(std::max(20.0 * period, opt.window_min) / period) * period;
            const double anchor = maxima_t.back();
            if (anchor - window >= t1 - 1e-9) {
                AveragedObservables avg = stationary_average(traj, anchor - window, anchor);
                avg.warn = !periodic;
                return avg;
            }
            if (attempt < 2) {
                t_max = t1 + window + 10.0 * period;
                traj = integrate_dde(p, start, t_max, dt);
                continue;
            }
        } else if (attempt < 2) {
            t_max = 2.0 * t_max;
            traj = integrate_dde(p, start, t_max, dt);
            continue;
        }
        // No settled structure was demonstrated; average the tail and say so.
        AveragedObservables avg =
            stationary_average(traj, traj.t_end() - opt.window_min, traj.t_end());
        avg.warn = true;
        return avg;
    }
}

} // namespace detail

// Long-time averages of the delayed-feedback dynamics on a delay grid, launched
// near the broken fixed point.  Points whose tail could not be certified
// stationary carry a warning flag instead of being dropped.
inline EsqptCurve esqpt_feedback_sweep(const ModelParams& p, const std::vector<double>& taus,
                                       const SweepOptions& opt = {}) {
    EsqptCurve curve;
    curve.source = EsqptSource::feedback_sweep;
    for (const double tau : taus) {
        if (!(tau > 0.0))
            throw std::invalid_argument("esqpt_feedback_sweep: delays must be > 0");
        ModelParams q = p;
        q.tau = tau;
        const AveragedObservables avg = detail::settled_average(q, opt);
        curve.control.push_back(tau);
        curve.jz_bar.push_back(avg.jz_bar);
        curve.jx2_bar.push_back(avg.jx2_bar);
        curve.warn.push_back(avg.warn);
    }
    return curve;
}

// Sliding-window averages along one long chaotic run; control is the window start
// time.  The windows scatter along the closed-orbit curve when the chaotic motion
// diffuses through the orbit families.
inline EsqptCurve chaotic_window_signal(const ModelParams& p, double delta_t, double stride,
                                        double settle, double observe, double dt = 0.005) {
    if (!(delta_t > 0.0) || !(stride > 0.0) || !(observe > delta_t))
        throw std::invalid_argument("chaotic_window_signal: need 0 < delta_t < observe, stride > 0");
    ModelParams q = p;
    const double dt_eff = std::min(dt, max_step_for(q));
    const Trajectory traj =
        integrate_dde(q, near_fixed_point_state(q), settle + observe, dt_eff);
    const detail::TrajectoryIntegrals integrals(traj);
    EsqptCurve curve;
    curve.source = EsqptSource::chaotic_window;
    for (double a = settle; a + delta_t <= traj.t_end() + 1e-9; a += stride) {
        const AveragedObservables avg =
            integrals.average(a, a + delta_t, AveragingMethod::effective_window);
        curve.control.push_back(a);
        curve.jz_bar.push_back(avg.jz_bar);
        curve.jx2_bar.push_back(avg.jx2_bar);
        curve.warn.push_back(false);
    }
    return curve;
}

// ---- attractor census over the delay ----

struct BifurcationPoint {
    double tau{0.0};
    double value{0.0}; // jx at a local extremum of the settled motion
    bool is_max{false};
};

struct BifurcationScan {
    std::vector<BifurcationPoint> points;

    std::size_t distinct_values(double tau) const {
        std::size_t n = 0;
        for (const auto& pt : points)
            if (pt.tau == tau) ++n;
        return n;
    }
};

struct BifurcationOptions {
    double dt{0.005};
    double settle{500.0};
    double observe{300.0};
    double value_tol{1e-4}; // extrema closer than this count as one attractor branch
};

// Distinct local extrema of jx in the settled window, per delay.  One max/min pair
// signals a simple cycle, two of each a period-doubled cycle, a crowd of values
// chaos.  A steady tail contributes its endpoint as both kinds, so every delay
// shows up in the scan.
inline BifurcationScan bifurcation_scan(const ModelParams& p, const std::vector<double>& taus,
                                        const BifurcationOptions& opt = {}) {
    BifurcationScan scan;
    for (const double tau : taus) {
        if (!(tau > 0.0)) throw std::invalid_argument("bifurcation_scan: delays must be > 0");
        ModelParams q = p;
        q.tau = tau;
        const double dt = std::min(opt.dt, max_step_for(q));
        const double t1 = std::max(50.0 * tau, opt.settle);
        const Trajectory traj =
            integrate_dde(q, near_fixed_point_state(q), t1 + opt.observe, dt);
        const auto extrema = detail::find_extrema(traj, traj.index_at(std::ceil(t1 / dt) * dt));

        std::vector<double> maxima, minima;
        for (const auto& ex : extrema) (ex.is_max ? maxima : minima).push_back(ex.value);
        if (extrema.empty()) {
            maxima.push_back(traj.states.back().jx);
            minima.push_back(traj.states.back().jx);
        }
        for (auto* vals : {&maxima, &minima}) {
            std::sort(vals->begin(), vals->end());
            double last = -2.0;
            for (const double v : *vals) {
                if (v - last <= opt.value_tol) continue;
                scan.points.push_back({tau, v, vals == &maxima});
                last = v;
            }
        }
    }
    return scan;
}

} // namespace lmg
