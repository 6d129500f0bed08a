// meanfield.hpp — delayed mean-field flow on the Bloch sphere and its fixed-step integrator
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"

namespace lmg {

struct SpinDeriv {
    double djx{0.0};
    double djy{0.0};
    double djz{0.0};
};

// Equations of motion for (Jx, Jy, Jz) with instantaneous coupling gamma_x and
// collective loss kappa.  The flow conserves |J|^2 exactly: J . dJ/dt = 0
// term by term, so any drift in a trajectory is integrator error, not model error.
inline SpinDeriv mean_field_rhs(const SpinState& s, double gamma_x, const ModelParams& p) {
    const double k = p.kappa;
    return {p.h * s.jy - k * s.jx * s.jz,
            -p.h * s.jx + 2.0 * gamma_x * s.jx * s.jz - k * s.jy * s.jz,
            -2.0 * gamma_x * s.jx * s.jy + k * (s.jx * s.jx + s.jy * s.jy)};
}

class SphereDriftError : public std::runtime_error {
public:
    SphereDriftError(double t, double drift)
        : std::runtime_error("sphere drift " + std::to_string(drift) + " exceeded 1e-4 at t = " +
                             std::to_string(t) + "; reduce the step size"),
          time(t), drift_value(drift) {}
    double time;
    double drift_value;
};

// Ring of (state, derivative) nodes on the uniform step grid, long enough to cover
// the delay window.  Queries between nodes use cubic Hermite interpolation, so the
// history is C^1 and one interpolation error order below the RK4 step error.
class HistoryBuffer {
public:
    HistoryBuffer(const SpinState& initial, double dt, double delay)
        : dt_(dt), delay_(delay), initial_(initial) {
        if (!(dt > 0.0)) throw std::invalid_argument("HistoryBuffer: dt must be > 0");
        if (delay < 0.0) throw std::invalid_argument("HistoryBuffer: delay must be >= 0");
        const auto span = static_cast<std::size_t>(std::ceil(delay / dt)) + 4;
        ring_.resize(span);
    }

    // Nodes must arrive in step order; node k lives at t = k dt.
    void push(const SpinState& y, const SpinDeriv& f) {
        ring_[count_ % ring_.size()] = Node{y, f};
        ++count_;
    }

    std::size_t node_count() const { return count_; }

    // State at time t <= (node_count - 1) dt.  Times at or before 0 return the
    // constant pre-history.  Evicted times (older than the delay window) are a
    // contract violation and throw.
    SpinState state_at(double t) const {
        if (t <= 0.0) return initial_;
        if (count_ == 0) throw std::logic_error("HistoryBuffer: no nodes pushed");
        const double pos = t / dt_;
        auto k = static_cast<std::size_t>(pos);
        if (k >= count_ - 1) {
            if (pos > static_cast<double>(count_ - 1) + 1e-9)
                throw std::invalid_argument("HistoryBuffer: query ahead of last node");
            return ring_[(count_ - 1) % ring_.size()].y;
        }
        if (count_ - k > ring_.size())
            throw std::invalid_argument("HistoryBuffer: query behind the retained window");
        const Node& a = ring_[k % ring_.size()];
        const Node& b = ring_[(k + 1) % ring_.size()];
        const double u = pos - static_cast<double>(k);
        const double u2 = u * u, u3 = u2 * u;
        const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        const double h10 = u3 - 2.0 * u2 + u;
        const double h01 = -2.0 * u3 + 3.0 * u2;
        const double h11 = u3 - u2;
        return {h00 * a.y.jx + h10 * dt_ * a.f.djx + h01 * b.y.jx + h11 * dt_ * b.f.djx,
                h00 * a.y.jy + h10 * dt_ * a.f.djy + h01 * b.y.jy + h11 * dt_ * b.f.djy,
                h00 * a.y.jz + h10 * dt_ * a.f.djz + h01 * b.y.jz + h11 * dt_ * b.f.djz};
    }

private:
    struct Node {
        SpinState y;
        SpinDeriv f;
    };
    double dt_;
    double delay_;
    SpinState initial_;
    std::vector<Node> ring_;
    std::size_t count_{0};
};

// Uniformly sampled solution.  gamma_x[i] is the coupling actually used in the
// derivative at times[i], so (times, states, gamma_x) replays the integration.
struct Trajectory {
    std::vector<double> times;
    std::vector<SpinState> states;
    std::vector<double> gamma_x;
    ModelParams params;
    double dt{0.0};

    std::size_t size() const { return times.size(); }
    double t_end() const { return times.empty() ? 0.0 : times.back(); }

    std::size_t index_at(double t) const {
        const auto i = static_cast<std::ptrdiff_t>(std::llround(t / dt));
        if (i < 0 || i >= static_cast<std::ptrdiff_t>(times.size()))
            throw std::invalid_argument("Trajectory: time outside sampled range");
        return static_cast<std::size_t>(i);
    }
};

inline double max_step_for(const ModelParams& p) {
    const double cap = 0.01 / p.h;
    return p.tau > 0.0 ? std::min(p.tau / 20.0, cap) : cap;
}

// Classical RK4 with the delayed argument served from the Hermite history.
// Stage queries look back at least tau - dt/2 >= 19.5 dt, so they always land in
// the fully determined part of the history (hence the dt <= tau/20 requirement).
// The step is fixed and the state is never re-projected onto the sphere; the
// conserved |J|^2 is monitored instead and drift beyond 1e-4 aborts the run.
inline Trajectory integrate_dde(const ModelParams& p, const SpinState& initial,
                                double t_max, double dt) {
    p.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_dde: dt must be > 0");
    if (!(t_max > 0.0)) throw std::invalid_argument("integrate_dde: t_max must be > 0");
    if (dt > max_step_for(p) * (1.0 + 1e-12))
        throw std::invalid_argument("integrate_dde: dt must be <= min(tau/20, 0.01/h)");
    if (!on_sphere(initial))
        throw std::invalid_argument("integrate_dde: initial state must lie on the sphere");

    const auto n_steps = static_cast<std::size_t>(std::llround(std::ceil(t_max / dt - 1e-9)));
    HistoryBuffer hist(initial, dt, p.tau);

    Trajectory traj;
    traj.params = p;
    traj.dt = dt;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.gamma_x.reserve(n_steps + 1);

    const bool delayed = p.tau > 0.0;
    auto coupling_at = [&](double t, double jz_now) {
        const double jzd = delayed ? hist.state_at(t - p.tau).jz : jz_now;
        return feedback_coupling(p, jzd, jz_now);
    };
    auto rhs_at = [&](double t, const SpinState& y) {
        return mean_field_rhs(y, coupling_at(t, y.jz), p);
    };
    auto advance = [&](const SpinState& y, const SpinDeriv& f, double w) {
        return SpinState{y.jx + w * f.djx, y.jy + w * f.djy, y.jz + w * f.djz};
    };

    SpinState y = initial;
    double gx = coupling_at(0.0, y.jz);
    SpinDeriv f = mean_field_rhs(y, gx, p);
    hist.push(y, f);
    traj.times.push_back(0.0);
    traj.states.push_back(y);
    traj.gamma_x.push_back(gx);

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const SpinDeriv k1 = f;
        const SpinDeriv k2 = rhs_at(t + 0.5 * dt, advance(y, k1, 0.5 * dt));
        const SpinDeriv k3 = rhs_at(t + 0.5 * dt, advance(y, k2, 0.5 * dt));
        const SpinDeriv k4 = rhs_at(t + dt, advance(y, k3, dt));
        y = {y.jx + dt / 6.0 * (k1.djx + 2.0 * k2.djx + 2.0 * k3.djx + k4.djx),
             y.jy + dt / 6.0 * (k1.djy + 2.0 * k2.djy + 2.0 * k3.djy + k4.djy),
             y.jz + dt / 6.0 * (k1.djz + 2.0 * k2.djz + 2.0 * k3.djz + k4.djz)};

        const double t_next = static_cast<double>(k + 1) * dt;
        const double drift = sphere_drift(y);
        if (!(drift <= 1e-4)) throw SphereDriftError(t_next, drift); // also catches NaN states

        gx = coupling_at(t_next, y.jz);
        f = mean_field_rhs(y, gx, p);
        hist.push(y, f);
        traj.times.push_back(t_next);
        traj.states.push_back(y);
        traj.gamma_x.push_back(gx);
    }
    return traj;
}

// Max componentwise deviation between runs at dt and dt/2, compared on the shared
// grid.  Halving dt again should shrink the result about sixteenfold while the
// truncation error dominates; the ratio is the standard self-convergence check
// for the fixed-step scheme.
inline double reference_step_check(const ModelParams& p, const SpinState& initial,
                                   double t_max, double dt) {
    const Trajectory coarse = integrate_dde(p, initial, t_max, dt);
    const Trajectory fine = integrate_dde(p, initial, t_max, 0.5 * dt);
    double dev = 0.0;
    const std::size_t n = std::min(coarse.size(), (fine.size() + 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        const SpinState& a = coarse.states[i];
        const SpinState& b = fine.states[2 * i];
        dev = std::max({dev, std::abs(a.jx - b.jx), std::abs(a.jy - b.jy),
                        std::abs(a.jz - b.jz)});
    }
    return dev;
}

} // namespace lmg
