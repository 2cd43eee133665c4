#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "probe/errors.hpp"

namespace probe {

struct OdeOptions {
    double atol = 1e-10;
    double rtol = 1e-8;
    double first_step = 0.0;  // 0 -> automatic
    std::int64_t max_steps = 200'000'000;
};

struct OdeStats {
    std::int64_t n_steps = 0;
    std::int64_t n_rejected = 0;
    std::int64_t n_rhs = 0;
};

// Dormand-Prince 5(4) embedded pair, FSAL. The generators in this project are
// autonomous, so the right-hand side takes no time argument:
//   rhs(const State& y, State& dydt)
// State must support Eigen-style arithmetic and cwiseAbs().
template <class State, class Rhs>
class Dopri5 {
  public:
    Dopri5(Rhs& rhs, const OdeOptions& opts) : rhs_(rhs), opts_(opts) {}

    // Scaled RMS error norm used by the controller.
    double error_norm(const State& err, const State& y0, const State& y1) const {
        const auto e = err.cwiseAbs().array();
        const auto sc =
            opts_.atol + opts_.rtol * y0.cwiseAbs().array().max(y1.cwiseAbs().array());
        return std::sqrt((e / sc).square().sum() / double(err.size()));
    }

    // One trial step from (t, y) with size h. k1 must hold rhs(y). On output
    // ynew and k7 = rhs(ynew) are valid regardless of acceptance; the caller
    // decides based on the returned error norm.
    double try_step(const State& y, const State& k1, double h, State& ynew, State& k7) {
        tmp_ = y + (h * a21) * k1;
        rhs_(tmp_, k2_);
        tmp_ = y + h * (a31 * k1 + a32 * k2_);
        rhs_(tmp_, k3_);
        tmp_ = y + h * (a41 * k1 + a42 * k2_ + a43 * k3_);
        rhs_(tmp_, k4_);
        tmp_ = y + h * (a51 * k1 + a52 * k2_ + a53 * k3_ + a54 * k4_);
        rhs_(tmp_, k5_);
        tmp_ = y + h * (a61 * k1 + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        rhs_(tmp_, k6_);
        ynew = y + h * (b1 * k1 + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        rhs_(ynew, k7);
        nrhs_ += 6;
        err_ = h * (d1 * k1 + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7);
        return error_norm(err_, y, ynew);
    }

    std::int64_t rhs_evals() const { return nrhs_; }

  private:
    Rhs& rhs_;
    OdeOptions opts_;
    State k2_, k3_, k4_, k5_, k6_, tmp_, err_;
    std::int64_t nrhs_ = 0;

    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                            a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                            a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double d1 = b1 - 5179.0 / 57600.0;
    static constexpr double d3 = b3 - 7571.0 / 16695.0;
    static constexpr double d4 = b4 - 393.0 / 640.0;
    static constexpr double d5 = b5 + 92097.0 / 339200.0;
    static constexpr double d6 = b6 - 187.0 / 2100.0;
    static constexpr double d7 = -1.0 / 40.0;
};

inline double dopri5_accept_factor(double err) {
    if (err <= 0.0) return 5.0;
    return std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
}

// Integrates y from times.front() through every grid time, calling
// observer(index, y) at each one (including index 0). Step sizes are clamped
// to land exactly on grid times.
template <class State, class Rhs, class Observer>
OdeStats integrate_at_times(Rhs& rhs, State& y, const std::vector<double>& times,
                            Observer&& observer, const OdeOptions& opts = {}) {
    if (times.empty()) throw NumericalFault("integrate: empty time grid");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw NumericalFault("integrate: time grid not strictly increasing");

    Dopri5<State, Rhs> stepper(rhs, opts);
    OdeStats stats;
    State k1, k7, ynew;
    rhs(y, k1);
    stats.n_rhs = 1;
    observer(std::size_t{0}, y);

    double t = times.front();
    double h = opts.first_step;
    if (h <= 0.0) {
        const double span = times.back() - times.front();
        const double f = std::sqrt(k1.cwiseAbs().array().square().sum() / double(k1.size()));
        h = (f > 0.0) ? std::min(0.01 / f, span / 100.0) : span / 100.0;
    }

    for (std::size_t target = 1; target < times.size(); ++target) {
        const double t_goal = times[target];
        while (t < t_goal) {
            if (stats.n_steps + stats.n_rejected > opts.max_steps)
                throw NumericalFault("integrate: max step count exceeded at t=" +
                                     std::to_string(t));
            bool clipped = false;
            double h_try = h;
            if (t + h_try >= t_goal) {
                h_try = t_goal - t;
                clipped = true;
            }
            const double h_floor = 1e-14 * std::max(1.0, std::abs(t));
            if (h_try < h_floor)
                throw NumericalFault("integrate: step underflow at t=" + std::to_string(t));

            const double err = stepper.try_step(y, k1, h_try, ynew, k7);
            if (err <= 1.0) {
                t = clipped ? t_goal : t + h_try;
                y.swap(ynew);
                k1.swap(k7);
                ++stats.n_steps;
                const double grow = dopri5_accept_factor(err);
                if (!clipped)
                    h = h_try * grow;
                else
                    h = std::max(h, h_try * grow);
            } else {
                ++stats.n_rejected;
                h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            }
        }
        observer(target, y);
    }
    stats.n_rhs += stepper.rhs_evals();
    return stats;
}

}  // namespace probe
