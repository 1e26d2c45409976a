#pragma once

// Adaptive Dormand-Prince 5(4) integration of the slow-amplitude equation.
// One complex state, FSAL, PI step-size control.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pmsim/errors.hpp"
#include "pmsim/rwa.hpp"

namespace pmsim {

struct StepStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t rhs_evals = 0;
};

struct TrajectoryPoint {
    double t = 0;
    Complex a = 0;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points; // every accepted step, starting at t = 0
    StepStats stats;
};

namespace detail {

inline double check_tol(double tol) {
    if (!(tol > 1e-14 && tol < 1e-3))
        throw InvalidParameter("integrate: tol must lie in (1e-14, 1e-3)");
    return tol;
}

class Dopri5 {
public:
    Dopri5(Complex y0, const RwaModel& model, double tol)
        : m_(model), rtol_(check_tol(tol)), atol_(0.01 * tol), y_(y0) {
        m_.validate();
        k1_ = f(t_, y_);
        h_ = initial_step();
    }

    double t() const { return t_; }
    Complex y() const { return y_; }
    const StepStats& stats() const { return stats_; }

    // Advance by one accepted step, clipped so t never passes t_limit.
    void step(double t_limit = std::numeric_limits<double>::infinity()) {
        for (;;) {
            double h = h_;
            const bool clipped = t_ + h >= t_limit;
            if (clipped) h = t_limit - t_;
            else if (h < 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_)))
                throw StepSizeUnderflow("integrate: step size underflow at t = " +
                                        std::to_string(t_));

            const Complex k2 = f(t_ + kC2 * h, y_ + h * (kA21 * k1_));
            const Complex k3 = f(t_ + kC3 * h, y_ + h * (kA31 * k1_ + kA32 * k2));
            const Complex k4 = f(t_ + kC4 * h, y_ + h * (kA41 * k1_ + kA42 * k2 + kA43 * k3));
            const Complex k5 =
                f(t_ + kC5 * h, y_ + h * (kA51 * k1_ + kA52 * k2 + kA53 * k3 + kA54 * k4));
            const Complex k6 =
                f(t_ + h, y_ + h * (kA61 * k1_ + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
            const Complex ynew =
                y_ + h * (kB1 * k1_ + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
            const Complex k7 = f(t_ + h, ynew);
            const Complex ee =
                h * (kE1 * k1_ + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

            const double err = error_norm(ee, y_, ynew);
            if (err <= 1.0) {
                t_ = clipped ? t_limit : t_ + h;
                y_ = ynew;
                k1_ = k7;
                if (!clipped) {
                    const double fac11 = std::pow(err, kExpo1);
                    double fac = fac11 / std::pow(facold_, kBeta);
                    fac = std::max(kFaccMin, std::min(kFaccMax, fac / kSafe));
                    h_ = h / fac;
                    facold_ = std::max(err, 1e-4);
                }
                ++stats_.accepted;
                return;
            }
            ++stats_.rejected;
            h_ = h / std::min(kFaccMax, std::pow(err, kExpo1) / kSafe);
        }
    }

private:
    Complex f(double t, Complex y) {
        ++stats_.rhs_evals;
        return eom_rhs(y, t, m_);
    }

    double error_norm(Complex ee, Complex y0, Complex y1) const {
        const double sr = atol_ + rtol_ * std::max(std::abs(y0.real()), std::abs(y1.real()));
        const double si = atol_ + rtol_ * std::max(std::abs(y0.imag()), std::abs(y1.imag()));
        const double er = ee.real() / sr;
        const double ei = ee.imag() / si;
        const double err = std::sqrt(0.5 * (er * er + ei * ei));
        return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
    }

    double initial_step() {
        const double sr = atol_ + rtol_ * std::abs(y_.real());
        const double si = atol_ + rtol_ * std::abs(y_.imag());
        auto sq = [](double x) { return x * x; };
        const double dnf = sq(k1_.real() / sr) + sq(k1_.imag() / si);
        const double dny = sq(y_.real() / sr) + sq(y_.imag() / si);
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        const Complex f1 = f(t_ + h, y_ + h * k1_);
        const double der2 =
            std::sqrt(sq((f1.real() - k1_.real()) / sr) + sq((f1.imag() - k1_.imag()) / si)) / h;
        const double der12 = std::max(der2, std::sqrt(dnf));
        const double h1 =
            (der12 <= 1e-15) ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
        return std::min(100 * h, h1);
    }

    static constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
    static constexpr double kA21 = 1.0 / 5;
    static constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
    static constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
    static constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                            kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
    static constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                            kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
    static constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                            kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
    static constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                            kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
    static constexpr double kBeta = 0.04, kExpo1 = 0.2 - kBeta * 0.75, kSafe = 0.9;
    static constexpr double kFaccMin = 0.1, kFaccMax = 5.0; // hnew/h within [1/5, 10]

    const RwaModel& m_;
    double rtol_, atol_;
    double t_ = 0;
    Complex y_;
    Complex k1_;
    double h_ = 0;
    double facold_ = 1e-4;
    StepStats stats_;
};

} // namespace detail

inline Trajectory integrate(Complex a0, const RwaModel& model, double t_final,
                            double tol = 1e-9) {
    if (!(t_final > 0)) throw InvalidParameter("integrate: t_final must be > 0");
    detail::Dopri5 st(a0, model, tol);
    Trajectory traj;
    traj.points.push_back({0.0, a0});
    while (st.t() < t_final) {
        st.step(t_final);
        traj.points.push_back({st.t(), st.y()});
    }
    traj.stats = st.stats();
    return traj;
}

inline Complex integrate_final(Complex a0, const RwaModel& model, double t_final,
                               double tol = 1e-9) {
    if (!(t_final > 0)) throw InvalidParameter("integrate: t_final must be > 0");
    detail::Dopri5 st(a0, model, tol);
    while (st.t() < t_final) st.step(t_final);
    return st.y();
}

// Exactly n accepted steps with no time horizon; used for long-run
// conservation checks of the lossless flow.
inline Trajectory integrate_steps(Complex a0, const RwaModel& model, std::uint64_t n_steps,
                                  double tol = 1e-9) {
    detail::Dopri5 st(a0, model, tol);
    Trajectory traj;
    traj.points.reserve(n_steps + 1);
    traj.points.push_back({0.0, a0});
    for (std::uint64_t i = 0; i < n_steps; ++i) {
        st.step();
        traj.points.push_back({st.t(), st.y()});
    }
    traj.stats = st.stats();
    return traj;
}

} // namespace pmsim
