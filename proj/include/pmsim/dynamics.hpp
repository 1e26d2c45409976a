#pragma once

// Fixed points, linear stability, the n=2 instability threshold, and basins
// of attraction of the deterministic slow-amplitude flow.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "pmsim/errors.hpp"
#include "pmsim/integrate.hpp"
#include "pmsim/parallel.hpp"
#include "pmsim/rwa.hpp"

namespace pmsim {

struct Mat2 {
    double m00 = 0, m01 = 0;
    double m10 = 0, m11 = 0;
    double trace() const { return m00 + m11; }
    double det() const { return m00 * m11 - m01 * m10; }
};

inline std::array<Complex, 2> eigenvalues(const Mat2& j) {
    const double half_tr = 0.5 * j.trace();
    const double disc = half_tr * half_tr - j.det();
    if (disc >= 0) {
        const double s = std::sqrt(disc);
        return {Complex(half_tr + s, 0), Complex(half_tr - s, 0)};
    }
    const double s = std::sqrt(-disc);
    return {Complex(half_tr, s), Complex(half_tr, -s)};
}

enum class Stability { stable, unstable, saddle };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        case Stability::saddle: return "saddle";
    }
    return "?";
}

inline Stability classify(const std::array<Complex, 2>& eig) {
    const double lo = std::min(eig[0].real(), eig[1].real());
    const double hi = std::max(eig[0].real(), eig[1].real());
    if (hi < -1e-12) return Stability::stable;
    if (lo < -1e-12 && hi > 1e-12) return Stability::saddle;
    return Stability::unstable;
}

// Linearization of the autonomous flow over (Re a, Im a). With the Wirtinger
// derivatives u = dF/da, v = dF/da* of F = eom_rhs,
//   J = [ Re(u+v)  -Im(u-v) ]
//       [ Im(u+v)   Re(u-v) ].
inline Mat2 jacobian(Complex a, const RwaModel& m) {
    if (m.probe_active()) throw InvalidParameter("jacobian: probe must be off");
    const Complex i(0, 1);
    const Complex u = i * (Complex(m.delta, m.gamma1) + 2.0 * m.alpha * std::norm(a));
    const Complex v =
        i * (m.alpha * a * a + m.epsilon * double(m.n - 1) * detail::conj_pow(a, m.n - 2));
    Mat2 j;
    j.m00 = (u + v).real();
    j.m01 = -(u - v).imag();
    j.m10 = (u + v).imag();
    j.m11 = (u - v).real();
    return j;
}

struct FixedPoint {
    Complex a = 0;
    double r = 0;
    double theta = 0; // [0, 2*pi)
    Stability stability = Stability::stable;
    double residual = 0; // max-norm of eom_rhs at the point
    int family = 0;      // 0 = origin, nontrivial families numbered by increasing r
    int member = 0;      // 0..n-1 within a family
};

inline double wrap_angle(double th) {
    const double tp = 2 * M_PI;
    double w = std::fmod(th, tp);
    if (w < 0) w += tp;
    return w;
}

namespace detail {

// |eps|^2 r^(2(n-2)) - (delta + alpha r^2)^2 - Gamma1^2; zero on stationary
// amplitudes.
inline double amplitude_gap(double r, const RwaModel& m) {
    const double u = r * r;
    const double p = m.delta + m.alpha * u;
    return std::norm(m.epsilon) * std::pow(u, m.n - 2) - p * p - m.gamma1 * m.gamma1;
}

inline void quadratic_roots(double c2, double c1, double c0, std::vector<double>& out) {
    if (c2 == 0) {
        if (c1 != 0) out.push_back(-c0 / c1);
        return;
    }
    const double disc = c1 * c1 - 4 * c2 * c0;
    if (disc < 0) return;
    const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
    if (q != 0) {
        out.push_back(q / c2);
        out.push_back(c0 / q);
    } else {
        out.push_back(0.0);
    }
}

inline void cubic_roots(double c3, double c2, double c1, double c0, std::vector<double>& out) {
    const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
    const double p = b - a * a / 3;
    const double q = 2 * a * a * a / 27 - a * b / 3 + c;
    const double disc = -4 * p * p * p - 27 * q * q;
    std::vector<double> t;
    if (disc > 0) {
        const double s = std::sqrt(-p / 3);
        const double arg = std::clamp(3 * q / (2 * p * s), -1.0, 1.0);
        const double phi = std::acos(arg) / 3;
        for (int k = 0; k < 3; ++k) t.push_back(2 * s * std::cos(phi - 2 * M_PI * k / 3));
    } else if (p == 0 && q == 0) {
        t.push_back(0.0);
    } else if (disc == 0) {
        t.push_back(3 * q / p);
        t.push_back(-3 * q / (2 * p));
    } else {
        const double w = std::sqrt(q * q / 4 + p * p * p / 27);
        t.push_back(std::cbrt(-q / 2 + w) + std::cbrt(-q / 2 - w));
    }
    for (double tk : t) out.push_back(tk - a / 3);
}

// Nontrivial amplitudes solve |eps|^2 u^(n-2) = (delta + alpha u)^2 + Gamma1^2
// with u = r^2, a polynomial of degree <= 3 in u; solve it in closed form and
// Newton-polish so no root is ever missed by a bracketing scan.
inline std::vector<double> amplitude_roots(const RwaModel& m) {
    std::vector<double> roots;
    const double e2 = std::norm(m.epsilon);
    if (e2 == 0) return roots;
    double c3 = 0;
    double c2 = m.alpha * m.alpha;
    double c1 = 2 * m.alpha * m.delta;
    double c0 = m.delta * m.delta + m.gamma1 * m.gamma1;
    switch (m.n) {
        case 2: c0 -= e2; break;
        case 3: c1 -= e2; break;
        case 4: c2 -= e2; break;
        default: c3 = -e2; break;
    }
    std::vector<double> u_roots;
    if (c3 != 0)
        cubic_roots(c3, c2, c1, c0, u_roots);
    else
        quadratic_roots(c2, c1, c0, u_roots);

    for (double u : u_roots) {
        for (int it = 0; it < 8; ++it) {
            const double f = ((c3 * u + c2) * u + c1) * u + c0;
            const double df = (3 * c3 * u + 2 * c2) * u + c1;
            if (df == 0) break;
            const double du = f / df;
            u -= du;
            if (std::abs(du) <= 1e-15 * std::abs(u)) break;
        }
        if (u > 0) roots.push_back(std::sqrt(u));
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> unique;
    for (double r : roots)
        if (unique.empty() || r - unique.back() > 1e-9 * (1 + r)) unique.push_back(r);
    return unique;
}

inline double residual_norm(Complex a, const RwaModel& m) {
    const Complex f = eom_rhs(a, 0, m);
    return std::max(std::abs(f.real()), std::abs(f.imag()));
}

} // namespace detail

// The origin plus every nontrivial stationary family. Amplitudes come from
// the closed-form polar amplitude equation; each member theta_m =
// theta0 + 2*pi*m/n is then Newton-polished in the plane.
inline std::vector<FixedPoint> find_fixed_points(const RwaModel& m) {
    m.validate();
    if (m.probe_active()) throw InvalidParameter("find_fixed_points: probe must be off");

    std::vector<FixedPoint> out;
    {
        FixedPoint origin;
        origin.residual = detail::residual_norm(0, m);
        origin.stability = classify(eigenvalues(jacobian(0, m)));
        out.push_back(origin);
    }

    const double phi = std::arg(m.epsilon);
    int family = 1;
    for (double r0 : detail::amplitude_roots(m)) {
        const double p = m.delta + m.alpha * r0 * r0;
        const double theta0 = (phi + std::atan2(m.gamma1, -p)) / m.n;
        const double fscale = std::max(
            1e-30, (std::abs(m.delta) + m.gamma1 + std::abs(m.alpha) * r0 * r0 +
                    std::abs(m.epsilon) * std::pow(r0, m.n - 2)) *
                       std::max(r0, 1e-3));
        bool family_used = false;
        for (int mem = 0; mem < m.n; ++mem) {
            Complex a = std::polar(r0, theta0 + 2 * M_PI * mem / m.n);
            for (int it = 0; it < 50; ++it) {
                const Complex f = eom_rhs(a, 0, m);
                if (std::max(std::abs(f.real()), std::abs(f.imag())) < 1e-14 * fscale) break;
                const Mat2 j = jacobian(a, m);
                const double det = j.det();
                if (det == 0 || !std::isfinite(det)) break;
                const Complex step((j.m11 * f.real() - j.m01 * f.imag()) / det,
                                   (-j.m10 * f.real() + j.m00 * f.imag()) / det);
                if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
                a -= step;
            }
            bool duplicate = false;
            for (const FixedPoint& fp : out)
                if (std::abs(fp.a.real() - a.real()) < 1e-8 &&
                    std::abs(fp.a.imag() - a.imag()) < 1e-8) {
                    duplicate = true;
                    break;
                }
            if (duplicate) continue;
            FixedPoint fp;
            fp.a = a;
            fp.r = std::abs(a);
            fp.theta = wrap_angle(std::arg(a));
            fp.residual = detail::residual_norm(a, m);
            fp.stability = classify(eigenvalues(jacobian(a, m)));
            fp.family = family;
            fp.member = mem;
            out.push_back(fp);
            family_used = true;
        }
        if (family_used) ++family;
    }
    return out;
}

// Pump strength where the origin destabilizes for n=2, located by bisection
// on the leading Jacobian eigenvalue; equals sqrt(delta^2 + gamma1^2).
inline double threshold_n2(double delta, double gamma1) {
    if (!(gamma1 > 0)) throw InvalidParameter("threshold_n2: gamma1 must be > 0");
    RwaModel m;
    m.n = 2;
    m.delta = delta;
    m.gamma1 = gamma1;
    auto leading = [&](double e) {
        m.epsilon = e;
        const auto eig = eigenvalues(jacobian(0, m));
        return std::max(eig[0].real(), eig[1].real());
    };
    double lo = 0;
    double hi = std::max({gamma1, std::abs(delta), 1e-12});
    while (leading(hi) <= 0) hi *= 2;
    for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (leading(mid) <= 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct BasinGrid {
    double extent = 0;
    int resolution = 0;
    double capture_radius = 1e-4;
    double t_cap = 0;
    std::vector<FixedPoint> attractors; // the stable fixed points, in label order
    std::vector<int> labels;            // iy*resolution + ix; -1 unresolved, -2 diverged
};

// Integrates from every grid-cell center until capture within capture_radius
// of a stable fixed point, divergence, or the time cap 50/Gamma1.
inline BasinGrid basin_sample(const RwaModel& m, double extent, int resolution,
                              double tol = 1e-9) {
    if (!(extent > 0) || resolution < 1)
        throw InvalidParameter("basin_sample: extent must be > 0 and resolution >= 1");
    if (!(m.gamma1 > 0)) throw InvalidParameter("basin_sample: gamma1 must be > 0");

    BasinGrid grid;
    grid.extent = extent;
    grid.resolution = resolution;
    grid.t_cap = 50.0 / m.gamma1;
    for (const FixedPoint& fp : find_fixed_points(m))
        if (fp.stability == Stability::stable) grid.attractors.push_back(fp);
    if (grid.attractors.empty())
        throw InvalidParameter("basin_sample: model has no stable fixed point");
    grid.labels.assign(std::size_t(resolution) * resolution, -1);

    parallel_for(grid.labels.size(), [&](std::size_t cell) {
        const int ix = int(cell % std::size_t(resolution));
        const int iy = int(cell / std::size_t(resolution));
        const double x = -extent + (2 * extent) * (ix + 0.5) / resolution;
        const double y = -extent + (2 * extent) * (iy + 0.5) / resolution;
        int label = -1;
        try {
            detail::Dopri5 st(Complex(x, y), m, tol);
            for (;;) {
                const Complex a = st.y();
                int hit = -1;
                double best = grid.capture_radius;
                for (std::size_t k = 0; k < grid.attractors.size(); ++k) {
                    const double d = std::abs(a - grid.attractors[k].a);
                    if (d <= best) {
                        best = d;
                        hit = int(k);
                    }
                }
                if (hit >= 0) {
                    label = hit;
                    break;
                }
                if (std::abs(a) > 1e6) {
                    label = -2;
                    break;
                }
                if (st.t() >= grid.t_cap) break;
                st.step(grid.t_cap);
            }
        } catch (const StepSizeUnderflow&) {
            label = -2; // finite-time runaway stalls the stepper
        }
        grid.labels[cell] = label;
    });
    return grid;
}

} // namespace pmsim
