#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace linbolt {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct Quad1d {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [a,b], Newton iteration on P_n.
inline Quad1d gauss_legendre(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n < 1");
    Quad1d q;
    q.nodes.resize(n);
    q.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
        q.nodes[i] = xm - xl * x;
        q.nodes[n - 1 - i] = xm + xl * x;
        q.weights[i] = 2.0 * xl / ((1.0 - x * x) * pp * pp);
        q.weights[n - 1 - i] = q.weights[i];
    }
    return q;
}

// Recursive adaptive Simpson; generic scalar oracle used throughout the
// test suites.
namespace detail {
template <class F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa,
                            double fm, double fb, double whole, double tol,
                            int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol,
                                depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol,
                                depth - 1);
}
} // namespace detail

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10,
                        int max_depth = 48) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol,
                                        max_depth);
}

// integral of F(u) * kappa^zeta(u - center) over [lo, hi], where
// kappa^zeta(r) = (1/pi) zeta / (r^2 + zeta^2).  Panels are graded
// dyadically away from the Lorentzian center so that the rule stays
// accurate down to zeta ~ 1e-6 without resolving the peak globally.
template <class F>
double lorentzian_weighted_integral(const F& f, double center, double zeta,
                                    double lo, double hi,
                                    int nodes_per_panel = 16) {
    if (zeta <= 0.0)
        throw std::invalid_argument("lorentzian_weighted_integral: zeta <= 0");
    if (hi <= lo) return 0.0;
    static thread_local Quad1d base;
    static thread_local int base_n = -1;
    if (base_n != nodes_per_panel) {
        base = gauss_legendre(nodes_per_panel, 0.0, 1.0);
        base_n = nodes_per_panel;
    }
    auto kappa = [&](double r) {
        return (1.0 / kPi) * zeta / (r * r + zeta * zeta);
    };
    // panel edges: center +- zeta * 2^k, clipped to [lo, hi]
    std::vector<double> edges;
    edges.push_back(lo);
    std::vector<double> pos;
    for (double w = zeta; ; w *= 2.0) {
        pos.push_back(w);
        if (w > std::max(std::abs(hi - center), std::abs(center - lo)) + zeta)
            break;
        if (pos.size() > 120) break;
    }
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
        const double e = center - *it;
        if (e > lo && e < hi) edges.push_back(e);
    }
    if (center > lo && center < hi) edges.push_back(center);
    for (double w : pos) {
        const double e = center + w;
        if (e > lo && e < hi) edges.push_back(e);
    }
    edges.push_back(hi);
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        double s = 0.0;
        for (int i = 0; i < nodes_per_panel; ++i) {
            const double u = a + (b - a) * base.nodes[i];
            s += base.weights[i] * f(u) * kappa(u - center);
        }
        total += s * (b - a);
    }
    return total;
}

// Angular quadrature on S^{d-1}.
//   d = 1 : the two points {+1, -1}, weight 1 each (|S^0| = 2)
//   d = 2 : equispaced angles, trapezoid rule (exact for e^{ik theta},
//           |k| < n)
//   d = 3 : Gauss-Legendre in cos(theta) x equispaced azimuth; exact for
//           spherical polynomials of degree <= min(2 n_polar - 1,
//           n_azimuth - 1)
struct SphereRule {
    int dim = 2;
    std::vector<std::array<double, 3>> nodes; // unit vectors, z unused in d<3
    std::vector<double> weights;              // sum = |S^{d-1}|
    int exact_degree = 0;

    static SphereRule make(int d, int n_nodes, int n_azimuth = 0) {
        SphereRule r;
        r.dim = d;
        if (d == 1) {
            r.nodes = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}};
            r.weights = {1.0, 1.0};
            r.exact_degree = 1;
        } else if (d == 2) {
            if (n_nodes < 2)
                throw std::invalid_argument("SphereRule: need >= 2 angles");
            r.nodes.resize(n_nodes);
            r.weights.assign(n_nodes, 2.0 * kPi / n_nodes);
            for (int j = 0; j < n_nodes; ++j) {
                const double th = 2.0 * kPi * j / n_nodes;
                r.nodes[j] = {std::cos(th), std::sin(th), 0.0};
            }
            r.exact_degree = n_nodes - 1;
        } else if (d == 3) {
            const int npol = n_nodes;
            const int naz = n_azimuth > 0 ? n_azimuth : 2 * n_nodes;
            Quad1d gl = gauss_legendre(npol, -1.0, 1.0);
            r.nodes.reserve(static_cast<std::size_t>(npol) * naz);
            r.weights.reserve(static_cast<std::size_t>(npol) * naz);
            for (int i = 0; i < npol; ++i) {
                const double c = gl.nodes[i];
                const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
                for (int j = 0; j < naz; ++j) {
                    const double ph = 2.0 * kPi * j / naz;
                    r.nodes.push_back(
                        {s * std::cos(ph), s * std::sin(ph), c});
                    r.weights.push_back(gl.weights[i] * 2.0 * kPi / naz);
                }
            }
            r.exact_degree = std::min(2 * npol - 1, naz - 1);
        } else {
            throw std::invalid_argument("SphereRule: d must be 1, 2 or 3");
        }
        return r;
    }
};

inline double sphere_area(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return 2.0 * kPi;
        case 3: return 4.0 * kPi;
        default: throw std::invalid_argument("sphere_area: d out of range");
    }
}

} // namespace linbolt
