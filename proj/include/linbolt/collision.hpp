#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "linbolt/fft.hpp"
#include "linbolt/grid.hpp"
#include "linbolt/scattering.hpp"

namespace linbolt {

namespace detail {
// physical Fourier frequency vector of a spatial cell
inline Vec3 cell_frequency(const PhaseGrid& g, std::size_t cell) {
    const double f0 = 2.0 * kPi / g.box_length();
    auto c = g.cell_coords(cell);
    Vec3 k{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a)
        k[a] = f0 * fft_freq_index(c[a], g.nx());
    return k;
}

inline std::vector<int> spatial_shape(const PhaseGrid& g) {
    return std::vector<int>(static_cast<std::size_t>(g.dim()), g.nx());
}
} // namespace detail

// gain term: (Q+ b)(x, r_m w_j) = (r^{d-2}/2) sum_k w_k Sigma_{jk} b(x, r_m w_k)
inline DualObservable q_plus(const ScatteringData& s, const DualObservable& b) {
    const PhaseGrid& g = s.grid();
    if (b.grid != &g && !b.grid->compatible(g))
        throw std::invalid_argument("q_plus: grid mismatch");
    DualObservable out(*b.grid);
    using RowMat =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto J = static_cast<Eigen::Index>(g.n_angles());
    const auto C = static_cast<Eigen::Index>(g.n_cells());
    for (std::size_t m = 0; m < g.n_shells(); ++m) {
        Eigen::Map<const RowMat> B(b.node(m, 0), J, C);
        Eigen::Map<RowMat> O(out.node(m, 0), J, C);
        O.noalias() = s.gain_matrix(m) * B;
    }
    return out;
}

// loss term: multiplication by the total rate c_{m,j}
inline DualObservable q_minus(const ScatteringData& s,
                              const DualObservable& b) {
    const PhaseGrid& g = s.grid();
    DualObservable out(*b.grid);
    for (std::size_t m = 0; m < g.n_shells(); ++m)
        for (std::size_t j = 0; j < g.n_angles(); ++j) {
            const double c = s.loss_rate(m, j);
            const double* src = b.node(m, j);
            double* dst = out.node(m, j);
            for (std::size_t i = 0; i < g.n_cells(); ++i) dst[i] = c * src[i];
        }
    return out;
}

inline DualObservable q_apply(const ScatteringData& s,
                              const DualObservable& b) {
    DualObservable out = q_plus(s, b);
    const PhaseGrid& g = s.grid();
    for (std::size_t m = 0; m < g.n_shells(); ++m)
        for (std::size_t j = 0; j < g.n_angles(); ++j) {
            const double c = s.loss_rate(m, j);
            const double* src = b.node(m, j);
            double* dst = out.node(m, j);
            for (std::size_t i = 0; i < g.n_cells(); ++i) dst[i] -= c * src[i];
        }
    return out;
}

// Time-shifted gain Q_{+,t}: the spatial argument is displaced by
// -2t(xi' - xi) before the angular sum.  The displacement multiplier
// factorizes as chi_k(kappa) * conj(chi_j(kappa)) with
// chi_a = exp(-2 i t kappa . xi_a), so one FFT pair per node suffices.
inline DualObservable q_plus_shifted(const ScatteringData& s,
                                     const DualObservable& b, double t) {
    const PhaseGrid& g = s.grid();
    if (t == 0.0) return q_plus(s, b);
    const std::size_t J = g.n_angles(), C = g.n_cells();
    Fft fft(detail::spatial_shape(g));
    DualObservable out(*b.grid);

    std::vector<cplx> hat(J * C), acc(J * C);
    std::vector<cplx> chi(J * C);
    using RowMatC =
        Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    for (std::size_t m = 0; m < g.n_shells(); ++m) {
        for (std::size_t j = 0; j < J; ++j) {
            const auto xi = g.velocity(m, j);
            const double* src = b.node(m, j);
            cplx* h = hat.data() + j * C;
            for (std::size_t c = 0; c < C; ++c) h[c] = src[c];
            fft.forward(h);
            cplx* x = chi.data() + j * C;
            for (std::size_t c = 0; c < C; ++c) {
                const Vec3 k = detail::cell_frequency(g, c);
                const double ph = -2.0 * t * dot3(k, xi, g.dim());
                x[c] = std::polar(1.0, ph);
                h[c] *= x[c];
            }
        }
        Eigen::Map<RowMatC> H(hat.data(), static_cast<Eigen::Index>(J),
                              static_cast<Eigen::Index>(C));
        Eigen::Map<RowMatC> A(acc.data(), static_cast<Eigen::Index>(J),
                              static_cast<Eigen::Index>(C));
        A.noalias() = s.gain_matrix(m) * H;
        for (std::size_t j = 0; j < J; ++j) {
            cplx* a = acc.data() + j * C;
            const cplx* x = chi.data() + j * C;
            for (std::size_t c = 0; c < C; ++c) a[c] *= std::conj(x[c]);
            fft.backward(a);
            double* dst = out.node(m, j);
            const double scale = 1.0 / static_cast<double>(C);
            for (std::size_t c = 0; c < C; ++c) dst[c] = a[c].real() * scale;
        }
    }
    return out;
}

// Radial tube half-widths for the off-shell extension of b: each shell
// value extends radially constant up to half the gap to its neighbours
// and to the annulus edges.
inline std::vector<double> default_tubes(const PhaseGrid& g) {
    const auto& r = g.speeds();
    std::vector<double> tube(r.size());
    for (std::size_t m = 0; m < r.size(); ++m) {
        double t = std::min(r[m] - g.r_inner(), g.r_outer() - r[m]);
        if (m > 0) t = std::min(t, 0.5 * (r[m] - r[m - 1]));
        if (m + 1 < r.size()) t = std::min(t, 0.5 * (r[m + 1] - r[m]));
        tube[m] = 0.999 * t;
    }
    return tube;
}

struct MollifiedGainOptions {
    int nodes_per_panel = 12;
    std::vector<double> tubes; // empty = default_tubes(grid)
};

// Mollified, time-shifted gain
//   Q^zeta_{+,t} b(x, xi) = 2 pi int G_hat(eta) b(x - 2 t eta, xi - eta)
//                                  kappa^zeta(eta^2 - 2 xi . eta) d eta.
// Substituting xi' = xi - eta and going polar in xi' puts the Lorentzian
// ridge exactly at |xi'| = |xi|; the graded radial rule handles it.  The
// xi'-integral only meets b inside the radial tubes, and the x-shift
// -2t(xi - xi') is applied as a Fourier multiplier per radial node.
inline DualObservable q_plus_zeta_shifted(const ScatteringData& s,
                                          const DualObservable& b, double t,
                                          double zeta,
                                          MollifiedGainOptions opt = {}) {
    if (zeta <= 0.0)
        throw std::invalid_argument("q_plus_zeta_shifted: zeta <= 0");
    const PhaseGrid& g = s.grid();
    const int d = g.dim();
    const std::size_t J = g.n_angles(), C = g.n_cells(), M = g.n_shells();
    std::vector<double> tube =
        opt.tubes.empty() ? default_tubes(g) : opt.tubes;
    for (std::size_t m = 0; m < M; ++m)
        if (tube[m] <= 0.0 || g.speeds()[m] - tube[m] < 0.0)
            throw std::invalid_argument(
                "q_plus_zeta_shifted: radial tube violates the support");

    // radial nodes per tube, graded against the Lorentzian center of the
    // *evaluation* shell; nodes and panel weights depend on the center
    // u0 = |xi|^2, so build them per (evaluation shell, source tube).
    Fft fft(detail::spatial_shape(g));
    std::vector<std::vector<cplx>> bhat(M,
                                        std::vector<cplx>(J * C));
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t k = 0; k < J; ++k) {
            const double* src = b.node(m, k);
            cplx* h = bhat[m].data() + k * C;
            for (std::size_t c = 0; c < C; ++c) h[c] = src[c];
            fft.forward(h);
        }

    DualObservable out(*b.grid);
    Quad1d base = gauss_legendre(opt.nodes_per_panel, 0.0, 1.0);
    std::vector<cplx> acc(C), tmp(C);
    for (std::size_t me = 0; me < M; ++me) {
        const double re = g.speeds()[me];
        const double u0 = re * re;
        for (std::size_t je = 0; je < J; ++je) {
            const Vec3 xi = g.velocity(me, je);
            std::fill(acc.begin(), acc.end(), cplx(0.0));
            for (std::size_t k = 0; k < J; ++k) {
                const auto& w = g.angles().nodes[k];
                for (std::size_t ms = 0; ms < M; ++ms) {
                    const double rs = g.speeds()[ms];
                    const double lo = (rs - tube[ms]) * (rs - tube[ms]);
                    const double hi = (rs + tube[ms]) * (rs + tube[ms]);
                    // graded panel edges against center u0 (same grading
                    // as lorentzian_weighted_integral)
                    std::vector<double> edges{lo};
                    std::vector<double> radii;
                    for (double s2 = zeta;; s2 *= 2.0) {
                        radii.push_back(s2);
                        if (s2 > std::max(std::abs(hi - u0),
                                          std::abs(u0 - lo)) + zeta)
                            break;
                        if (radii.size() > 120) break;
                    }
                    for (auto it = radii.rbegin(); it != radii.rend(); ++it) {
                        const double e = u0 - *it;
                        if (e > lo && e < hi) edges.push_back(e);
                    }
                    if (u0 > lo && u0 < hi) edges.push_back(u0);
                    for (double s2 : radii) {
                        const double e = u0 + s2;
                        if (e > lo && e < hi) edges.push_back(e);
                    }
                    edges.push_back(hi);
                    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
                        for (int i = 0; i < opt.nodes_per_panel; ++i) {
                            const double u =
                                edges[p] +
                                (edges[p + 1] - edges[p]) * base.nodes[i];
                            const double pw =
                                (edges[p + 1] - edges[p]) * base.weights[i];
                            const double rho = std::sqrt(u);
                            Vec3 diff{xi[0] - rho * w[0], xi[1] - rho * w[1],
                                      xi[2] - rho * w[2]};
                            const double coef =
                                pw * 0.5 * std::pow(u, 0.5 * (d - 2)) *
                                s.g_hat(diff) * kappa_zeta(u - u0, zeta) *
                                g.angles().weights[k];
                            if (coef == 0.0) continue;
                            // shift b(., r_ms w_k) by -2t(xi - rho w_k)
                            const cplx* h = bhat[ms].data() + k * C;
                            if (t == 0.0) {
                                for (std::size_t c = 0; c < C; ++c)
                                    acc[c] += coef * h[c];
                            } else {
                                for (std::size_t c = 0; c < C; ++c) {
                                    const Vec3 kap =
                                        detail::cell_frequency(g, c);
                                    const double ph =
                                        -2.0 * t * dot3(kap, diff, d);
                                    acc[c] +=
                                        coef * std::polar(1.0, ph) * h[c];
                                }
                            }
                        }
                    }
                }
            }
            tmp = acc;
            fft.backward(tmp);
            double* dst = out.node(me, je);
            const double scale = 2.0 * kPi / static_cast<double>(C);
            for (std::size_t c = 0; c < C; ++c)
                dst[c] = tmp[c].real() * scale;
        }
    }
    return out;
}

// Direct single-point evaluation by a dense eta-grid Riemann sum of the
// original volumetric integral.  `symbol` is the analytic b(x, xi); the
// radial-constant tube extension is applied here as well.  This is the
// refinement oracle for q_plus_zeta_shifted and never touches the FFT
// path.
template <class Symbol>
double q_plus_zeta_point_riemann(const ScatteringData& s,
                                 const Symbol& symbol, const Vec3& x,
                                 const Vec3& xi, double t, double zeta,
                                 int n_per_axis) {
    const PhaseGrid& g = s.grid();
    const int d = g.dim();
    std::vector<double> tube = default_tubes(g);
    const double R = norm3(xi, d) + g.r_outer() + 1.0;
    const double step = 2.0 * R / n_per_axis;

    auto b_at = [&](const Vec3& y, const Vec3& xip) -> double {
        const double rho = norm3(xip, d);
        if (rho == 0.0) return 0.0;
        for (std::size_t m = 0; m < g.n_shells(); ++m)
            if (std::abs(rho - g.speeds()[m]) <= tube[m]) {
                const double r = g.speeds()[m];
                Vec3 onshell{xip[0] * r / rho, xip[1] * r / rho,
                             xip[2] * r / rho};
                return symbol(y, onshell);
            }
        return 0.0;
    };

    double total = 0.0;
    auto add = [&](const Vec3& eta) {
        const double arg = dot3(eta, eta, d) - 2.0 * dot3(xi, eta, d);
        const double ghat = s.g_hat(eta);
        if (ghat == 0.0) return;
        Vec3 y{x[0] - 2.0 * t * eta[0], x[1] - 2.0 * t * eta[1],
               x[2] - 2.0 * t * eta[2]};
        Vec3 xip{xi[0] - eta[0], xi[1] - eta[1], xi[2] - eta[2]};
        total += ghat * kappa_zeta(arg, zeta) * b_at(y, xip);
    };
    if (d == 1) {
        for (int i = 0; i < n_per_axis; ++i)
            add({-R + (i + 0.5) * step, 0, 0});
        total *= step;
    } else if (d == 2) {
        for (int i = 0; i < n_per_axis; ++i)
            for (int j = 0; j < n_per_axis; ++j)
                add({-R + (i + 0.5) * step, -R + (j + 0.5) * step, 0});
        total *= step * step;
    } else {
        throw std::invalid_argument("oracle restricted to d <= 2");
    }
    return 2.0 * kPi * total;
}

struct MollifierTable {
    std::vector<double> zetas;
    std::vector<double> sup_errors;
    double slope = 0.0; // log-log least squares fit
};

inline double fit_loglog_slope(const std::vector<double>& x,
                               const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// sup over [lo, hi] of |f * kappa^zeta - f| for each zeta, plus the
// fitted log-log slope.
template <class F>
MollifierTable mollifier_convergence_study(const F& f,
                                           const std::vector<double>& zetas,
                                           double support_radius,
                                           double lo = -2.0, double hi = 2.0,
                                           int n_samples = 201) {
    MollifierTable t;
    t.zetas = zetas;
    for (double z : zetas) {
        double sup = 0.0;
        for (int i = 0; i < n_samples; ++i) {
            const double x = lo + (hi - lo) * i / (n_samples - 1);
            const double conv = lorentzian_weighted_integral(
                f, x, z, x - support_radius, x + support_radius);
            sup = std::max(sup, std::abs(conv - f(x)));
        }
        t.sup_errors.push_back(sup);
    }
    if (zetas.size() >= 2) t.slope = fit_loglog_slope(t.zetas, t.sup_errors);
    return t;
}

} // namespace linbolt
