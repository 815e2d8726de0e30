#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "linbolt/fft.hpp"
#include "linbolt/grid.hpp"

namespace linbolt {

// Periodic position grid for the dense quantum routes (d = 1 or 2).
// Coordinates are the signed FFT lattice x_a = freq(a) * dx, so wave
// packets live in a centered box [-L/2, L/2)^d; the dual momentum lattice
// is xi_k = freq(k) * 2 pi / L.
struct QuantumGrid {
    int dim = 1;
    int n = 0;
    double length = 0.0;

    QuantumGrid(int d, int npts, double box) : dim(d), n(npts), length(box) {
        if (d < 1 || d > 2)
            throw std::invalid_argument("QuantumGrid: dense routes are d<=2");
        if (npts < 2 || box <= 0.0)
            throw std::invalid_argument("QuantumGrid: bad grid");
    }
    double dx() const { return length / n; }
    double dxi() const { return 2.0 * kPi / length; }
    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n);
        return s;
    }
    std::array<int, 2> coords(std::size_t idx) const {
        std::array<int, 2> c{0, 0};
        for (int a = dim - 1; a >= 0; --a) {
            c[a] = static_cast<int>(idx % n);
            idx /= n;
        }
        return c;
    }
    std::size_t index(const std::array<int, 2>& c) const {
        std::size_t idx = 0;
        for (int a = 0; a < dim; ++a)
            idx = idx * n + static_cast<std::size_t>(((c[a] % n) + n) % n);
        return idx;
    }
    Vec3 position(std::size_t idx) const {
        auto c = coords(idx);
        return {fft_freq_index(c[0], n) * dx(),
                dim > 1 ? fft_freq_index(c[1], n) * dx() : 0.0, 0.0};
    }
    Vec3 momentum(std::size_t idx) const {
        auto c = coords(idx);
        return {fft_freq_index(c[0], n) * dxi(),
                dim > 1 ? fft_freq_index(c[1], n) * dxi() : 0.0, 0.0};
    }
};

struct SymplecticPoint {
    Vec3 x{0, 0, 0};
    Vec3 xi{0, 0, 0};
};

inline double symplectic_form(const SymplecticPoint& a,
                              const SymplecticPoint& b, int d) {
    return dot3(a.xi, b.x, d) - dot3(a.x, b.xi, d);
}

// Complex Hermitian state matrix on the grid basis (plain l^2 vectors).
struct DensityMatrix {
    Eigen::MatrixXcd rho;

    static DensityMatrix pure(const Eigen::VectorXcd& psi) {
        DensityMatrix d;
        d.rho = psi * psi.adjoint();
        return d;
    }
    double trace() const { return rho.trace().real(); }
    void validate() const {
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::runtime_error("DensityMatrix: not Hermitian");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::runtime_error("DensityMatrix: negative eigenvalue");
        const double tr = trace();
        if (tr < 0.0 || tr > 1.0 + 1e-12)
            throw std::runtime_error("DensityMatrix: trace outside [0, 1]");
    }
};

// Phase-space symbol samples on a product of signed FFT lattices:
// `dim` x-axes of step x_step followed by `dim` xi-axes of step xi_step.
// The symplectic transform maps this grid onto its dual lattice
// (x_step' = 2 pi / (n xi_step), xi_step' = 2 pi / (n x_step)); applying
// it twice returns to the original grid, realizing F^sigma as an exact
// grid involution.
struct Symbol {
    int dim = 1;
    int n = 0;
    double x_step = 0.0;
    double xi_step = 0.0;
    std::vector<cplx> values; // row-major over (x axes..., xi axes...)

    Symbol() = default;
    Symbol(int d, int npts, double xs, double xis)
        : dim(d), n(npts), x_step(xs), xi_step(xis) {
        if (d < 1 || d > 2) throw std::invalid_argument("Symbol: dim");
        std::size_t s = 1;
        for (int a = 0; a < 2 * d; ++a) s *= static_cast<std::size_t>(n);
        values.assign(s, cplx(0.0));
    }

    int axes() const { return 2 * dim; }
    std::size_t size() const { return values.size(); }

    double coord(int axis, int idx) const {
        const double step = axis < dim ? x_step : xi_step;
        return fft_freq_index(idx, n) * step;
    }

    template <class F> // F(x: Vec3, xi: Vec3) -> cplx-convertible
    static Symbol sample(int d, int npts, double xs, double xis, F&& f) {
        Symbol s(d, npts, xs, xis);
        std::vector<int> c(static_cast<std::size_t>(2 * d), 0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            std::size_t rem = i;
            for (int a = 2 * d - 1; a >= 0; --a) {
                c[a] = static_cast<int>(rem % npts);
                rem /= npts;
            }
            Vec3 x{s.coord(0, c[0]), d > 1 ? s.coord(1, c[1]) : 0.0, 0.0};
            Vec3 xi{s.coord(d, c[d]), d > 1 ? s.coord(d + 1, c[d + 1]) : 0.0,
                    0.0};
            s.values[i] = f(x, xi);
        }
        return s;
    }
};

namespace detail {
// in-place 1-D FFTs along one axis of a row-major hypercube
inline void fft_axis(std::vector<cplx>& v, int n, int n_axes, int axis,
                     bool forward) {
    Fft fft({n});
    std::size_t stride = 1;
    for (int a = n_axes - 1; a > axis; --a)
        stride *= static_cast<std::size_t>(n);
    const std::size_t block = stride * static_cast<std::size_t>(n);
    std::vector<cplx> line(static_cast<std::size_t>(n));
    for (std::size_t base = 0; base < v.size(); base += block)
        for (std::size_t off = 0; off < stride; ++off) {
            for (int i = 0; i < n; ++i)
                line[static_cast<std::size_t>(i)] =
                    v[base + off + static_cast<std::size_t>(i) * stride];
            if (forward)
                fft.forward(line);
            else
                fft.backward(line);
            for (int i = 0; i < n; ++i)
                v[base + off + static_cast<std::size_t>(i) * stride] =
                    line[static_cast<std::size_t>(i)];
        }
}
} // namespace detail

// F^sigma b(P) = int exp(-i sigma(P, X')) b(X') dX' / (2 pi)^d: a forward
// transform x -> p_xi paired with a backward transform xi -> p_x.
inline Symbol symplectic_fourier(const Symbol& b) {
    Symbol tmp = b;
    // x axes carry e^{-i p_xi . x} (forward), xi axes e^{+i p_x . xi}
    // (backward); afterwards the old x axes index p_xi and the old xi
    // axes index p_x, so the two axis blocks are swapped back into the
    // (x-like, xi-like) layout.
    for (int a = 0; a < b.dim; ++a)
        detail::fft_axis(tmp.values, b.n, b.axes(), a, /*forward=*/true);
    for (int a = b.dim; a < 2 * b.dim; ++a)
        detail::fft_axis(tmp.values, b.n, b.axes(), a, /*forward=*/false);
    const double cell = b.x_step * b.xi_step / (2.0 * kPi);
    double scale = 1.0;
    for (int a = 0; a < b.dim; ++a) scale *= cell;

    Symbol out(b.dim, b.n, 2.0 * kPi / (b.n * b.xi_step),
               2.0 * kPi / (b.n * b.x_step));
    const int d = b.dim;
    std::vector<int> c(static_cast<std::size_t>(2 * d), 0);
    for (std::size_t i = 0; i < tmp.values.size(); ++i) {
        std::size_t rem = i;
        for (int a = 2 * d - 1; a >= 0; --a) {
            c[a] = static_cast<int>(rem % b.n);
            rem /= b.n;
        }
        // tmp layout is (p_xi block, p_x block); out wants (p_x, p_xi)
        std::size_t j = 0;
        for (int a = 0; a < d; ++a)
            j = j * b.n + static_cast<std::size_t>(c[d + a]);
        for (int a = 0; a < d; ++a)
            j = j * b.n + static_cast<std::size_t>(c[a]);
        out.values[j] = tmp.values[i] * scale;
    }
    return out;
}

// unitary matrix of tau^h_P = exp(i (p_xi . h x - p_x . D_x)) on the grid;
// p_x must sit on the spatial lattice and h p_xi on the momentum lattice
inline Eigen::MatrixXcd tau_op(const QuantumGrid& g, const SymplecticPoint& P,
                               double h) {
    if (h <= 0.0) throw std::invalid_argument("tau_op: h <= 0");
    std::array<int, 2> sx{0, 0}, sk{0, 0};
    for (int a = 0; a < g.dim; ++a) {
        const double rx = P.x[a] / g.dx();
        const double rk = h * P.xi[a] / g.dxi();
        sx[a] = static_cast<int>(std::lround(rx));
        sk[a] = static_cast<int>(std::lround(rk));
        if (std::abs(rx - sx[a]) > 1e-9 || std::abs(rk - sk[a]) > 1e-9)
            throw std::invalid_argument(
                "tau_op: incommensurate phase-space point");
    }
    const std::size_t N = g.size();
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(N, N);
    const double half_phase = -0.5 * h * dot3(P.xi, P.x, g.dim);
    for (std::size_t a = 0; a < N; ++a) {
        const Vec3 xa = g.position(a);
        auto c = g.coords(a);
        std::array<int, 2> cb{0, 0};
        for (int ax = 0; ax < g.dim; ++ax) cb[ax] = c[ax] - sx[ax];
        const std::size_t bidx = g.index(cb);
        const double ph = half_phase + h * dot3(P.xi, xa, g.dim);
        T(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(bidx)) =
            std::polar(1.0, ph);
    }
    return T;
}

// dense Weyl quantization b^W(h x, D_x) by midpoint-symbol quadrature
template <class F> // F(y: Vec3, xi: Vec3) -> double or cplx
Eigen::MatrixXcd weyl_quantize(const QuantumGrid& g, double h, F&& symbol) {
    const std::size_t N = g.size();
    Eigen::MatrixXcd B(N, N);
    const double scale = 1.0 / static_cast<double>(N);
    const double L = g.length;
    auto wrap = [L](double d) {
        while (d > 0.5 * L) d -= L;
        while (d <= -0.5 * L) d += L;
        return d;
    };
    for (std::size_t a = 0; a < N; ++a) {
        const Vec3 xa = g.position(a);
        for (std::size_t b = 0; b < N; ++b) {
            const Vec3 xb = g.position(b);
            // midpoint along the short periodic geodesic; the phase is
            // insensitive to the wrap since xi_k L is a multiple of 2 pi.
            // A difference of exactly L/2 has two geodesics; averaging
            // their midpoints keeps the kernel exchange symmetric.
            Vec3 diff{wrap(xa[0] - xb[0]),
                      g.dim > 1 ? wrap(xa[1] - xb[1]) : 0.0, 0.0};
            std::array<std::array<double, 2>, 2> mids{}; // per axis
            std::array<int, 2> nmid{1, 1};
            for (int ax = 0; ax < g.dim; ++ax) {
                mids[ax][0] = h * (xb[ax] + 0.5 * diff[ax]);
                if (std::abs(std::abs(diff[ax]) - 0.5 * L) < 1e-12 * L) {
                    mids[ax][1] = h * (xb[ax] - 0.5 * diff[ax]);
                    nmid[ax] = 2;
                }
            }
            cplx acc = 0.0;
            for (std::size_t k = 0; k < N; ++k) {
                const Vec3 xi = g.momentum(k);
                double sym = 0.0;
                for (int i0 = 0; i0 < nmid[0]; ++i0)
                    for (int i1 = 0; i1 < nmid[1]; ++i1)
                        sym += symbol(
                            Vec3{mids[0][i0],
                                 g.dim > 1 ? mids[1][i1] : 0.0, 0.0},
                            xi);
                sym /= nmid[0] * nmid[1];
                acc += cplx(sym) * std::polar(1.0, dot3(xi, diff, g.dim));
            }
            B(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                acc * scale;
        }
    }
    return B;
}

// sample a symbol on the commensurate measurement grid of (g, h):
// x-axis step h dx (the macroscopic box h L), xi-axis the momentum lattice
template <class F>
Symbol sample_measurement_symbol(const QuantumGrid& g, double h, F&& f) {
    return Symbol::sample(g.dim, g.n, h * g.dx(), g.dxi(),
                          std::forward<F>(f));
}

// m_h(b, rho) = Tr[b^W(hx, D_x) rho], dense route
template <class F>
double measure_observable(const QuantumGrid& g, double h, F&& symbol,
                          const DensityMatrix& rho) {
    Eigen::MatrixXcd B = weyl_quantize(g, h, std::forward<F>(symbol));
    return (B * rho.rho).trace().real();
}

// superposition route: m_h = sum_P F^sigma b(P) Tr[tau^h_P rho] dP over
// the commensurate P-lattice (cell measure (dx * dxi / h) / (2 pi) per
// axis); tau contracts to one phase-and-shift per lattice point
inline double measure_observable_superposition(const QuantumGrid& g, double h,
                                               const Symbol& b,
                                               const DensityMatrix& rho,
                                               double* imag_residue = nullptr) {
    if (b.dim != g.dim || b.n != g.n)
        throw std::invalid_argument("superposition: symbol grid mismatch");
    if (std::abs(b.x_step - h * g.dx()) > 1e-12 ||
        std::abs(b.xi_step - g.dxi()) > 1e-12)
        throw std::invalid_argument(
            "superposition: symbol grid is not the measurement grid");
    Symbol fb = symplectic_fourier(b);
    // P-lattice: p_x on the spatial lattice, p_xi on the momentum
    // lattice divided by h
    const std::size_t N = g.size();
    cplx total = 0.0;
    double cell = 1.0;
    for (int a = 0; a < g.dim; ++a) cell *= fb.x_step * fb.xi_step / (2.0 * kPi);
    std::vector<int> c(static_cast<std::size_t>(2 * g.dim), 0);
    for (std::size_t ip = 0; ip < fb.size(); ++ip) {
        std::size_t rem = ip;
        for (int a = 2 * g.dim - 1; a >= 0; --a) {
            c[a] = static_cast<int>(rem % g.n);
            rem /= g.n;
        }
        SymplecticPoint P;
        for (int a = 0; a < g.dim; ++a) {
            P.x[a] = fb.coord(a, c[a]);
            P.xi[a] = fb.coord(g.dim + a, c[g.dim + a]);
        }
        // Tr[tau_P rho] without forming the matrix
        std::array<int, 2> sx{0, 0};
        for (int a = 0; a < g.dim; ++a)
            sx[a] = fft_freq_index(c[a], g.n); // p_x = sx * dx
        const double half_phase = -0.5 * h * dot3(P.xi, P.x, g.dim);
        cplx tr = 0.0;
        for (std::size_t aa = 0; aa < N; ++aa) {
            auto cc = g.coords(aa);
            std::array<int, 2> cb{0, 0};
            for (int ax = 0; ax < g.dim; ++ax) cb[ax] = cc[ax] - sx[ax];
            const std::size_t bidx = g.index(cb);
            const double ph =
                half_phase + h * dot3(P.xi, g.position(aa), g.dim);
            tr += std::polar(1.0, ph) *
                  rho.rho(static_cast<Eigen::Index>(bidx),
                          static_cast<Eigen::Index>(aa));
        }
        total += fb.values[ip] * tr;
    }
    total *= cell;
    if (imag_residue) *imag_residue = std::abs(total.imag());
    return total.real();
}

} // namespace linbolt
