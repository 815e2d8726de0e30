#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "linbolt/io.hpp"
#include "linbolt/quadrature.hpp"

namespace linbolt {

using Vec3 = std::array<double, 3>;

inline double dot3(const Vec3& a, const Vec3& b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}
inline double norm3(const Vec3& a, int d) { return std::sqrt(dot3(a, a, d)); }

// Discretization of R^d_x x A_xi[r, r']: a periodic box [0,L)^d with nx
// points per axis, a list of speed shells strictly inside the annulus,
// and one angular rule shared by all shells.  Collisions never couple
// shells (the energy delta is diagonal in |xi|), so the radial direction
// is a plain list.
class PhaseGrid {
  public:
    PhaseGrid(int dim, double box_length, int nx, double r_inner,
              double r_outer, std::vector<double> speeds,
              const SphereRule& angles)
        : dim_(dim),
          box_(box_length),
          nx_(nx),
          r_inner_(r_inner),
          r_outer_(r_outer),
          speeds_(std::move(speeds)),
          angles_(angles) {
        if (dim < 1 || dim > 3)
            throw std::invalid_argument("PhaseGrid: dim must be 1, 2 or 3");
        if (angles_.dim != dim)
            throw std::invalid_argument("PhaseGrid: angular rule dimension");
        if (box_ <= 0.0 || nx_ < 1)
            throw std::invalid_argument("PhaseGrid: bad spatial box");
        if (!(0.0 < r_inner_ && r_inner_ < r_outer_))
            throw std::invalid_argument("PhaseGrid: need 0 < r < r'");
        if (speeds_.empty())
            throw std::invalid_argument("PhaseGrid: no shells");
        for (double r : speeds_)
            if (!(r_inner_ < r && r < r_outer_))
                throw std::invalid_argument(
                    "PhaseGrid: shell speed outside the open annulus");
        if (!std::is_sorted(speeds_.begin(), speeds_.end()))
            throw std::invalid_argument("PhaseGrid: speeds must be sorted");
        double wsum = 0.0;
        for (double w : angles_.weights) {
            if (w <= 0.0)
                throw std::invalid_argument("PhaseGrid: nonpositive weight");
            wsum += w;
        }
        if (std::abs(wsum - sphere_area(dim_)) > 1e-10 * sphere_area(dim_))
            throw std::invalid_argument(
                "PhaseGrid: angular weights do not sum to |S^{d-1}|");

        n_cells_ = 1;
        for (int a = 0; a < dim_; ++a) n_cells_ *= static_cast<std::size_t>(nx_);

        // radial measure factor r^{d-1} dr.  A single shell carries the
        // whole measure (factor 1); several shells get midpoint cells
        // partitioning the annulus.
        shell_measure_.resize(speeds_.size());
        if (speeds_.size() == 1) {
            shell_measure_[0] = 1.0;
        } else {
            std::vector<double> edges(speeds_.size() + 1);
            edges.front() = r_inner_;
            edges.back() = r_outer_;
            for (std::size_t m = 0; m + 1 < speeds_.size(); ++m)
                edges[m + 1] = 0.5 * (speeds_[m] + speeds_[m + 1]);
            for (std::size_t m = 0; m < speeds_.size(); ++m)
                shell_measure_[m] = std::pow(speeds_[m], dim_ - 1) *
                                    (edges[m + 1] - edges[m]);
        }
    }

    int dim() const { return dim_; }
    double box_length() const { return box_; }
    int nx() const { return nx_; }
    double dx() const { return box_ / nx_; }
    double cell_volume() const { return std::pow(dx(), dim_); }
    double r_inner() const { return r_inner_; }
    double r_outer() const { return r_outer_; }
    const std::vector<double>& speeds() const { return speeds_; }
    const SphereRule& angles() const { return angles_; }
    std::size_t n_shells() const { return speeds_.size(); }
    std::size_t n_angles() const { return angles_.nodes.size(); }
    std::size_t n_nodes() const { return n_shells() * n_angles(); }
    std::size_t n_cells() const { return n_cells_; }
    std::size_t size() const { return n_nodes() * n_cells_; }
    double shell_measure(std::size_t m) const { return shell_measure_[m]; }

    std::size_t node_index(std::size_t m, std::size_t j) const {
        return m * n_angles() + j;
    }
    std::size_t index(std::size_t m, std::size_t j, std::size_t cell) const {
        return node_index(m, j) * n_cells_ + cell;
    }

    std::array<double, 3> velocity(std::size_t m, std::size_t j) const {
        auto w = angles_.nodes[j];
        const double r = speeds_[m];
        return {r * w[0], r * w[1], r * w[2]};
    }

    std::array<int, 3> cell_coords(std::size_t cell) const {
        std::array<int, 3> c{0, 0, 0};
        for (int a = dim_ - 1; a >= 0; --a) {
            c[a] = static_cast<int>(cell % nx_);
            cell /= nx_;
        }
        return c;
    }
    std::size_t cell_of(const std::array<int, 3>& c) const {
        std::size_t cell = 0;
        for (int a = 0; a < dim_; ++a)
            cell = cell * nx_ + static_cast<std::size_t>(
                                    ((c[a] % nx_) + nx_) % nx_);
        return cell;
    }
    std::array<double, 3> position(std::size_t cell) const {
        auto c = cell_coords(cell);
        return {c[0] * dx(), c[1] * dx(), c[2] * dx()};
    }

    // weight of one (m, j, cell) sample in the phase-space integral
    double sample_weight(std::size_t m, std::size_t j) const {
        return cell_volume() * shell_measure_[m] * angles_.weights[j];
    }

    // The paper's observables live on all of R^d_x; our box stands in for
    // it.  Sufficient condition that transport over `time` never wraps a
    // support of radius `support_radius` into itself.
    bool no_wrap(double support_radius, double time) const {
        return support_radius + 2.0 * std::abs(time) * r_outer_ <
               0.5 * box_;
    }
    void assert_no_wrap(double support_radius, double time) const {
        if (!no_wrap(support_radius, time))
            throw std::invalid_argument(
                "PhaseGrid: transport would wrap the declared support");
    }

    bool compatible(const PhaseGrid& o) const {
        return dim_ == o.dim_ && nx_ == o.nx_ && box_ == o.box_ &&
               speeds_ == o.speeds_ &&
               angles_.nodes.size() == o.angles_.nodes.size();
    }

    std::string to_json() const {
        JsonWriter w;
        w.begin_object();
        w.key("dimension"); w.value(dim_);
        w.key("box_length"); w.value(box_);
        w.key("nx"); w.value(nx_);
        w.key("r_inner"); w.value(r_inner_);
        w.key("r_outer"); w.value(r_outer_);
        w.key("speeds"); w.value(speeds_);
        w.key("shell_measures"); w.value(shell_measure_);
        w.key("angular_nodes");
        w.begin_array();
        for (const auto& n : angles_.nodes) {
            w.begin_array();
            for (int a = 0; a < dim_; ++a) w.value(n[a]);
            w.end_array();
        }
        w.end_array();
        w.key("angular_weights"); w.value(angles_.weights);
        w.end_object();
        return w.str();
    }

  private:
    int dim_;
    double box_;
    int nx_;
    double r_inner_, r_outer_;
    std::vector<double> speeds_;
    SphereRule angles_;
    std::size_t n_cells_ = 0;
    std::vector<double> shell_measure_;
};

namespace detail {
struct GridField {
    const PhaseGrid* grid = nullptr;
    std::vector<double> v;

    GridField() = default;
    explicit GridField(const PhaseGrid& g) : grid(&g), v(g.size(), 0.0) {}

    double& at(std::size_t m, std::size_t j, std::size_t cell) {
        return v[grid->index(m, j, cell)];
    }
    double at(std::size_t m, std::size_t j, std::size_t cell) const {
        return v[grid->index(m, j, cell)];
    }
    // contiguous block of one (m, j) node over all spatial cells
    double* node(std::size_t m, std::size_t j) {
        return v.data() + grid->node_index(m, j) * grid->n_cells();
    }
    const double* node(std::size_t m, std::size_t j) const {
        return v.data() + grid->node_index(m, j) * grid->n_cells();
    }
};
} // namespace detail

// Test symbol b(x, xi): real, with a compact xi-support mask per node.
struct DualObservable : detail::GridField {
    std::vector<std::uint8_t> xi_mask; // per (m, j) node; 1 = inside support

    DualObservable() = default;
    explicit DualObservable(const PhaseGrid& g)
        : detail::GridField(g), xi_mask(g.n_nodes(), 1) {}

    template <class F> // F(x[3], xi[3]) -> double
    static DualObservable sample(const PhaseGrid& g, F&& f) {
        DualObservable b(g);
        for (std::size_t m = 0; m < g.n_shells(); ++m)
            for (std::size_t j = 0; j < g.n_angles(); ++j) {
                const auto xi = g.velocity(m, j);
                double* blk = b.node(m, j);
                for (std::size_t c = 0; c < g.n_cells(); ++c)
                    blk[c] = f(g.position(c), xi);
            }
        return b;
    }

    bool mask_consistent() const {
        for (std::size_t n = 0; n < grid->n_nodes(); ++n) {
            if (xi_mask[n]) continue;
            const double* blk = v.data() + n * grid->n_cells();
            for (std::size_t c = 0; c < grid->n_cells(); ++c)
                if (blk[c] != 0.0) return false;
        }
        return true;
    }
};

// Nonnegative weights mu(x_i, r_m, w_j) on the same grid.
struct PhaseMeasure : detail::GridField {
    PhaseMeasure() = default;
    explicit PhaseMeasure(const PhaseGrid& g) : detail::GridField(g) {}

    double mass() const {
        long double s = 0.0L;
        for (std::size_t m = 0; m < grid->n_shells(); ++m)
            for (std::size_t j = 0; j < grid->n_angles(); ++j) {
                const double w = grid->sample_weight(m, j);
                const double* blk = node(m, j);
                long double acc = 0.0L;
                for (std::size_t c = 0; c < grid->n_cells(); ++c)
                    acc += blk[c];
                s += acc * w;
            }
        return static_cast<double>(s);
    }
    double min_value() const {
        double mn = v.empty() ? 0.0 : v[0];
        for (double x : v) mn = std::min(mn, x);
        return mn;
    }
    // mass restricted to shell m (the per-shell energy marginal)
    double shell_mass(std::size_t m) const {
        long double s = 0.0L;
        for (std::size_t j = 0; j < grid->n_angles(); ++j) {
            const double w = grid->sample_weight(m, j);
            const double* blk = node(m, j);
            long double acc = 0.0L;
            for (std::size_t c = 0; c < grid->n_cells(); ++c) acc += blk[c];
            s += acc * w;
        }
        return static_cast<double>(s);
    }
    void normalize() {
        const double ms = mass();
        if (ms <= 0.0) throw std::runtime_error("PhaseMeasure: mass <= 0");
        for (double& x : v) x /= ms;
    }
};

// quadrature of the semiclassical pairing  integral b d(mu)
inline double pair(const PhaseMeasure& mu, const DualObservable& b) {
    if (!mu.grid || !b.grid || !mu.grid->compatible(*b.grid))
        throw std::invalid_argument("pair: grid mismatch");
    const PhaseGrid& g = *mu.grid;
    long double s = 0.0L;
    for (std::size_t m = 0; m < g.n_shells(); ++m)
        for (std::size_t j = 0; j < g.n_angles(); ++j) {
            const double w = g.sample_weight(m, j);
            const double* bm = b.node(m, j);
            const double* mm = mu.node(m, j);
            long double acc = 0.0L;
            for (std::size_t c = 0; c < g.n_cells(); ++c) acc += bm[c] * mm[c];
            s += acc * w;
        }
    return static_cast<double>(s);
}

namespace detail {
// 4th-order centered first derivative with periodic wrap along one
// direction; `axis` in [0, dim) differentiates in x, axis == dim is the
// angular parameter (equispaced d=2 rule only).
inline DualObservable directional_derivative(const DualObservable& b,
                                             int axis) {
    const PhaseGrid& g = *b.grid;
    DualObservable out(g);
    out.xi_mask = b.xi_mask;
    if (axis < g.dim()) {
        const double h = g.dx();
        const int n = g.nx();
        // stride of one step along `axis` in the row-major cell layout
        std::size_t stride = 1;
        for (int a = g.dim() - 1; a > axis; --a) stride *= n;
        const std::size_t block = stride * static_cast<std::size_t>(n);
        for (std::size_t nd = 0; nd < g.n_nodes(); ++nd) {
            const double* src = b.v.data() + nd * g.n_cells();
            double* dst = out.v.data() + nd * g.n_cells();
            for (std::size_t c = 0; c < g.n_cells(); ++c) {
                const std::size_t base = (c / block) * block;
                const std::size_t off = c - base;
                const auto wrap = [&](long step) {
                    long idx = static_cast<long>(off) +
                               step * static_cast<long>(stride);
                    const long bl = static_cast<long>(block);
                    idx = ((idx % bl) + bl) % bl;
                    return base + static_cast<std::size_t>(idx);
                };
                dst[c] = (-src[wrap(2)] + 8.0 * src[wrap(1)] -
                          8.0 * src[wrap(-1)] + src[wrap(-2)]) /
                         (12.0 * h);
            }
        }
    } else {
        if (g.dim() != 2)
            throw std::invalid_argument(
                "angular derivative available for d = 2 only");
        const std::size_t J = g.n_angles();
        const double h = 2.0 * kPi / static_cast<double>(J);
        for (std::size_t m = 0; m < g.n_shells(); ++m)
            for (std::size_t j = 0; j < J; ++j) {
                const auto nb = [&](long s) {
                    const long jj = (static_cast<long>(j) + s +
                                     4 * static_cast<long>(J)) %
                                    static_cast<long>(J);
                    return b.node(m, static_cast<std::size_t>(jj));
                };
                const double *p2 = nb(2), *p1 = nb(1), *m1 = nb(-1),
                             *m2 = nb(-2);
                double* dst = out.node(m, j);
                for (std::size_t c = 0; c < g.n_cells(); ++c)
                    dst[c] = (-p2[c] + 8.0 * p1[c] - 8.0 * m1[c] + m2[c]) /
                             (12.0 * h);
            }
    }
    return out;
}

inline double grid_sup(const DualObservable& b) {
    double s = 0.0;
    for (double x : b.v) s = std::max(s, std::abs(x));
    return s;
}

inline double max_derivative_sup(const DualObservable& b, int order,
                                 int n_dirs) {
    if (order == 0) return grid_sup(b);
    double best = 0.0;
    for (int a = 0; a < n_dirs; ++a) {
        DualObservable d = directional_derivative(b, a);
        best = std::max(best, max_derivative_sup(d, order - 1, n_dirs));
    }
    return best;
}
} // namespace detail

// N_n(b) = max over |alpha| <= n of sup |d^alpha b|, with derivatives taken
// by 4th-order centered differences along the spatial axes (plus the
// angular parameter in d = 2, where the nodes are equispaced).  Orders
// above 4 are rejected: repeated finite differencing is noise past that.
inline double sup_norm(const DualObservable& b, int n) {
    if (n < 0) throw std::invalid_argument("sup_norm: n < 0");
    if (n > 4)
        throw std::invalid_argument(
            "sup_norm: derivative order > 4 not supported");
    const PhaseGrid& g = *b.grid;
    const int n_dirs = g.dim() + (g.dim() == 2 ? 1 : 0);
    double best = detail::grid_sup(b);
    for (int order = 1; order <= n; ++order)
        best = std::max(best, detail::max_derivative_sup(b, order, n_dirs));
    return best;
}

} // namespace linbolt
