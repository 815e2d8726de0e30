#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linbolt/grid.hpp"
#include "linbolt/io.hpp"
#include "linbolt/quadrature.hpp"

namespace linbolt {

// Covariance profile G_hat = |V_hat|^2.  The default is a Gaussian bump;
// anything even, nonnegative and rapidly decaying can be plugged in.
struct CovarianceProfile {
    std::function<double(const Vec3&, int)> g_hat;
    double cutoff_radius = 0.0; // g_hat negligible beyond this |eta|
    std::string name = "custom";
    double g0 = 0.0, ell = 0.0; // meaningful for the gaussian profile

    static CovarianceProfile gaussian(double g0, double ell,
                                      double cutoff_sigmas = 8.0) {
        if (g0 < 0.0 || ell <= 0.0)
            throw std::invalid_argument("gaussian profile: bad parameters");
        CovarianceProfile p;
        p.g_hat = [g0, ell](const Vec3& eta, int d) {
            return g0 * std::exp(-dot3(eta, eta, d) / (2.0 * ell * ell));
        };
        p.cutoff_radius = cutoff_sigmas * ell;
        p.name = "gaussian";
        p.g0 = g0;
        p.ell = ell;
        return p;
    }

    double l1_norm(int d) const {
        if (name == "gaussian")
            return g0 * std::pow(std::sqrt(2.0 * kPi) * ell, d);
        // generic: tensor Gauss over the cutoff box
        Quad1d q = gauss_legendre(96, -cutoff_radius, cutoff_radius);
        double s = 0.0;
        if (d == 1) {
            for (std::size_t i = 0; i < q.nodes.size(); ++i)
                s += q.weights[i] * g_hat({q.nodes[i], 0, 0}, 1);
        } else if (d == 2) {
            for (std::size_t i = 0; i < q.nodes.size(); ++i)
                for (std::size_t j = 0; j < q.nodes.size(); ++j)
                    s += q.weights[i] * q.weights[j] *
                         g_hat({q.nodes[i], q.nodes[j], 0}, 2);
        } else {
            for (std::size_t i = 0; i < q.nodes.size(); ++i)
                for (std::size_t j = 0; j < q.nodes.size(); ++j)
                    for (std::size_t k = 0; k < q.nodes.size(); ++k)
                        s += q.weights[i] * q.weights[j] * q.weights[k] *
                             g_hat({q.nodes[i], q.nodes[j], q.nodes[k]}, 3);
        }
        return s;
    }
};

// Lorentzian mollifier kappa^zeta(r) = (1/pi) zeta / (r^2 + zeta^2)
inline double kappa_zeta(double r, double zeta) {
    if (zeta <= 0.0) throw std::invalid_argument("kappa_zeta: zeta <= 0");
    return (1.0 / kPi) * zeta / (r * r + zeta * zeta);
}

// Scattering rate, per-shell collision matrices and loss rates for a
// phase grid.  sigma(xi, xi') = 2 pi G_hat(xi' - xi); the energy-shell
// delta is reduced analytically, leaving the coarea factor r^{d-2}/2 in
// front of the sphere rule.
class ScatteringData {
  public:
    ScatteringData(const PhaseGrid& grid, CovarianceProfile profile)
        : grid_(&grid), profile_(std::move(profile)) {
        const int d = grid.dim();
        const std::size_t M = grid.n_shells(), J = grid.n_angles();
        shell_.resize(M);
        loss_.resize(M);
        gain_.resize(M);
        for (std::size_t m = 0; m < M; ++m) {
            const double r = grid.speeds()[m];
            Eigen::MatrixXd& S = shell_[m];
            S.resize(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J));
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t k = 0; k < J; ++k)
                    S(j, k) = sigma(grid.velocity(m, j), grid.velocity(m, k));
            const double coarea = 0.5 * std::pow(r, d - 2);
            Eigen::MatrixXd& G = gain_[m];
            G.resize(S.rows(), S.cols());
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t k = 0; k < J; ++k)
                    G(j, k) = coarea * grid.angles().weights[k] * S(j, k);
            loss_[m] = G.rowwise().sum();
        }
    }

    const PhaseGrid& grid() const { return *grid_; }
    const CovarianceProfile& profile() const { return profile_; }

    double g_hat(const Vec3& eta) const {
        return profile_.g_hat(eta, grid_->dim());
    }
    double v_hat(const Vec3& eta) const {
        return std::sqrt(std::max(0.0, g_hat(eta)));
    }

    double sigma(const Vec3& xi, const Vec3& xip) const {
        Vec3 diff{xip[0] - xi[0], xip[1] - xi[1], xip[2] - xi[2]};
        return 2.0 * kPi * profile_.g_hat(diff, grid_->dim());
    }

    // Sigma^{(m)}_{jk} = sigma(r_m w_j, r_m w_k)
    const Eigen::MatrixXd& shell_matrix(std::size_t m) const {
        return shell_[m];
    }
    // gain matrix (r^{d-2}/2) w_k Sigma_{jk}; row sums are the loss rates
    const Eigen::MatrixXd& gain_matrix(std::size_t m) const {
        return gain_[m];
    }
    const Eigen::VectorXd& loss_rates(std::size_t m) const { return loss_[m]; }
    double loss_rate(std::size_t m, std::size_t j) const {
        return loss_[m](static_cast<Eigen::Index>(j));
    }

    // dual collision generator Q^{(m)} = gain - diag(loss)
    Eigen::MatrixXd generator(std::size_t m) const {
        Eigen::MatrixXd Q = gain_[m];
        Q.diagonal() -= loss_[m];
        return Q;
    }
    // weighted adjoint W^{-1} Q^T W, the measure-level generator
    Eigen::MatrixXd primal_generator(std::size_t m) const {
        const auto& w = grid_->angles().weights;
        Eigen::MatrixXd Q = generator(m);
        Eigen::MatrixXd P(Q.rows(), Q.cols());
        for (Eigen::Index k = 0; k < Q.rows(); ++k)
            for (Eigen::Index j = 0; j < Q.cols(); ++j)
                P(k, j) = Q(j, k) * w[static_cast<std::size_t>(j)] /
                          w[static_cast<std::size_t>(k)];
        return P;
    }

    std::string to_json() const {
        JsonWriter w;
        w.begin_object();
        w.key("profile"); w.value(profile_.name);
        w.key("g0"); w.value(profile_.g0);
        w.key("ell"); w.value(profile_.ell);
        w.key("cutoff_radius"); w.value(profile_.cutoff_radius);
        w.key("shells");
        w.begin_array();
        for (std::size_t m = 0; m < shell_.size(); ++m) {
            w.begin_object();
            w.key("speed"); w.value(grid_->speeds()[m]);
            w.key("sigma_row_major");
            w.begin_array();
            for (Eigen::Index j = 0; j < shell_[m].rows(); ++j)
                for (Eigen::Index k = 0; k < shell_[m].cols(); ++k)
                    w.value(shell_[m](j, k));
            w.end_array();
            w.key("loss_rates");
            std::vector<double> lr(loss_[m].data(),
                                   loss_[m].data() + loss_[m].size());
            w.value(lr);
            w.end_object();
        }
        w.end_array();
        w.end_object();
        return w.str();
    }

  private:
    const PhaseGrid* grid_;
    CovarianceProfile profile_;
    std::vector<Eigen::MatrixXd> shell_;
    std::vector<Eigen::MatrixXd> gain_;
    std::vector<Eigen::VectorXd> loss_;
};

// Total scattering rate c(xi) = 2 pi (|xi|^{d-2}/2) * sphere average of
// G_hat(xi + |xi| w), evaluated with a dedicated fine rule (independent
// of any PhaseGrid rule).
inline double total_rate(const CovarianceProfile& prof, const Vec3& xi, int d,
                         int n_sphere = 256) {
    const double r = norm3(xi, d);
    if (r <= 0.0) throw std::invalid_argument("total_rate: |xi| = 0");
    SphereRule rule = SphereRule::make(d, n_sphere, d == 3 ? 2 * n_sphere : 0);
    double s = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const auto& w = rule.nodes[j];
        Vec3 arg{xi[0] + r * w[0], xi[1] + r * w[1], xi[2] + r * w[2]};
        s += rule.weights[j] * prof.g_hat(arg, d);
    }
    return 2.0 * kPi * 0.5 * std::pow(r, d - 2) * s;
}

struct CZetaOptions {
    int n_sphere = 64;        // angular nodes (polar count in d = 3)
    int nodes_per_panel = 16; // radial Gauss nodes per graded panel
    bool self_check = false;  // re-run at doubled resolution
    double tolerance = 1e-8;  // declared accuracy when self-checking
};

struct CZetaResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

namespace detail {
inline double c_zeta_once(const CovarianceProfile& prof, const Vec3& xi,
                          int d, double zeta, int n_sphere,
                          int nodes_per_panel) {
    // polar coordinates centered at xi: eta = xi + rho * w turns the
    // Lorentzian argument into rho^2 - |xi|^2, handled by the graded rule
    const double rxi = norm3(xi, d);
    const double rho_max = rxi + prof.cutoff_radius;
    SphereRule rule =
        SphereRule::make(d, n_sphere, d == 3 ? 2 * n_sphere : 0);
    double total = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const auto& w = rule.nodes[j];
        auto radial = [&](double u) { // u = rho^2
            const double rho = std::sqrt(std::max(0.0, u));
            Vec3 eta{xi[0] + rho * w[0], xi[1] + rho * w[1],
                     xi[2] + rho * w[2]};
            return 0.5 * std::pow(u, 0.5 * (d - 2)) * prof.g_hat(eta, d);
        };
        total += rule.weights[j] *
                 lorentzian_weighted_integral(radial, rxi * rxi, zeta, 0.0,
                                              rho_max * rho_max,
                                              nodes_per_panel);
    }
    return 2.0 * kPi * total;
}
} // namespace detail

// Mollified rate c^zeta(xi) = 2 pi * integral of G_hat(eta)
// kappa^zeta(eta^2 - 2 xi . eta) d eta.
inline CZetaResult c_zeta(const CovarianceProfile& prof, const Vec3& xi,
                          int d, double zeta, CZetaOptions opt = {}) {
    if (zeta <= 0.0) throw std::invalid_argument("c_zeta: zeta <= 0");
    CZetaResult r;
    r.value = detail::c_zeta_once(prof, xi, d, zeta, opt.n_sphere,
                                  opt.nodes_per_panel);
    if (opt.self_check) {
        const double fine = detail::c_zeta_once(
            prof, xi, d, zeta, 2 * opt.n_sphere, 2 * opt.nodes_per_panel);
        r.error_estimate = std::abs(fine - r.value);
        r.value = fine;
        r.converged = r.error_estimate <= opt.tolerance;
        if (!r.converged)
            throw std::runtime_error(
                "c_zeta: quadrature self-check failed, error estimate " +
                format_double(r.error_estimate));
    }
    return r;
}

// Cross-check route: polar around the origin with an adaptive radial
// rule.  Used as an oracle against the graded-panel evaluation.
inline double c_zeta_polar_origin(const CovarianceProfile& prof,
                                  const Vec3& xi, int d, double zeta,
                                  int n_sphere = 256, double tol = 1e-11) {
    SphereRule rule =
        SphereRule::make(d, n_sphere, d == 3 ? 2 * n_sphere : 0);
    const double rho_max = norm3(xi, d) * 2.0 + prof.cutoff_radius;
    double total = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const auto& w = rule.nodes[j];
        auto f = [&](double rho) {
            Vec3 eta{rho * w[0], rho * w[1], rho * w[2]};
            const double arg =
                rho * rho - 2.0 * rho * dot3(xi, rule.nodes[j], d);
            return std::pow(rho, d - 1) * prof.g_hat(eta, d) *
                   kappa_zeta(arg, zeta);
        };
        total += rule.weights[j] * adaptive_simpson(f, 0.0, rho_max, tol);
    }
    return 2.0 * kPi * total;
}

// The spec's plain tensor-Gauss evaluation; accurate only while zeta is
// comparable to the node spacing, kept as a second cross-check.
inline double c_zeta_tensor(const CovarianceProfile& prof, const Vec3& xi,
                            int d, double zeta, int n_per_axis = 64) {
    const double R = prof.cutoff_radius;
    Quad1d q = gauss_legendre(n_per_axis, -R, R);
    double s = 0.0;
    auto term = [&](const Vec3& eta, double w) {
        const double arg =
            dot3(eta, eta, d) - 2.0 * dot3(xi, eta, d);
        s += w * prof.g_hat(eta, d) * kappa_zeta(arg, zeta);
    };
    if (d == 1) {
        for (std::size_t i = 0; i < q.nodes.size(); ++i)
            term({q.nodes[i], 0, 0}, q.weights[i]);
    } else if (d == 2) {
        for (std::size_t i = 0; i < q.nodes.size(); ++i)
            for (std::size_t j = 0; j < q.nodes.size(); ++j)
                term({q.nodes[i], q.nodes[j], 0},
                     q.weights[i] * q.weights[j]);
    } else {
        for (std::size_t i = 0; i < q.nodes.size(); ++i)
            for (std::size_t j = 0; j < q.nodes.size(); ++j)
                for (std::size_t k = 0; k < q.nodes.size(); ++k)
                    term({q.nodes[i], q.nodes[j], q.nodes[k]},
                         q.weights[i] * q.weights[j] * q.weights[k]);
    }
    return 2.0 * kPi * s;
}

} // namespace linbolt
