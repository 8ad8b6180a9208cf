#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model_spectra.hpp"
#include "numerics.hpp"

namespace torsionlab {

// Stretching map phi_R: [-eps, eps] -> [-R, R], odd, with phi_R(x) = x near 0 and
// phi_R(x) = x - eps + R near eps.
class StretchProfile {
public:
    struct Value {
        double phi = 0.0, dphi = 0.0;
    };
    struct Decomposition {
        double mu0 = 0.0, mu1 = 0.0;         // dphi = 1 + mu0 + mu1 R
        double lambda0 = 0.0, lambda1 = 0.0, lambda2 = 0.0;
    };

    StretchProfile(double eps, double R) : eps_(eps), R_(R)
    {
        require(eps > 0, "stretch_profile: eps must be positive");
        require(R > 0, "stretch_profile: R must be positive");
    }

    double eps() const { return eps_; }
    double R() const { return R_; }

    Value operator()(double x) const { return eval(x, R_); }

    Decomposition decomposition(double x) const
    {
        require(std::abs(x) <= eps_ * (1 + 1e-12), "stretch_profile: |x| must be at most eps");
        Decomposition d;
        const double d0 = eval(x, 0.0).dphi, d1 = eval(x, 1.0).dphi;
        d.mu0 = d0 - 1.0;
        d.mu1 = d1 - d0;
        d.lambda2 = d.mu1 * d.mu1;
        d.lambda1 = 2.0 * d.mu1 * (1.0 + d.mu0);
        d.lambda0 = d.mu0 * (2.0 + d.mu0); // so that 1 + l0 + l1 R + l2 R^2 = dphi^2
        return d;
    }

private:
    // on [0, eps]; odd extension for x < 0; phi is affine in R
    Value eval(double x, double R) const
    {
        require(std::abs(x) <= eps_ * (1 + 1e-12), "stretch_profile: |x| must be at most eps");
        const double s = x < 0 ? -1.0 : 1.0;
        const double u = std::min(std::abs(x), eps_);
        const double e8 = eps_ / 8.0;
        const auto rho = smooth_step((u - e8) / e8);
        const auto chi = smooth_step((u - 6.0 * e8) / e8);
        const double rho1 = rho.d1 / e8, chi1 = chi.d1 / e8;
        const double gs = (4.0 * R - eps_) / (3.0 * eps_);
        const double g = gs * u - (R - eps_) / 6.0;
        const double h = u * (1.0 - rho.v) + rho.v * g;
        const double dh = (1.0 - rho.v) - u * rho1 + rho1 * g + rho.v * gs;
        const double tail = u - eps_ + R;
        const double phi = h * (1.0 - chi.v) + chi.v * tail;
        const double dphi = dh * (1.0 - chi.v) - h * chi1 + chi1 * tail + chi.v;
        return {s * phi, dphi};
    }

    double eps_, R_;
};

inline StretchProfile stretch_profile(double eps, double R) { return StretchProfile(eps, R); }

struct MetricFactor {
    double lambda0 = 0.0, lambda1 = 0.0, lambda2 = 0.0;
    double total = 1.0; // 1 + lambda0 + lambda1 R + lambda2 R^2
};

inline MetricFactor stretched_metric_factor(const StretchProfile& P, double x)
{
    const auto d = P.decomposition(x);
    const double R = P.R();
    return {d.lambda0, d.lambda1, d.lambda2, 1.0 + d.lambda0 + d.lambda1 * R + d.lambda2 * R * R};
}

// Lattice Hodge Laplacian on the cylinder (twisted lattice circle) x (axial segment or circle).
// The transverse lattice is diagonalised exactly by twisted discrete Fourier modes; the axial
// factor is second-order finite differences, ghost-node reflection for Neumann ends and a
// removed end node for Dirichlet ends.
struct LatticeOperator {
    double L_Y = 1.0;
    int N_Y = 40;
    double alpha = 0.5;
    double mesh = 1.0 / 40; // axial mesh (target)
    double axial_length = 4.0;
    Boundary lo = Boundary::closed, hi = Boundary::closed;

    void validate() const
    {
        require(L_Y > 0 && N_Y >= 3, "lattice: need L_Y > 0 and at least 3 transverse nodes");
        require(mesh > 0 && axial_length > 0, "lattice: mesh and axial length must be positive");
        require((lo == Boundary::closed) == (hi == Boundary::closed), "lattice: closed ends come in pairs");
        require(intervals() >= 3, "lattice: axial segment too short for the mesh");
    }

    int intervals() const { return std::max(1, static_cast<int>(std::lround(axial_length / mesh))); }
    double axial_step() const { return axial_length / intervals(); }
    double transverse_step() const { return L_Y / N_Y; }

    std::vector<double> transverse_eigenvalues() const
    {
        std::vector<double> mu(N_Y);
        const double h = transverse_step();
        for (int k = 0; k < N_Y; ++k) {
            const double s = 2.0 * std::sin(pi * (k + alpha) / N_Y) / h;
            mu[k] = s * s;
        }
        return mu;
    }

    // the component without dx (one) or with dx; absolute: Neumann on one, Dirichlet on dx
    static bool neumann(Boundary b, bool dx) { return (b == Boundary::absolute) != dx; }

    // symmetric axial matrix (trapezoid-weight symmetrisation at Neumann ends)
    Eigen::MatrixXd axial_matrix(bool dx) const
    {
        validate();
        const int n = intervals();
        const double h = axial_step(), c = 1.0 / (h * h);
        if (lo == Boundary::closed) {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                A(i, i) = 2 * c;
                A(i, (i + 1) % n) -= c;
                A((i + 1) % n, i) -= c;
            }
            return A;
        }
        const bool nl = neumann(lo, dx), nh = neumann(hi, dx);
        const int first = nl ? 0 : 1, last = nh ? n : n - 1;
        const int m = last - first + 1;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            A(i, i) = 2 * c;
            if (i + 1 < m) A(i, i + 1) = A(i + 1, i) = -c;
        }
        if (nl) A(0, 1) = A(1, 0) = -std::sqrt(2.0) * c;
        if (nh) A(m - 1, m - 2) = A(m - 2, m - 1) = -std::sqrt(2.0) * c;
        return A;
    }

    std::vector<double> axial_eigenvalues(bool dx) const
    {
        const Eigen::MatrixXd A = axial_matrix(dx);
        Eigen::VectorXd ev;
        if (lo == Boundary::closed) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
            if (es.info() != Eigen::Success) throw numerical_error("lattice: eigensolver failed");
            ev = es.eigenvalues();
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            const Eigen::VectorXd diag = A.diagonal(), sub = A.diagonal(-1);
            es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
            if (es.info() != Eigen::Success) throw numerical_error("lattice: eigensolver failed");
            ev = es.eigenvalues();
        }
        return {ev.data(), ev.data() + ev.size()};
    }

    // components of degree p on a 2-D cylinder: (transverse degree, has dx)
    static std::vector<std::pair<int, bool>> components(int p)
    {
        require(p >= 0 && p <= 2, "lattice: degree must be 0, 1 or 2");
        if (p == 0) return {{0, false}};
        if (p == 1) return {{1, false}, {0, true}};
        return {{1, true}};
    }

    // Kronecker sum per component, block diagonal over components (small grids only)
    Eigen::MatrixXcd assemble(int p) const
    {
        validate();
        const int ny = N_Y;
        const double hy = transverse_step(), cy = 1.0 / (hy * hy);
        Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(ny, ny);
        const std::complex<double> ph = std::polar(1.0, 2 * pi * alpha);
        for (int i = 0; i < ny; ++i) {
            T(i, i) += 2 * cy;
            const std::complex<double> f = (i + 1 == ny) ? ph : 1.0;
            T(i, (i + 1) % ny) += -f * cy;
            T((i + 1) % ny, i) += -std::conj(f) * cy;
        }
        std::vector<Eigen::MatrixXcd> blocks;
        Eigen::Index total = 0;
        for (auto [q, dx] : components(p)) {
            (void)q;
            const Eigen::MatrixXd A = axial_matrix(dx);
            const Eigen::Index na = A.rows();
            Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(ny * na, ny * na);
            for (int i = 0; i < ny; ++i)
                for (int j = 0; j < ny; ++j)
                    if (T(i, j) != 0.0)
                        for (Eigen::Index a = 0; a < na; ++a) B(i * na + a, j * na + a) += T(i, j);
            for (int i = 0; i < ny; ++i) B.block(i * na, i * na, na, na) += A.cast<std::complex<double>>();
            total += B.rows();
            blocks.push_back(std::move(B));
        }
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(total, total);
        Eigen::Index off = 0;
        for (const auto& B : blocks) {
            M.block(off, off, B.rows(), B.cols()) = B;
            off += B.rows();
        }
        return M;
    }

    std::vector<double> eigenvalues(int p) const
    {
        const auto mu = transverse_eigenvalues();
        std::vector<double> out;
        for (auto [q, dx] : components(p)) {
            (void)q;
            for (double a : axial_eigenvalues(dx))
                for (double m : mu) out.push_back(a + m);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    double zero_tolerance() const { return 1e-10 * std::max(1.0, 4.0 / (axial_step() * axial_step())); }

    // Betti number of the model: a transverse zero mode needs an integer twist, an axial one
    // needs a closed axis or Neumann at both ends.
    int expected_betti(int p) const
    {
        const double f = alpha - std::round(alpha);
        if (std::abs(f) > 1e-12) return 0;
        int b = 0;
        for (auto [q, dx] : components(p)) {
            (void)q;
            if (lo == Boundary::closed || (neumann(lo, dx) && neumann(hi, dx))) ++b;
        }
        return b;
    }
};

struct GapScanConfig {
    double L_Y = 1.0;
    int N_Y = 40;
    double alpha = 0.5;
    double mesh = 1.0 / 40;
    Boundary ends = Boundary::closed; // closed: axial circle of length 2R; else absolute left, relative right
    bool allow_integer_twist = false; // the acyclic hypothesis fails for integer twists
};

struct GapReport {
    double R = 0, alpha = 0, mesh = 0;
    int zero_modes = 0;
    double min_positive = 0.0;
    double delta = 0.0;       // realised transverse gap
    double window = 0.0;      // exp(-R sqrt(delta) / 16)
    int window_count = 0;     // eigenvalues in (0, window]
};

inline LatticeOperator gap_scan_operator(const GapScanConfig& cfg, double R)
{
    LatticeOperator op;
    op.L_Y = cfg.L_Y;
    op.N_Y = cfg.N_Y;
    op.alpha = cfg.alpha;
    op.mesh = cfg.mesh;
    op.axial_length = 2.0 * R;
    if (cfg.ends == Boundary::closed) {
        op.lo = op.hi = Boundary::closed;
    } else {
        op.lo = Boundary::absolute;
        op.hi = Boundary::relative;
    }
    return op;
}

inline std::vector<GapReport> gap_scan(const GapScanConfig& cfg, const std::vector<double>& R_grid)
{
    const double f = cfg.alpha - std::round(cfg.alpha);
    if (std::abs(f) < 1e-12 && !cfg.allow_integer_twist)
        throw validation_error("gap_scan: integer twist violates the acyclicity hypothesis on the cross-section");
    for (double R : R_grid) require(R > 0, "gap_scan: R must be positive");
    return parallel_map(R_grid.size(), [&](std::size_t i) {
        const double R = R_grid[i];
        const auto op = gap_scan_operator(cfg, R);
        GapReport r;
        r.R = R;
        r.alpha = cfg.alpha;
        r.mesh = cfg.mesh;
        const double tol = op.zero_tolerance();
        r.delta = std::numeric_limits<double>::infinity();
        for (double m : op.transverse_eigenvalues())
            if (m > tol) r.delta = std::min(r.delta, m);
        r.window = std::exp(-R * std::sqrt(r.delta) / 16.0);
        r.min_positive = std::numeric_limits<double>::infinity();
        for (int p = 0; p <= 2; ++p) {
            const auto ev = op.eigenvalues(p);
            if (!ev.empty() && ev.front() < -tol) throw numerical_error("gap_scan: negative lattice eigenvalue");
            for (double e : ev) {
                if (std::abs(e) <= tol) {
                    ++r.zero_modes;
                    continue;
                }
                r.min_positive = std::min(r.min_positive, e);
                if (e <= r.window) ++r.window_count;
            }
        }
        return r;
    });
}

// Expansion of a section on the cylinder [-R, R] in transverse eigenmodes:
// f_k = a e^{-nu x} + b e^{nu x}, g_k = c e^{-nu x} + d e^{nu x}, nu = sqrt(mu_k - lambda).
struct ModeExpansion {
    std::vector<double> mu;
    std::vector<std::complex<double>> a, b, c, d;
    double lambda = 0.0;

    std::size_t size() const { return mu.size(); }
    void validate() const
    {
        require(!mu.empty(), "mode expansion: no modes");
        require(a.size() == mu.size() && b.size() == mu.size() && c.size() == mu.size() && d.size() == mu.size(),
                "mode expansion: coefficient lengths differ");
        for (double m : mu)
            if (!(lambda < m)) throw validation_error("mode expansion: need lambda < mu_k for every mode");
    }
    double nu(std::size_t k) const { return std::sqrt(mu[k] - lambda); }
    double sigma2(std::size_t k) const
    {
        return std::norm(a[k]) + std::norm(b[k]) + std::norm(c[k]) + std::norm(d[k]);
    }
    // |psi|^2 on the slice {x}, times e^{-log_scale}
    double slice_norm2(double x, double log_scale = 0.0) const
    {
        double s = 0;
        for (std::size_t k = 0; k < size(); ++k) {
            const double em = std::exp(-nu(k) * x - 0.5 * log_scale), ep = std::exp(nu(k) * x - 0.5 * log_scale);
            s += std::norm(a[k] * em + b[k] * ep) + std::norm(c[k] * em + d[k] * ep);
        }
        return s;
    }
    // log of int_{-R}^{R} |psi|^2, closed form, evaluated without overflow
    double log_cylinder_norm2(double R) const
    {
        std::vector<std::pair<double, double>> terms; // (sign, log magnitude)
        for (std::size_t k = 0; k < size(); ++k) {
            const double v = nu(k);
            // sinh(2 R v) / v = e^{2 R v} (1 - e^{-4 R v}) / (2 v)
            const double ls = 2 * R * v + std::log1p(-std::exp(-4 * R * v)) - std::log(2 * v);
            const double w = std::norm(a[k]) + std::norm(b[k]) + std::norm(c[k]) + std::norm(d[k]);
            if (w > 0) terms.push_back({1.0, std::log(w) + ls});
            const double cross = 4 * R * (std::real(a[k] * std::conj(b[k])) + std::real(c[k] * std::conj(d[k])));
            if (cross != 0) terms.push_back({cross > 0 ? 1.0 : -1.0, std::log(std::abs(cross))});
        }
        require(!terms.empty(), "mode expansion: zero expansion");
        double M = -std::numeric_limits<double>::infinity();
        for (auto [sg, l] : terms) M = std::max(M, l);
        double acc = 0;
        for (auto [sg, l] : terms) acc += sg * std::exp(l - M);
        require(acc > 0, "mode expansion: nonpositive norm");
        return M + std::log(acc);
    }
    double cylinder_norm2(double R) const { return std::exp(log_cylinder_norm2(R)); }
};

// Coefficients fixed by the boundary condition at x = 0 on (-inf, 0]: absolute (df/dx = 0,
// g = 0) gives b = a, d = -c; relative (f = 0, dg/dx = 0) gives b = -a, d = c.
inline ModeExpansion boundary_matched(Boundary bc, const std::vector<double>& mu,
                                      const std::vector<std::complex<double>>& a,
                                      const std::vector<std::complex<double>>& c, double lambda = 0.0)
{
    require(bc != Boundary::closed, "boundary_matched: boundary must be absolute or relative");
    ModeExpansion E;
    E.mu = mu;
    E.a = a;
    E.c = c;
    E.lambda = lambda;
    const double s = bc == Boundary::absolute ? 1.0 : -1.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        E.b.push_back(s * a[k]);
        E.d.push_back(-s * c[k]);
    }
    E.validate();
    return E;
}

// Boundary residual of an expansion at x = 0 for the given condition.
inline double boundary_residual(const ModeExpansion& E, Boundary bc)
{
    double r = 0;
    for (std::size_t k = 0; k < E.size(); ++k) {
        const double v = E.nu(k);
        const std::complex<double> f = E.a[k] + E.b[k], df = v * (E.b[k] - E.a[k]);
        const std::complex<double> g = E.c[k] + E.d[k], dg = v * (E.d[k] - E.c[k]);
        r = std::max(r, bc == Boundary::absolute ? std::max(std::abs(df), std::abs(g))
                                                 : std::max(std::abs(f), std::abs(dg)));
    }
    return r;
}

// C0 = inf_{x > 0} (e^x - e^{-x}) / x * e^{-7x/8}
inline double sinh_ratio_constant()
{
    auto q = [](double x) { return 2.0 * std::sinh(x) / x * std::exp(-7.0 * x / 8.0); };
    return golden_minimize(q, 1e-3, 60.0).second;
}

struct DecayReport {
    double R = 0.0, delta = 0.0, lambda = 0.0;
    double C0 = 0.0;
    double normalisation = 1.0;     // factor that brings the cylinder norm to 1
    double weighted_sum = 0.0;      // sum_k e^{(3R/2) nu_k} |sigma_k|^2
    double weighted_bound = 0.0;    // 2 C0^{-1} e^{-R sqrt(delta) / 8}
    double max_slice_norm2 = 0.0;   // max over |x| <= 3R/4 of |psi|^2 on the slice
    double slice_bound = 0.0;       // 4 C0^{-1} e^{-R sqrt(delta) / 8}
    bool implication_holds = true;  // every slice norm <= 2 * weighted_sum
    bool bound_holds = true;        // weighted_sum <= weighted_bound and slices <= slice_bound
};

inline DecayReport cross_section_decay_check(const ModeExpansion& E, double R, const std::vector<double>& x_grid)
{
    E.validate();
    require(R > 0, "cross_section_decay_check: R must be positive");
    DecayReport rep;
    rep.R = R;
    rep.lambda = E.lambda;
    rep.delta = *std::min_element(E.mu.begin(), E.mu.end());
    require(E.lambda < 0.75 * rep.delta, "cross_section_decay_check: need lambda < 3 delta / 4");
    const double L = E.log_cylinder_norm2(R);
    rep.normalisation = std::exp(-0.5 * L);
    rep.C0 = sinh_ratio_constant();
    for (std::size_t k = 0; k < E.size(); ++k) {
        const double w = E.sigma2(k);
        if (w > 0) rep.weighted_sum += std::exp(1.5 * R * E.nu(k) + std::log(w) - L);
    }
    const double decay = std::exp(-R * std::sqrt(rep.delta) / 8.0);
    rep.weighted_bound = 2.0 / rep.C0 * decay;
    rep.slice_bound = 4.0 / rep.C0 * decay;
    for (double x : x_grid) {
        if (std::abs(x) > 0.75 * R) continue;
        const double s = E.slice_norm2(x, L);
        rep.max_slice_norm2 = std::max(rep.max_slice_norm2, s);
        if (s > 2.0 * rep.weighted_sum * (1 + 1e-12)) rep.implication_holds = false;
    }
    rep.bound_holds = rep.weighted_sum <= rep.weighted_bound && rep.max_slice_norm2 <= rep.slice_bound;
    return rep;
}

// Even cutoff on [-1, 1]: 0 for |u| <= 1/4, 1 for |u| >= 1/2.
inline StepValue quasi_cutoff(double u)
{
    const auto s = smooth_step((std::abs(u) - 0.25) / 0.25);
    const double sg = u < 0 ? -1.0 : 1.0;
    return {s.v, sg * s.d1 / 0.25, s.d2 / 0.0625};
}

// Kernel sections on the two half-infinite models, restricted to the cylinder:
// s1 = sum e^{-sqrt(mu_k)(x + R)} (a_k, c_k), s2 = sum e^{sqrt(mu_k)(x - R)} (b_k, d_k).
struct QuasiModeData {
    std::vector<double> mu;
    std::vector<std::complex<double>> a, c, b, d;
};

struct RayleighValue {
    double ratio = 0.0;
    double laplacian_norm = 0.0; // ||Delta(f_R s)|| over the cylinder
    double norm = 0.0;           // ||f_R s|| over the cylinder
};

// ||Delta(f_R s)|| / ||f_R s|| on the cylinder [-R, R]; Delta(f s_i) = -f'' s_i - 2 f' ds_i there.
inline RayleighValue quasi_mode_rayleigh(const QuasiModeData& s, double R, int panels = 16)
{
    require(!s.mu.empty(), "quasi_mode_rayleigh: empty mode data");
    const std::size_t n = s.mu.size();
    require(s.a.size() == n && s.c.size() == n && s.b.size() == n && s.d.size() == n,
            "quasi_mode_rayleigh: coefficient lengths differ");
    require(R > 0, "quasi_mode_rayleigh: R must be positive");
    for (double m : s.mu) require(m > 0, "quasi_mode_rayleigh: transverse eigenvalues must be positive");
    double lap = 0.0, nrm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = std::sqrt(s.mu[k]);
        const double w1 = std::norm(s.a[k]) + std::norm(s.c[k]);
        const double w2 = std::norm(s.b[k]) + std::norm(s.d[k]);
        // left half: e = e^{-v (x + R)}; by symmetry the right half has the same integrals
        auto lap_integrand = [&](double x) {
            const auto f = quasi_cutoff(x / R);
            const double e = std::exp(-v * (x + R));
            const double val = -(f.d2 / (R * R)) * e + 2.0 * (f.d1 / R) * v * e;
            return val * val;
        };
        auto norm_integrand = [&](double x) {
            const auto f = quasi_cutoff(x / R);
            const double e = std::exp(-v * (x + R));
            return f.v * f.v * e * e;
        };
        const double Il = integrate_gl(lap_integrand, -R / 2, -R / 4, panels, 16);
        const double In = integrate_gl(norm_integrand, -R, -R / 4, panels, 16);
        lap += (w1 + w2) * Il;
        nrm += (w1 + w2) * In;
    }
    RayleighValue out;
    out.laplacian_norm = std::sqrt(lap);
    out.norm = std::sqrt(nrm);
    if (lap == 0.0) return out;
    out.ratio = out.laplacian_norm / out.norm;
    return out;
}

// Single-mode closed form of the norm bounds: with c1 = max|f''|^2, c2 = max|f'|^2,
// ||Delta s||^2 <= (2 c1 / R^4 + 4 c2 mu / R^2) e^{-R v} (1 - e^{-R v / 2}) / (2 v) and
// ||s||^2 >= (1 - e^{-R v}) / (2 v), v = sqrt(mu). Returns the square root of their quotient.
inline double quasi_mode_bound(double mu, double R)
{
    require(mu > 0 && R > 0, "quasi_mode_bound: need mu > 0 and R > 0");
    static const std::pair<double, double> c = [] {
        double c1 = 0, c2 = 0;
        for (int i = 0; i <= 200000; ++i) {
            const auto f = quasi_cutoff(-1.0 + 2.0 * i / 200000);
            c1 = std::max(c1, f.d2 * f.d2);
            c2 = std::max(c2, f.d1 * f.d1);
        }
        return std::make_pair(c1, c2);
    }();
    const double v = std::sqrt(mu);
    const double num = (2 * c.first / std::pow(R, 4) + 4 * c.second * mu / (R * R)) * std::exp(-R * v) *
                       (-std::expm1(-R * v / 2)) / (2 * v);
    const double den = -std::expm1(-R * v) / (2 * v);
    return std::sqrt(num / den);
}

struct RayleighScan {
    std::vector<double> R, ratio, bound;
    double rate = 0.0;       // fitted d log(ratio) / dR
    double bound_rate = 0.0; // same fit for the single-mode closed-form bound at the lowest mode
};

inline RayleighScan quasi_mode_scan(const QuasiModeData& s, const std::vector<double>& R_grid)
{
    require(R_grid.size() >= 2, "quasi_mode_scan: need at least two R values");
    RayleighScan out;
    std::vector<double> y, yb;
    const double mu_min = *std::min_element(s.mu.begin(), s.mu.end());
    for (double R : R_grid) {
        const double r = quasi_mode_rayleigh(s, R).ratio;
        require(r > 0, "quasi_mode_scan: ratio vanished");
        out.R.push_back(R);
        out.ratio.push_back(r);
        y.push_back(std::log(r));
        out.bound.push_back(quasi_mode_bound(mu_min, R));
        yb.push_back(std::log(out.bound.back()));
    }
    out.rate = fit_line(out.R, y).slope;
    out.bound_rate = fit_line(out.R, yb).slope;
    return out;
}

} // namespace torsionlab
