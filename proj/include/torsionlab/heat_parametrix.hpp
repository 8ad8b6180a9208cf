#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model_spectra.hpp"
#include "numerics.hpp"

namespace torsionlab {

// Kernel values on the (1 (x) 1*, dx (x) dx*) components.
struct ComponentPair {
    double one = 0.0;
    double dx = 0.0;
    ComponentPair& operator+=(const ComponentPair& o)
    {
        one += o.one;
        dx += o.dx;
        return *this;
    }
    friend ComponentPair operator*(double a, const ComponentPair& p) { return {a * p.one, a * p.dx}; }
    friend ComponentPair operator+(ComponentPair a, const ComponentPair& b) { return a += b; }
    friend ComponentPair operator-(const ComponentPair& a, const ComponentPair& b) { return {a.one - b.one, a.dx - b.dx}; }
};

inline double gaussian_kernel(double t, double y) { return std::exp(-y * y / (4.0 * t)) / std::sqrt(4.0 * pi * t); }
inline double gaussian_kernel_dy(double t, double y) { return -y / (2.0 * t) * gaussian_kernel(t, y); }

inline ComponentPair kernel_line(double t, double u, double v)
{
    require(t > 0, "kernel_line: t must be positive");
    const double g = gaussian_kernel(t, u - v);
    return {g, g};
}

// Heat kernel on [0, inf) with Dirichlet (sign -1) or Neumann (sign +1) condition.
inline double kernel_halfline_scalar(double t, double u, double v, bool dirichlet)
{
    require(t > 0, "kernel_halfline: t must be positive");
    require(u >= 0 && v >= 0, "kernel_halfline: arguments must lie in [0, inf)");
    return gaussian_kernel(t, u - v) + (dirichlet ? -1.0 : 1.0) * gaussian_kernel(t, u + v);
}

// Absolute pair on (-inf, 0] (Neumann on 1, Dirichlet on dx); relative pair on [0, inf) (the swap).
inline ComponentPair kernel_halfline(double t, double u, double v, Boundary bc)
{
    require(t > 0, "kernel_halfline: t must be positive");
    require(bc != Boundary::closed, "kernel_halfline: boundary must be absolute or relative");
    if (bc == Boundary::absolute) {
        require(u <= 0 && v <= 0, "kernel_halfline: absolute kernel lives on (-inf, 0]");
        return {kernel_halfline_scalar(t, -u, -v, false), kernel_halfline_scalar(t, -u, -v, true)};
    }
    require(u >= 0 && v >= 0, "kernel_halfline: relative kernel lives on [0, inf)");
    return {kernel_halfline_scalar(t, u, v, true), kernel_halfline_scalar(t, u, v, false)};
}

// A 1-D kernel on the line, a half-line, or an interval, per component. Each wall has a
// reflection sign per component: +1 Neumann, -1 Dirichlet.
struct Kernel1D {
    enum class Kind { line, halfline_dirichlet, halfline_neumann, abs_pair, rel_pair, interval };
    Kind kind = Kind::line;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    ComponentPair r_lo{1, 1}, r_hi{1, 1};

    static Kernel1D line() { return {}; }
    // half-line [wall, inf) (side > 0) or (-inf, wall] (side < 0)
    static Kernel1D halfline(Kind kind, double wall = 0.0, int side = 1)
    {
        Kernel1D k;
        k.kind = kind;
        ComponentPair r;
        switch (kind) {
        case Kind::halfline_dirichlet: r = {-1, -1}; break;
        case Kind::halfline_neumann: r = {1, 1}; break;
        case Kind::abs_pair: r = {1, -1}; break;
        case Kind::rel_pair: r = {-1, 1}; break;
        default: throw validation_error("Kernel1D: not a half-line kind");
        }
        if (side > 0) {
            k.lo = wall;
            k.r_lo = r;
        } else {
            k.hi = wall;
            k.r_hi = r;
        }
        return k;
    }
    static Kernel1D interval(double a, double b, ComponentPair ra, ComponentPair rb)
    {
        require(b > a, "Kernel1D: interval must have positive length");
        Kernel1D k;
        k.kind = Kind::interval;
        k.lo = a;
        k.hi = b;
        k.r_lo = ra;
        k.r_hi = rb;
        return k;
    }

    bool contains(double u) const { return u >= lo - 1e-12 && u <= hi + 1e-12; }

    // value (deriv = false) or d/du (deriv = true)
    ComponentPair eval(double t, double u, double v, bool deriv = false) const
    {
        require(t > 0, "Kernel1D: t must be positive");
        if (!contains(u) || !contains(v)) throw validation_error("Kernel1D: argument outside the domain");
        auto G = [&](double y) { return deriv ? gaussian_kernel_dy(t, y) : gaussian_kernel(t, y); };
        const bool has_lo = std::isfinite(lo), has_hi = std::isfinite(hi);
        if (!has_lo && !has_hi) {
            const double g = G(u - v);
            return {g, g};
        }
        if (has_lo != has_hi) {
            const double w = has_lo ? lo : hi;
            const ComponentPair r = has_lo ? r_lo : r_hi;
            const double g0 = G(u - v), g1 = G(u + v - 2.0 * w);
            return {g0 + r.one * g1, g0 + r.dx * g1};
        }
        // interval: images x' + 2 n l with (ra rb)^|n|, reflected ones with ra (ra rb)^|n|
        const double l = hi - lo, x = u - lo, xp = v - lo;
        const long N = static_cast<long>(std::ceil(std::sqrt(4.0 * t * 46.0) / (2.0 * l))) + 2;
        ComponentPair s;
        for (long n = -N; n <= N; ++n) {
            const double g0 = G(x - xp - 2.0 * n * l), g1 = G(x + xp - 2.0 * n * l);
            const long an = n < 0 ? -n : n;
            const double p1 = (an % 2 && r_lo.one * r_hi.one < 0) ? -1.0 : 1.0;
            const double pd = (an % 2 && r_lo.dx * r_hi.dx < 0) ? -1.0 : 1.0;
            s.one += p1 * (g0 + r_lo.one * g1);
            s.dx += pd * (g0 + r_lo.dx * g1);
        }
        return s;
    }
};

// Tensor product with a transverse spectrum in its mode basis: diagonal in the modes.
struct ModeKernelValue {
    std::complex<double> one, dx;
};

// Product heat kernel e^{-t Delta_Y} (x) e^{-t d^2}; Y modes enumerated from degree `q` of Y.
// Point form: Y a circle of length L_Y, modes exp(2 pi i (k + alpha) y / L_Y) / sqrt(L_Y).
inline ModeKernelValue product_kernel_circle(double L_Y, double alpha, const Kernel1D& axial, double t, double y, double u,
                                             double yp, double v, double tail_tol = 1e-14)
{
    require(L_Y > 0 && t > 0, "product_kernel: need L_Y > 0 and t > 0");
    const double a = 2.0 * pi / L_Y;
    // modes with exp(-t mu) below tail_tol are dropped
    const double kmax = std::sqrt(-std::log(tail_tol) / t) / a + 2.0;
    std::complex<double> sum = 0.0;
    const long c = static_cast<long>(std::floor(-alpha));
    for (long k = c - static_cast<long>(kmax); k <= c + static_cast<long>(kmax) + 1; ++k) {
        const double mu = std::pow(a * (k + alpha), 2);
        sum += std::exp(-t * mu) * std::polar(1.0 / L_Y, a * (k + alpha) * (y - yp));
    }
    const auto ax = axial.eval(t, u, v);
    return {sum * ax.one, sum * ax.dx};
}

// Y-trace of the product kernel on the diagonal: (sum_k exp(-t mu_k)) times the axial diagonal.
inline ComponentPair product_kernel_trace(const SpectrumFamily& Y, int q, const Kernel1D& axial, double t, double u)
{
    HeatExpansion E;
    const auto Yq = Y.degree(q);
    E.add(Yq, [](int) { return 1.0; });
    const double tr = E.evaluate(t).v;
    return tr * axial.eval(t, u, u);
}

// Cutoff rho(a, d)(v) = S((|v| - a) / (d - a)) in the variable x, with v = x / R.
struct CutoffValue {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
};

inline CutoffValue cutoff_rho(double a, double d, double R, double x)
{
    require(d > a && a >= 0 && R > 0, "cutoff: need d > a >= 0 and R > 0");
    const double w = R * (d - a);
    const double y = (std::abs(x) / R - a) / (d - a);
    const auto s = smooth_step(y);
    const double sg = x >= 0 ? 1.0 : -1.0;
    return {s.v, sg * s.d1 / w, s.d2 / (w * w)};
}

enum class CutoffName { phi1, psi1, phi2, psi2 };

// The four cutoffs on Z_R: defined through rho on the collar [-R, R] and extended by
// 0 (phi1, psi1) or 1 (phi2, psi2) outside it.
inline CutoffValue collar_cutoff(CutoffName which, double R, double x)
{
    const bool inside = std::abs(x) <= R;
    switch (which) {
    case CutoffName::phi1: {
        if (!inside) return {0, 0, 0};
        auto r = cutoff_rho(5.0 / 7, 6.0 / 7, R, x);
        return {1 - r.v, -r.d1, -r.d2};
    }
    case CutoffName::psi1: {
        if (!inside) return {0, 0, 0};
        auto r = cutoff_rho(3.0 / 7, 4.0 / 7, R, x);
        return {1 - r.v, -r.d1, -r.d2};
    }
    case CutoffName::phi2:
        if (!inside) return {1, 0, 0};
        return cutoff_rho(1.0 / 7, 2.0 / 7, R, x);
    case CutoffName::psi2:
        if (!inside) return {1, 0, 0};
        return cutoff_rho(3.0 / 7, 4.0 / 7, R, x);
    }
    return {};
}

enum class Piece { whole, absolute_piece, relative_piece };

inline std::string piece_name(Piece p)
{
    return p == Piece::whole ? "whole" : (p == Piece::absolute_piece ? "absolute" : "relative");
}

// Axial model: Z_R = [-R - c, R + c] with an absolute end on the left and a relative end on
// the right; the cut is at 0. The absolute piece is [-R - c, 0], the relative piece [0, R + c].
class AxialParametrix {
public:
    AxialParametrix(double R, Piece piece = Piece::whole, double c = 1.0) : R_(R), c_(c), piece_(piece)
    {
        require(R > 0, "parametrix: R must be positive");
        require(c > 0, "parametrix: end margin must be positive");
        const ComponentPair abs{1, -1}, rel{-1, 1};
        switch (piece) {
        case Piece::whole:
            true_ = Kernel1D::interval(-R - c, R + c, abs, rel);
            model_ = Kernel1D::line();
            break;
        case Piece::absolute_piece:
            true_ = Kernel1D::interval(-R - c, 0.0, abs, abs);
            model_ = Kernel1D::halfline(Kernel1D::Kind::abs_pair, 0.0, -1);
            break;
        case Piece::relative_piece:
            true_ = Kernel1D::interval(0.0, R + c, rel, rel);
            model_ = Kernel1D::halfline(Kernel1D::Kind::rel_pair, 0.0, 1);
            break;
        }
    }

    double R() const { return R_; }
    Piece piece() const { return piece_; }
    double left() const { return true_.lo; }
    double right() const { return true_.hi; }
    const Kernel1D& true_kernel() const { return true_; }
    const Kernel1D& model_kernel() const { return model_; }

    ComponentPair heat_kernel(double t, double x, double xp) const { return true_.eval(t, x, xp); }

    ComponentPair parametrix(double t, double x, double xp) const
    {
        const auto p1 = collar_cutoff(CutoffName::phi1, R_, x), q1 = collar_cutoff(CutoffName::psi1, R_, xp);
        const auto p2 = collar_cutoff(CutoffName::phi2, R_, x), q2 = collar_cutoff(CutoffName::psi2, R_, xp);
        ComponentPair out;
        if (p1.v != 0 && q1.v != 0) out += (p1.v * q1.v) * model_.eval(t, x, xp);
        if (p2.v != 0 && q2.v != 0) out += (p2.v * q2.v) * true_.eval(t, x, xp);
        return out;
    }

    // C = -phi1'' E psi1 - 2 phi1' dE psi1 - phi2'' K psi2 - 2 phi2' dK psi2
    ComponentPair error_term(double t, double x, double xp) const
    {
        const auto p1 = collar_cutoff(CutoffName::phi1, R_, x), q1 = collar_cutoff(CutoffName::psi1, R_, xp);
        const auto p2 = collar_cutoff(CutoffName::phi2, R_, x), q2 = collar_cutoff(CutoffName::psi2, R_, xp);
        ComponentPair out;
        if ((p1.d1 != 0 || p1.d2 != 0) && q1.v != 0) {
            const auto E = model_.eval(t, x, xp), dE = model_.eval(t, x, xp, true);
            out += (-p1.d2 * q1.v) * E;
            out += (-2.0 * p1.d1 * q1.v) * dE;
        }
        if ((p2.d1 != 0 || p2.d2 != 0) && q2.v != 0) {
            const auto K = true_.eval(t, x, xp), dK = true_.eval(t, x, xp, true);
            out += (-p2.d2 * q2.v) * K;
            out += (-2.0 * p2.d1 * q2.v) * dK;
        }
        return out;
    }

    // x-support of the error term: the bands where phi1 or phi2 vary, clipped to the piece.
    std::vector<std::pair<double, double>> error_bands() const
    {
        std::vector<std::pair<double, double>> raw = {{-6 * R_ / 7, -5 * R_ / 7}, {-2 * R_ / 7, -R_ / 7},
                                                      {R_ / 7, 2 * R_ / 7},       {5 * R_ / 7, 6 * R_ / 7}};
        std::vector<std::pair<double, double>> out;
        for (auto [a, b] : raw) {
            a = std::max(a, left());
            b = std::min(b, right());
            if (b > a) out.emplace_back(a, b);
        }
        return out;
    }

    // (K * C)(t, x, x') = int_0^t int K(t - s, x, z) C(s, z, x') dz ds, with s = (t/2)(1 + tanh sigma).
    // C(s, ., x') is O(exp(-(R/7)^2 / 4s)) so sigma starts where that falls below exp(-50); past
    // sigma_max the s-integrand is replaced by its limit C(t, x, x').
    ComponentPair convolution(double t, double x, double xp, int s_nodes = 64, double sigma_max = 10.0,
                              int band_panels = 8) const
    {
        require(t > 0, "convolution: t must be positive");
        const QuadRule& qs = gauss_legendre(s_nodes);
        const QuadRule& qz = gauss_legendre(16);
        const auto bands = error_bands();
        const double d = R_ / 7.0, s_min = d * d / 200.0;
        const double sig_lo = std::max(-sigma_max, 0.5 * std::log(s_min / t));
        const double sig_hi = sigma_max;
        const double smid = 0.5 * (sig_lo + sig_hi), shalf = 0.5 * (sig_hi - sig_lo);
        ComponentPair total = (t / (1.0 + std::exp(2.0 * sig_hi))) * error_term(t, x, xp);
        for (int i = 0; i < s_nodes; ++i) {
            const double sig = smid + shalf * qs.x[i];
            // t - s and s without cancellation
            const double tau = t / (1.0 + std::exp(2.0 * sig));
            const double sv = t / (1.0 + std::exp(-2.0 * sig));
            if (tau <= 0.0 || sv <= 0.0) continue;
            const double jac = shalf * qs.w[i] * 0.5 * t / std::pow(std::cosh(sig), 2);
            const double width = std::sqrt(tau);
            const double reach = std::sqrt(200.0 * tau); // exp(-50) cut on the Gaussian factor
            ComponentPair inner;
            for (auto [a, b] : bands) {
                // only z near x contributes when tau is small
                const double za = std::max(a, x - reach), zb = std::min(b, x + reach);
                if (zb <= za) continue;
                std::vector<double> br = {za, zb};
                for (int k = -8; k <= 8; ++k) {
                    const double p = x + k * width;
                    if (p > za && p < zb) br.push_back(p);
                }
                std::sort(br.begin(), br.end());
                // at least band_panels panels per band
                std::vector<double> br2;
                for (std::size_t j = 0; j + 1 < br.size(); ++j) {
                    const int m = std::max(1, static_cast<int>(std::ceil(band_panels * (br[j + 1] - br[j]) / (zb - za))));
                    for (int q = 0; q < m; ++q) br2.push_back(br[j] + (br[j + 1] - br[j]) * q / m);
                }
                br2.push_back(zb);
                for (std::size_t j = 0; j + 1 < br2.size(); ++j) {
                    const double lo = br2[j], hi = br2[j + 1], mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
                    for (int n = 0; n < 16; ++n) {
                        const double z = mid + half * qz.x[n];
                        const auto K = true_.eval(tau, x, z);
                        const auto C = error_term(sv, z, xp);
                        inner.one += half * qz.w[n] * K.one * C.one;
                        inner.dx += half * qz.w[n] * K.dx * C.dx;
                    }
                }
            }
            total += jac * inner;
        }
        return total;
    }

private:
    double R_, c_;
    Piece piece_;
    Kernel1D true_, model_;
};

struct ParametrixSample {
    double R = 0, t = 0, x = 0, xp = 0;
    ComponentPair true_kernel, parametrix, error, residual;
};

struct ParametrixReport {
    std::vector<ParametrixSample> samples;
    double max_residual = 0.0;
    double max_diagonal_error = 0.0;       // max |C(t, x, x)|
    bool support_ok = true;                // C vanishes outside the bands and for d(x, x') < R/7
    std::vector<double> R_values, t_values;
    std::vector<double> sup_kernel_error;  // sup_x |K(t,x,x) - Q(t,x,x)| per (R, t)
    std::vector<double> sup_error_term;    // sup |C| over its support per (R, t)
    double slope_kernel_error = 0.0;       // fitted d log(sup error) / d(R^2 / t)
    double slope_error_term = 0.0;
};

struct ParametrixScanOptions {
    Piece piece = Piece::whole;
    int s_nodes = 64;
    int diag_points = 401;
    bool duhamel = true;
    std::vector<double> sample_fractions = {-0.8, -0.45, -0.15, 0.3, 0.65}; // x / R
};

inline double component_max_abs(const ComponentPair& p) { return std::max(std::abs(p.one), std::abs(p.dx)); }

inline ParametrixReport parametrix_error_scan(const std::vector<double>& R_grid, const std::vector<double>& t_grid,
                                              const ParametrixScanOptions& opt = {})
{
    require(!R_grid.empty() && !t_grid.empty(), "parametrix_error_scan: grids must be nonempty");
    for (double R : R_grid) require(R >= 1, "parametrix_error_scan: R must be at least 1");
    for (double t : t_grid) require(t > 0, "parametrix_error_scan: t must be positive");
    ParametrixReport rep;
    struct Job {
        double R, t;
    };
    std::vector<Job> jobs;
    for (double R : R_grid)
        for (double t : t_grid) jobs.push_back({R, t});

    struct JobOut {
        std::vector<ParametrixSample> samples;
        double sup_kq = 0, sup_c = 0, diag = 0, resid = 0;
        bool support = true;
    };
    auto results = parallel_map(jobs.size(), [&](std::size_t j) {
        const auto [R, t] = jobs[j];
        AxialParametrix P(R, opt.piece);
        JobOut o;
        const double a = P.left(), b = P.right();
        // diagonal: exact zero of C and sup |K - Q|
        for (int i = 0; i < opt.diag_points; ++i) {
            const double x = a + (b - a) * i / (opt.diag_points - 1);
            o.diag = std::max(o.diag, component_max_abs(P.error_term(t, x, x)));
            o.sup_kq = std::max(o.sup_kq, component_max_abs(P.heat_kernel(t, x, x) - P.parametrix(t, x, x)));
        }
        // support of C over an (x, x') grid
        const int n = 161;
        const auto bands = P.error_bands();
        for (int i = 0; i < n; ++i) {
            const double x = a + (b - a) * i / (n - 1);
            bool in_band = false;
            for (auto [lo, hi] : bands) in_band = in_band || (x >= lo - 1e-12 && x <= hi + 1e-12);
            for (int k = 0; k < n; ++k) {
                const double xp = a + (b - a) * k / (n - 1);
                const double c = component_max_abs(P.error_term(t, x, xp));
                o.sup_c = std::max(o.sup_c, c);
                if (c != 0.0 && (!in_band || std::abs(x - xp) < R / 7 - 1e-12)) o.support = false;
            }
        }
        if (opt.duhamel) {
            for (double fx : opt.sample_fractions)
                for (double fp : opt.sample_fractions) {
                    const double x = fx * R, xp = fp * R;
                    if (x < a || x > b || xp < a || xp > b) continue;
                    ParametrixSample s;
                    s.R = R;
                    s.t = t;
                    s.x = x;
                    s.xp = xp;
                    s.true_kernel = P.heat_kernel(t, x, xp);
                    s.parametrix = P.parametrix(t, x, xp);
                    s.error = P.error_term(t, x, xp);
                    const auto conv = P.convolution(t, x, xp, opt.s_nodes);
                    s.residual = s.true_kernel - (s.parametrix - conv);
                    o.resid = std::max(o.resid, component_max_abs(s.residual));
                    o.samples.push_back(s);
                }
        }
        return o;
    });
    std::vector<double> xs, ykq, yc;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& o = results[j];
        rep.samples.insert(rep.samples.end(), o.samples.begin(), o.samples.end());
        rep.max_residual = std::max(rep.max_residual, o.resid);
        rep.max_diagonal_error = std::max(rep.max_diagonal_error, o.diag);
        rep.support_ok = rep.support_ok && o.support;
        rep.R_values.push_back(jobs[j].R);
        rep.t_values.push_back(jobs[j].t);
        rep.sup_kernel_error.push_back(o.sup_kq);
        rep.sup_error_term.push_back(o.sup_c);
        const double r2t = jobs[j].R * jobs[j].R / jobs[j].t;
        if (o.sup_kq > 0) {
            xs.push_back(r2t);
            ykq.push_back(std::log(o.sup_kq));
        }
        if (o.sup_c > 0) yc.push_back(std::log(o.sup_c));
    }
    if (xs.size() >= 2) rep.slope_kernel_error = fit_line(xs, ykq).slope;
    if (yc.size() == jobs.size() && jobs.size() >= 2) {
        std::vector<double> x2;
        for (const auto& jb : jobs) x2.push_back(jb.R * jb.R / jb.t);
        rep.slope_error_term = fit_line(x2, yc).slope;
    }
    return rep;
}

// Difference kernel on the collar diagonal: line kernel minus the absolute kernel on x < 0
// and the relative kernel on x > 0.
inline ComponentPair difference_kernel(double t, double x)
{
    const auto full = kernel_line(t, x, x);
    if (x < 0) return full - kernel_halfline(t, x, x, Boundary::absolute);
    return full - kernel_halfline(t, x, x, Boundary::relative);
}

struct CancellationResult {
    double value = 0.0;         // int psi tr_s[(N/2) E_dif] with transverse traces
    double one_component = 0.0; // int psi tr|_1 e_dif
    double dx_component = 0.0;  // int psi tr|_dx e_dif
};

// The integral is evaluated over mirrored Gauss-Legendre pairs: int_{-R}^{R} f = int_0^R f(x) + f(-x).
inline CancellationResult cancellation_integral(double R, double t, const std::function<double(double)>& psi,
                                                const SpectrumFamily& Y, int panels = 32)
{
    require(R > 0 && t > 0, "cancellation_integral: need R > 0 and t > 0");
    CancellationResult out;
    const QuadRule& q = gauss_legendre(16);
    std::vector<double> one, dx;
    for (int p = 0; p < panels; ++p) {
        const double lo = R * p / panels, hi = R * (p + 1) / panels, mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int i = 0; i < 16; ++i) {
            const double x = mid + half * q.x[i];
            const auto ep = difference_kernel(t, x), em = difference_kernel(t, -x);
            const double w = half * q.w[i];
            one.push_back(w * (psi(x) * ep.one + psi(-x) * em.one));
            dx.push_back(w * (psi(x) * ep.dx + psi(-x) * em.dx));
        }
    }
    out.one_component = pairwise_sum(one);
    out.dx_component = pairwise_sum(dx);
    // sum_p (-1)^p (p/2) [tr_Y^p I_1 + tr_Y^{p-1} I_dx]
    std::vector<double> trY(Y.top_degree + 1, 0.0);
    for (int qd = 0; qd <= Y.top_degree; ++qd) {
        HeatExpansion E;
        E.add(Y.degree(qd), [](int) { return 1.0; });
        trY[qd] = E.evaluate(t).v;
    }
    std::vector<double> terms;
    for (int p = 0; p <= Y.top_degree + 1; ++p) {
        const double w = ((p % 2) ? -1.0 : 1.0) * 0.5 * p;
        if (p <= Y.top_degree) terms.push_back(w * trY[p] * out.one_component);
        if (p >= 1) terms.push_back(w * trY[p - 1] * out.dx_component);
    }
    out.value = pairwise_sum(terms);
    return out;
}

// Comparison of the whole-model and absolute-piece kernels on the diagonal at distance r
// from the cut (x = -r); returns |K_Z - K_1| (max over components).
inline double kernel_comparison(double R, double t, double r)
{
    AxialParametrix W(R, Piece::whole), A(R, Piece::absolute_piece);
    require(r > 0 && r <= R, "kernel_comparison: need 0 < r <= R");
    return component_max_abs(W.heat_kernel(t, -r, -r) - A.heat_kernel(t, -r, -r));
}

} // namespace torsionlab
