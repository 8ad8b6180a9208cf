#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace torsionlab {

enum class Boundary { closed, absolute, relative };

inline std::string boundary_name(Boundary b)
{
    return b == Boundary::closed ? "closed" : (b == Boundary::absolute ? "absolute" : "relative");
}

// One index of an arithmetic family: values (a (k + alpha))^2 over k in Z, or k >= k0.
struct IndexRange {
    double a = 1.0;
    double alpha = 0.0;
    bool two_sided = true;
    int k0 = 0;
};

// Eigenvalues beta + sum_i (a_i (k_i + alpha_i))^2, each with multiplicity mult.
struct ArithmeticFamily {
    int degree = 0;
    double beta = 0.0;
    std::vector<IndexRange> idx;
    int mult = 1;
};

struct ExceptionalEigenvalue {
    int degree = 0;
    double value = 0.0;
    int mult = 1;
};

struct SpectrumFamily {
    std::string label;
    Boundary bc = Boundary::closed;
    int top_degree = 0;
    std::vector<ArithmeticFamily> families;
    std::vector<ExceptionalEigenvalue> exceptional;

    SpectrumFamily degree(int p) const
    {
        SpectrumFamily out = *this;
        out.families.clear();
        out.exceptional.clear();
        for (const auto& f : families)
            if (f.degree == p) out.families.push_back(f);
        for (const auto& e : exceptional)
            if (e.degree == p) out.exceptional.push_back(e);
        return out;
    }
};

namespace detail {

inline double frac_mod1(double a)
{
    double r = a - std::floor(a);
    if (r >= 1.0) r = 0.0;
    return r;
}

inline bool near_integer(double a, double tol = 1e-13) { return std::abs(a - std::round(a)) < tol; }

// Number of indices in the range with k + alpha = 0 (0 or 1).
inline int index_zero_count(const IndexRange& r)
{
    if (!near_integer(r.alpha)) return 0;
    const long k = -std::lround(r.alpha);
    return (r.two_sided || k >= r.k0) ? 1 : 0;
}

// Smallest positive value of (a (k + alpha))^2 over the range.
inline double index_min_positive(const IndexRange& r)
{
    double best = std::numeric_limits<double>::infinity();
    const long c = static_cast<long>(std::floor(-r.alpha));
    for (long k = c - 2; k <= c + 3; ++k) {
        if (!r.two_sided && k < r.k0) continue;
        const double v = r.a * (k + r.alpha);
        if (std::abs(k + r.alpha) > 1e-13) best = std::min(best, v * v);
    }
    if (!r.two_sided && r.k0 > c + 3) best = std::pow(r.a * (r.k0 + r.alpha), 2);
    return best;
}

// Direct sum over the range of exp(-s v) and -v exp(-s v), optionally skipping the zero index.
struct ThetaValue {
    double v = 0.0;  // sum exp(-s lambda)
    double dv = 0.0; // d/ds
};

inline ThetaValue index_theta_direct(const IndexRange& r, double s, bool skip_zero, long max_terms = 10000000)
{
    ThetaValue out;
    const double a2s = r.a * r.a * s;
    // terms with (k + alpha)^2 a^2 s > 745 underflow
    const double span = std::sqrt(760.0 / a2s) + 2.0;
    if (span > static_cast<double>(max_terms))
        throw numerical_error("theta sum needs more than " + std::to_string(max_terms) +
                              " terms; increase the truncation K or use a larger time");
    const long c = static_cast<long>(std::floor(-r.alpha));
    long lo = r.two_sided ? c - static_cast<long>(span) : std::max<long>(r.k0, c - static_cast<long>(span));
    long hi = c + static_cast<long>(span) + 1;
    if (!r.two_sided && hi < r.k0) return out;
    std::vector<double> tv, tdv;
    for (long k = lo; k <= hi; ++k) {
        const double x = k + r.alpha;
        if (skip_zero && std::abs(x) < 1e-13) continue;
        const double lam = r.a * r.a * x * x;
        const double e = std::exp(-s * lam);
        tv.push_back(e);
        tdv.push_back(-lam * e);
    }
    out.v = pairwise_sum(tv);
    out.dv = pairwise_sum(tdv);
    return out;
}

// Poisson-side data of the two-sided theta: Theta = pref (1 + E).
struct PoissonValue {
    double pref = 0.0, E = 0.0, dpref = 0.0, dE = 0.0;
};

inline PoissonValue poisson_theta(double a, double alpha, double s)
{
    PoissonValue p;
    p.pref = std::sqrt(pi) / (a * std::sqrt(s));
    p.dpref = -0.5 * p.pref / s;
    const double c = pi * pi / (a * a * s);
    for (long n = 1;; ++n) {
        const double ex = c * n * n;
        if (ex > 745.0) break;
        const double e = std::exp(-ex);
        const double cs = std::cos(2.0 * pi * n * alpha);
        p.E += 2.0 * e * cs;
        p.dE += 2.0 * (ex / s) * e * cs;
        if (e < 1e-19 * (1.0 + std::abs(p.E))) break;
    }
    return p;
}

// Affine representation of a supported range: sum = w * Theta(two-sided) + c.
inline bool theta_affine(const IndexRange& r, double& w, double& c)
{
    if (r.two_sided) {
        w = 1.0;
        c = 0.0;
        return true;
    }
    const double al = r.alpha;
    if (near_integer(al)) {
        // shift so that the range is k >= k0 + alpha with alpha = 0
        const long start = r.k0 + std::lround(al);
        if (start == 0) { w = 0.5; c = 0.5; return true; }
        if (start == 1) { w = 0.5; c = -0.5; return true; }
        return false;
    }
    if (near_integer(al - 0.5) && std::lround(r.k0 + al - 0.5) == 0) {
        w = 0.5;
        c = 0.0;
        return true;
    }
    return false;
}

inline ThetaValue index_theta(const IndexRange& r, double s)
{
    double w = 0, c = 0;
    const double a2s = r.a * r.a * s;
    if (a2s < pi && theta_affine(r, w, c)) {
        const auto p = poisson_theta(r.a, r.alpha, s);
        return {w * p.pref * (1.0 + p.E) + c, w * (p.dpref * (1.0 + p.E) + p.pref * p.dE)};
    }
    return index_theta_direct(r, s, false);
}

inline int family_zero_modes(const ArithmeticFamily& f)
{
    if (f.beta != 0.0) return 0;
    int z = f.mult;
    for (const auto& r : f.idx) z *= index_zero_count(r);
    return z;
}

inline double family_min_positive(const ArithmeticFamily& f)
{
    // per index: smallest value (0 if zero index exists) and smallest positive
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = f.idx.size();
    for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
        double v = f.beta;
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::size_t(1) << i)) v += index_min_positive(f.idx[i]);
            else if (!index_zero_count(f.idx[i])) ok = false;
        }
        if (ok && v > 0.0) best = std::min(best, v);
    }
    return best;
}

// Heat trace of a family at time s and its s-derivative.
inline ThetaValue family_theta(const ArithmeticFamily& f, double s)
{
    double v = f.mult * std::exp(-f.beta * s);
    double dv = -f.beta * v;
    for (const auto& r : f.idx) {
        const ThetaValue t = index_theta(r, s);
        dv = dv * t.v + v * t.dv;
        v *= t.v;
    }
    return {v, dv};
}

} // namespace detail

inline int zero_modes(const SpectrumFamily& S, int p)
{
    int z = 0;
    for (const auto& f : S.families)
        if (f.degree == p) z += detail::family_zero_modes(f);
    for (const auto& e : S.exceptional)
        if (e.degree == p && e.value == 0.0) z += e.mult;
    return z;
}

// Eigenvalues of degree p not exceeding lambda_max, ascending, with multiplicity.
inline std::vector<double> eigenvalues(const SpectrumFamily& S, int p, double lambda_max)
{
    std::vector<double> out;
    for (const auto& f : S.families) {
        if (f.degree != p) continue;
        std::vector<double> acc = {f.beta};
        for (const auto& r : f.idx) {
            std::vector<double> next;
            const double span = std::sqrt(std::max(lambda_max, 0.0)) / r.a + 2.0;
            const long c = static_cast<long>(std::floor(-r.alpha));
            const long lo = r.two_sided ? c - static_cast<long>(span) : std::max<long>(r.k0, c - static_cast<long>(span));
            const long hi = c + static_cast<long>(span) + 1;
            for (double base : acc)
                for (long k = lo; k <= hi; ++k) {
                    const double x = r.a * (k + r.alpha);
                    const double v = base + x * x;
                    if (v <= lambda_max * (1 + 1e-14)) next.push_back(v);
                }
            acc.swap(next);
        }
        for (double v : acc)
            for (int m = 0; m < f.mult; ++m) out.push_back(v);
    }
    for (const auto& e : S.exceptional)
        if (e.degree == p && e.value <= lambda_max)
            for (int m = 0; m < e.mult; ++m) out.push_back(e.value);
    for (double& v : out)
        if (std::abs(v) < 1e-300) v = 0.0;
    std::sort(out.begin(), out.end());
    return out;
}

// Flat circle of length L with holonomy exp(2 pi i alpha), rank-one bundle times `rank`.
inline SpectrumFamily circle_spectrum(double L, double alpha, int rank = 1)
{
    require(L > 0, "circle_spectrum: length must be positive");
    require(rank >= 1, "circle_spectrum: rank must be positive");
    SpectrumFamily S;
    S.label = "circle";
    S.bc = Boundary::closed;
    S.top_degree = 1;
    for (int p = 0; p <= 1; ++p) S.families.push_back({p, 0.0, {{2.0 * pi / L, alpha, true, 0}}, rank});
    return S;
}

// Interval [0, L]; absolute = Neumann on functions, Dirichlet on the dx-component; relative swaps.
inline SpectrumFamily interval_spectrum(double L, Boundary bc)
{
    require(L > 0, "interval_spectrum: length must be positive");
    require(bc != Boundary::closed, "interval_spectrum: boundary condition must be absolute or relative");
    SpectrumFamily S;
    S.label = "interval";
    S.bc = bc;
    S.top_degree = 1;
    const int k_fun = bc == Boundary::absolute ? 0 : 1;
    S.families.push_back({0, 0.0, {{pi / L, 0.0, false, k_fun}}, 1});
    S.families.push_back({1, 0.0, {{pi / L, 0.0, false, 1 - k_fun}}, 1});
    return S;
}

// Degree p of the product is the sum over q + r = p of Y degree q tensor axial degree r.
inline SpectrumFamily product_spectrum(const SpectrumFamily& Y, const SpectrumFamily& X)
{
    require(Y.bc == Boundary::closed, "product_spectrum: the transverse factor must be closed");
    SpectrumFamily S;
    S.label = Y.label + "x" + X.label;
    S.bc = X.bc;
    S.top_degree = Y.top_degree + X.top_degree;
    for (const auto& a : Y.families)
        for (const auto& b : X.families) {
            ArithmeticFamily f;
            f.degree = a.degree + b.degree;
            f.beta = a.beta + b.beta;
            f.idx = a.idx;
            f.idx.insert(f.idx.end(), b.idx.begin(), b.idx.end());
            f.mult = a.mult * b.mult;
            S.families.push_back(f);
        }
    for (const auto& e : Y.exceptional)
        for (const auto& b : X.families) S.families.push_back({e.degree + b.degree, e.value + b.beta, b.idx, e.mult * b.mult});
    for (const auto& a : Y.families)
        for (const auto& e : X.exceptional) S.families.push_back({a.degree + e.degree, a.beta + e.value, a.idx, a.mult * e.mult});
    for (const auto& e : Y.exceptional)
        for (const auto& g : X.exceptional) S.exceptional.push_back({e.degree + g.degree, e.value + g.value, e.mult * g.mult});
    return S;
}

struct ZetaLogDet {
    double value = 0.0;
    long truncation = 0;
    double error = 0.0;
};

namespace detail {

// Hurwitz branches: list of (q, log a) with sum_{n >= 0} (a (n + q))^2; also zero-mode count.
inline bool hurwitz_branches(const ArithmeticFamily& f, std::vector<std::pair<double, double>>& br)
{
    if (f.idx.size() != 1 || f.beta != 0.0) return false;
    const IndexRange& r = f.idx[0];
    const double la = std::log(r.a);
    if (r.two_sided) {
        const double al = frac_mod1(r.alpha);
        if (near_integer(r.alpha)) {
            br = {{1.0, la}, {1.0, la}};
        } else {
            br = {{al, la}, {1.0 - al, la}};
        }
        return true;
    }
    const double q = r.k0 + r.alpha;
    require(q > -1e-13, "zeta_log_det: one-sided family must start at a nonnegative index");
    br = {{q < 1e-13 ? 1.0 : q, la}};
    return true;
}

inline double hurwitz_log_det(const std::vector<std::pair<double, double>>& br, long N)
{
    double v = 0.0;
    for (auto [q, la] : br) v += 2.0 * la * (0.5 - q) - 2.0 * hurwitz_zeta_deriv0(q, N);
    return v;
}

// Mellin continuation of the heat trace; panels of 16-point Gauss-Legendre in log t.
inline double mellin_log_det(const ArithmeticFamily& f, int panels)
{
    const std::size_t n = f.idx.size();
    std::vector<double> w(n), c(n);
    double amax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!theta_affine(f.idx[i], w[i], c[i]))
            throw validation_error("zeta_log_det: one-sided index with alpha = " + std::to_string(f.idx[i].alpha) +
                                   " and k0 = " + std::to_string(f.idx[i].k0) +
                                   " is not supported for two-index or shifted families");
        amax = std::max(amax, f.idx[i].a);
    }
    const double beta = f.beta;
    const int N0 = family_zero_modes(f);
    const double m = f.mult;

    // polynomial part: m exp(-beta t) prod (A_i t^{-1/2} + c_i), A_i = w_i sqrt(pi) / a_i
    std::vector<double> C = {m};
    for (std::size_t i = 0; i < n; ++i) {
        const double A = w[i] * std::sqrt(pi) / f.idx[i].a;
        std::vector<double> next(C.size() + 1, 0.0);
        for (std::size_t s = 0; s < C.size(); ++s) {
            next[s] += C[s] * c[i];
            next[s + 1] += C[s] * A;
        }
        C.swap(next);
    }
    double poly = 0.0, c0 = 0.0;
    for (std::size_t s = 0; s < C.size(); ++s) {
        if (C[s] == 0.0) continue;
        double term = 1.0; // (-beta)^j / j!
        for (int j = 0; j < 400; ++j) {
            if (j > 0) term *= -beta / j;
            const double g = j - 0.5 * static_cast<double>(s);
            if (g == 0.0) c0 += C[s] * term;
            else poly += C[s] * term / g;
            if (beta == 0.0) break;
            if (j > beta && std::abs(term) < 1e-18) break;
        }
    }

    // exponentially small remainder on [t_low, 1]
    const double t_low = pi * pi / (40.0 * amax * amax);
    auto X = [&](double u) {
        const double t = std::exp(u);
        std::vector<double> P(n), Q(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto pv = poisson_theta(f.idx[i].a, f.idx[i].alpha, t);
            P[i] = w[i] * pv.pref + c[i];
            Q[i] = w[i] * pv.pref * pv.E;
        }
        // prod (P + Q) - prod P without cancellation
        double base = 1.0, diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diff = diff * (P[i] + Q[i]) + base * Q[i];
            base *= P[i];
        }
        return m * std::exp(-beta * t) * diff;
    };
    double small = 0.0;
    if (t_low < 1.0) small = integrate_gl(X, std::log(t_low), 0.0, panels, 16);

    // large-time part on [1, T] with the zero modes removed
    const double lmin = family_min_positive(f);
    const double T = std::max(2.0, 40.0 / lmin);
    auto Y = [&](double u) {
        const double t = std::exp(u);
        // prod theta_i - prod z_i, expanded in theta'_i = theta_i - z_i
        double zeros = 1.0, diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int z = index_zero_count(f.idx[i]);
            const double tp = index_theta_direct(f.idx[i], t, true).v;
            diff = diff * (tp + z) + zeros * tp;
            zeros *= z;
        }
        const double e = std::exp(-beta * t);
        // beta > 0: no subtraction of zero modes
        return m * (beta == 0.0 ? diff : e * (diff + zeros));
    };
    const double large = integrate_gl(Y, 0.0, std::log(T), panels, 16);
    const double zp = small + large + poly + euler_gamma * (c0 - N0);
    return -zp;
}

} // namespace detail

// Log of the zeta-regularized determinant of one family (zero modes excluded).
inline ZetaLogDet family_log_det(const ArithmeticFamily& f, long K = 10000)
{
    require(K >= 16, "zeta_log_det: truncation must be at least 16");
    require(!f.idx.empty(), "zeta_log_det: family needs at least one index");
    for (const auto& r : f.idx) require(r.a > 0, "zeta_log_det: index scale must be positive");
    ZetaLogDet out;
    out.truncation = K;
    std::vector<std::pair<double, double>> br;
    double v1, v2;
    if (detail::hurwitz_branches(f, br)) {
        v1 = f.mult * detail::hurwitz_log_det(br, K);
        v2 = f.mult * detail::hurwitz_log_det(br, 2 * K);
    } else {
        const int p1 = static_cast<int>(std::max<long>(8, K / 256));
        v1 = detail::mellin_log_det(f, p1);
        v2 = detail::mellin_log_det(f, 2 * p1);
    }
    if (!std::isfinite(v1) || !std::isfinite(v2))
        throw numerical_error("zeta_log_det: continuation did not converge (non-finite value)");
    out.value = v2;
    out.error = std::abs(v2 - v1) + 1e-14 * std::max(1.0, std::abs(v2));
    if (out.error > 1e-6 * std::max(1.0, std::abs(v2)))
        throw numerical_error("zeta_log_det: continuation error " + std::to_string(out.error) +
                              " too large; values " + std::to_string(v1) + " vs " + std::to_string(v2));
    return out;
}

// log det' of the degree-p Laplacian.
inline ZetaLogDet zeta_log_det(const SpectrumFamily& S, int p, long K = 10000)
{
    ZetaLogDet out;
    out.truncation = K;
    for (const auto& f : S.families) {
        if (f.degree != p) continue;
        const auto z = family_log_det(f, K);
        out.value += z.value;
        out.error += z.error;
    }
    for (const auto& e : S.exceptional)
        if (e.degree == p && e.value > 0.0) out.value += e.mult * std::log(e.value);
    return out;
}

// log T = -1/2 sum_p (-1)^p p log det' Delta_p.
inline ZetaLogDet analytic_torsion_log(const SpectrumFamily& S, long K = 10000)
{
    ZetaLogDet out;
    out.truncation = K;
    for (int p = 1; p <= S.top_degree; ++p) {
        const auto z = zeta_log_det(S, p, K);
        const double sgn = (p % 2) ? -1.0 : 1.0;
        out.value += -0.5 * sgn * p * z.value;
        out.error += 0.5 * p * z.error;
    }
    return out;
}

// Heat traces as sums of monomials c exp(-beta s) prod Theta_i(s). One-sided ranges with an
// affine theta representation are expanded, and equal monomials merged, so that supertraces
// cancel in the coefficients rather than in floating point.
struct HeatMonomial {
    double coef = 0.0;
    double beta = 0.0;
    std::vector<IndexRange> idx; // two-sided, or one-sided ranges summed directly
};

namespace detail {

inline auto monomial_key(const HeatMonomial& m)
{
    std::vector<std::tuple<double, double, bool, int>> k;
    for (const auto& r : m.idx) k.emplace_back(r.a, r.alpha, r.two_sided, r.two_sided ? 0 : r.k0);
    std::sort(k.begin(), k.end());
    return std::make_pair(m.beta, k);
}

} // namespace detail

class HeatExpansion {
public:
    void add(const SpectrumFamily& S, double (*weight)(int degree), double sign = 1.0)
    {
        for (const auto& f : S.families) {
            const double w = sign * weight(f.degree) * f.mult;
            if (w == 0.0) continue;
            std::vector<HeatMonomial> acc = {{w, f.beta, {}}};
            for (const auto& r : f.idx) {
                double a = 0, c = 0;
                std::vector<HeatMonomial> next;
                IndexRange two = r;
                two.two_sided = true;
                two.k0 = 0;
                const bool affine = detail::theta_affine(r, a, c);
                if (affine && !r.two_sided) two.alpha = detail::frac_mod1(r.alpha);
                if (r.two_sided) two.alpha = detail::frac_mod1(r.alpha);
                for (const auto& m : acc) {
                    if (!affine) {
                        HeatMonomial x = m;
                        x.idx.push_back(r);
                        next.push_back(x);
                        continue;
                    }
                    HeatMonomial x = m;
                    x.coef *= a;
                    x.idx.push_back(two);
                    next.push_back(x);
                    if (c != 0.0) {
                        HeatMonomial y = m;
                        y.coef *= c;
                        next.push_back(y);
                    }
                }
                acc.swap(next);
            }
            for (auto& m : acc) insert(m);
        }
        for (const auto& e : S.exceptional) {
            const double w = sign * weight(e.degree) * e.mult;
            if (w != 0.0) insert({w, e.value, {}});
        }
    }

    const std::vector<HeatMonomial>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    // sum of c exp(-beta s) prod Theta_i(s), and its s-derivative
    detail::ThetaValue evaluate(double s) const
    {
        std::vector<double> v, dv;
        for (const auto& m : terms_) {
            double x = m.coef * std::exp(-m.beta * s), dx = -m.beta * x;
            for (const auto& r : m.idx) {
                const auto t = detail::index_theta(r, s);
                dx = dx * t.v + x * t.dv;
                x *= t.v;
            }
            v.push_back(x);
            dv.push_back(dx);
        }
        return {pairwise_sum(v), pairwise_sum(dv)};
    }

private:
    void insert(HeatMonomial m)
    {
        std::sort(m.idx.begin(), m.idx.end(), [](const IndexRange& x, const IndexRange& y) {
            return std::tie(x.a, x.alpha, x.two_sided, x.k0) < std::tie(y.a, y.alpha, y.two_sided, y.k0);
        });
        const auto key = detail::monomial_key(m);
        for (auto it = terms_.begin(); it != terms_.end(); ++it) {
            if (detail::monomial_key(*it) == key) {
                it->coef += m.coef;
                if (it->coef == 0.0) terms_.erase(it);
                return;
            }
        }
        terms_.push_back(std::move(m));
    }

    std::vector<HeatMonomial> terms_;
};

inline double supertrace_weight(int p) { return (p % 2) ? -1.0 : 1.0; }
inline double weighted_supertrace_weight(int p) { return ((p % 2) ? -1.0 : 1.0) * 0.5 * p; }

// sum_p (-1)^p tr exp(-t Delta_p).
inline double heat_supertrace(const SpectrumFamily& S, double t)
{
    require(t > 0, "heat_supertrace: t must be positive");
    HeatExpansion E;
    E.add(S, supertrace_weight);
    return E.evaluate(t).v;
}

// The weighted supertrace of an expansion built with weighted_supertrace_weight:
// sum (1 - t lambda / 2) exp(-t lambda / 4) = (1 + 2 s d/ds) tr exp(-s Delta), s = t / 4.
inline double weighted_heat_supertrace(const HeatExpansion& E, double t)
{
    const double s = 0.25 * t;
    const auto th = E.evaluate(s);
    return th.v + 2.0 * s * th.dv;
}

// sum_p (-1)^p (p/2) sum_lambda (1 - t lambda / 2) exp(-t lambda / 4).
inline double weighted_heat_supertrace(const SpectrumFamily& S, double t)
{
    require(t > 0, "weighted_heat_supertrace: t must be positive");
    HeatExpansion E;
    E.add(S, weighted_supertrace_weight);
    return weighted_heat_supertrace(E, t);
}

// Smallest positive eigenvalue over all degrees.
inline double min_positive_eigenvalue(const SpectrumFamily& S)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : S.families) best = std::min(best, detail::family_min_positive(f));
    for (const auto& e : S.exceptional)
        if (e.value > 0) best = std::min(best, e.value);
    return best;
}

// Glued model Z = Z1 u_Y Z2 with a collar stretched by R on each side of each cut.
struct ModelFibration {
    enum class Kind { circle, torus };
    Kind kind = Kind::circle;
    double len1 = 1.0, len2 = 1.0; // arc lengths or strip widths at R = 0
    double L_Y = 1.0;              // transverse circle (torus model)
    double alpha = 0.0;            // holonomy phase along the transverse circle (torus) or the circle
    double R = 0.0;
    int rank = 1;

    static ModelFibration circle_model(double L1, double L2, double alpha = 0.0)
    {
        require(L1 > 0 && L2 > 0, "circle model: arc lengths must be positive");
        ModelFibration M;
        M.kind = Kind::circle;
        M.len1 = L1;
        M.len2 = L2;
        M.alpha = alpha;
        return M;
    }

    static ModelFibration torus_model(double L_Y, double alpha, double a1, double a2)
    {
        require(L_Y > 0 && a1 > 0 && a2 > 0, "torus model: lengths must be positive");
        ModelFibration M;
        M.kind = Kind::torus;
        M.L_Y = L_Y;
        M.alpha = alpha;
        M.len1 = a1;
        M.len2 = a2;
        return M;
    }

    ModelFibration stretched(double r) const
    {
        require(r >= 0, "ModelFibration: stretch must be nonnegative");
        ModelFibration M = *this;
        M.R = r;
        return M;
    }

    // Y = two points (circle model) or two circles (torus model).
    int chi_Y() const { return kind == Kind::circle ? 2 : 0; }
    double length1() const { return len1 + 2.0 * R; }
    double length2() const { return len2 + 2.0 * R; }
    double total_length() const { return length1() + length2(); }

    SpectrumFamily whole() const
    {
        if (kind == Kind::circle) return circle_spectrum(total_length(), alpha, rank);
        return product_spectrum(circle_spectrum(L_Y, alpha, rank), circle_spectrum(total_length(), 0.0));
    }
    SpectrumFamily piece1_absolute() const
    {
        auto I = interval_spectrum(length1(), Boundary::absolute);
        if (kind == Kind::circle) return scaled_rank(I);
        return product_spectrum(circle_spectrum(L_Y, alpha, rank), I);
    }
    SpectrumFamily piece2_relative() const
    {
        auto I = interval_spectrum(length2(), Boundary::relative);
        if (kind == Kind::circle) return scaled_rank(I);
        return product_spectrum(circle_spectrum(L_Y, alpha, rank), I);
    }

private:
    SpectrumFamily scaled_rank(SpectrumFamily S) const
    {
        for (auto& f : S.families) f.mult *= rank;
        return S;
    }
};

struct TimeSplit {
    double S = 0.0, L = 0.0, full = 0.0;
    double split_time = 0.0, t_min = 0.0, t_max = 0.0;
    double error = 0.0;
};

// S(R) and L(R): minus the integral of f^(Z) - f^(Z1) - f^(Z2) against dt/t, split at R^(2 - eps).
// The lower end t_min stands in for 0.
inline TimeSplit time_split_contributions(const ModelFibration& model, double R, double eps_exp = 0.5,
                                          double t_min = 1e-8, int panels_per_unit = 4)
{
    require(R >= 0, "time_split: R must be nonnegative");
    require(eps_exp > 0 && eps_exp < 2, "time_split: eps_exp must lie in (0, 2)");
    require(t_min > 0, "time_split: t_min must be positive");
    const ModelFibration M = model.stretched(R);
    const auto SZ = M.whole(), S1 = M.piece1_absolute(), S2 = M.piece2_relative();
    HeatExpansion E;
    E.add(SZ, weighted_supertrace_weight);
    E.add(S1, weighted_supertrace_weight, -1.0);
    E.add(S2, weighted_supertrace_weight, -1.0);
    auto integrand = [&](double u) { return -weighted_heat_supertrace(E, std::exp(u)); };
    const double lmin = std::min({min_positive_eigenvalue(SZ), min_positive_eigenvalue(S1), min_positive_eigenvalue(S2)});
    TimeSplit out;
    out.t_min = t_min;
    out.t_max = std::max(10.0 * t_min, 4.0 * 50.0 / lmin);
    out.split_time = std::clamp(R > 0 ? std::pow(R, 2.0 - eps_exp) : t_min, t_min, out.t_max);
    const double tail = integrand(std::log(out.t_max));
    if (std::abs(tail) > 1e-10)
        throw numerical_error("time_split: integrand does not decay (value " + std::to_string(tail) +
                              " at t = " + std::to_string(out.t_max) + ")");
    auto integrate = [&](double a, double b, int ppu) {
        if (b <= a) return 0.0;
        const int panels = std::max(1, static_cast<int>(std::ceil((b - a) * ppu)));
        return integrate_gl(integrand, a, b, panels, 16);
    };
    const double ua = std::log(out.t_min), us = std::log(out.split_time), ub = std::log(out.t_max);
    out.S = integrate(ua, us, 2 * panels_per_unit);
    out.L = integrate(us, ub, 2 * panels_per_unit);
    out.full = integrate(ua, ub, 2 * panels_per_unit);
    const double coarse = integrate(ua, us, panels_per_unit) + integrate(us, ub, panels_per_unit);
    out.error = std::abs(coarse - out.S - out.L);
    return out;
}

} // namespace torsionlab
