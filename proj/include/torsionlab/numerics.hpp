#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace torsionlab {

inline constexpr double pi = std::numbers::pi;
inline constexpr double euler_gamma = std::numbers::egamma;

struct QuadRule {
    std::vector<double> x; // nodes on [-1, 1]
    std::vector<double> w;
};

namespace detail {

inline QuadRule compute_gauss_legendre(int n)
{
    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= n; ++j) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return r;
}

} // namespace detail

// Gauss-Legendre rule on [-1,1]; cached, thread safe.
inline const QuadRule& gauss_legendre(int n)
{
    require(n >= 1 && n <= 512, "gauss_legendre: order out of range");
    static std::mutex m;
    static std::map<int, QuadRule> cache;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
    return it->second;
}

// Composite Gauss-Legendre on [a,b] with equal panels.
template <class F>
double integrate_gl(F&& f, double a, double b, int panels = 1, int order = 16)
{
    if (a == b) return 0.0;
    const QuadRule& q = gauss_legendre(order);
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h, mid = lo + 0.5 * h;
        double s = 0.0;
        for (int i = 0; i < order; ++i) s += q.w[i] * f(mid + 0.5 * h * q.x[i]);
        total += 0.5 * h * s;
    }
    return total;
}

// Composite Gauss-Legendre over consecutive breakpoints.
template <class F>
double integrate_breaks(F&& f, const std::vector<double>& breaks, int order = 16)
{
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        total += integrate_gl(f, breaks[i], breaks[i + 1], 1, order);
    return total;
}

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;
};

// Adaptive Gauss-Legendre: compare order-n on a panel with order-n on its halves.
template <class F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double tol = 1e-12, int order = 16,
                                  int max_depth = 40)
{
    struct Panel {
        double a, b, whole;
        int depth;
    };
    auto rule = [&](double lo, double hi) { return integrate_gl(f, lo, hi, 1, order); };
    AdaptiveResult out;
    std::vector<Panel> stack{{a, b, rule(a, b), 0}};
    const double scale = std::max(1.0, std::abs(b - a));
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double m = 0.5 * (p.a + p.b);
        const double left = rule(p.a, m), right = rule(m, p.b);
        const double err = std::abs(left + right - p.whole);
        if (err <= tol * (p.b - p.a) / scale || p.depth >= max_depth) {
            if (p.depth >= max_depth && err > tol)
                throw numerical_error("adaptive quadrature did not converge on [" +
                                      std::to_string(p.a) + ", " + std::to_string(p.b) + "]");
            out.value += left + right;
            out.error += err;
        } else {
            stack.push_back({m, p.b, right, p.depth + 1});
            stack.push_back({p.a, m, left, p.depth + 1});
        }
    }
    return out;
}

// Pairwise summation; result depends only on the order of the input.
inline double pairwise_sum(const double* v, std::size_t n)
{
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// Smooth step: 0 for y <= 0, 1 for y >= 1, built from exp(-1/y). Returns value, first and
// second derivative.
struct StepValue {
    double v, d1, d2;
};

inline StepValue smooth_step(double y)
{
    if (y <= 0.0) return {0.0, 0.0, 0.0};
    if (y >= 1.0) return {1.0, 0.0, 0.0};
    auto e0 = [](double s) { return std::exp(-1.0 / s); };
    auto e1 = [&](double s) { return e0(s) / (s * s); };
    auto e2 = [&](double s) { return e0(s) * (1.0 / (s * s * s * s) - 2.0 / (s * s * s)); };
    const double a = e0(y), b = e0(1.0 - y);
    const double a1 = e1(y), b1 = -e1(1.0 - y);
    const double a2 = e2(y), b2 = e2(1.0 - y);
    const double D = a + b, D1 = a1 + b1;
    const double N = a1 * b - a * b1;
    const double N1 = a2 * b - a * b2;
    return {a / D, N / (D * D), N1 / (D * D) - 2.0 * N * D1 / (D * D * D)};
}

// Bernoulli numbers B_{2j}, j = 1..15.
inline constexpr std::array<double, 15> bernoulli_even = {
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
};

// d/ds zeta_H(s, q) at s = 0 by Euler-Maclaurin with N explicit terms. The explicit sum is
// folded against the integral of log so that nothing of size N log N is ever formed.
inline double hurwitz_zeta_deriv0(double q, long N = 32)
{
    require(q > 0.0, "hurwitz_zeta_deriv0: q must be positive");
    N = std::max<long>(N, 20);
    std::vector<double> terms(static_cast<std::size_t>(N));
    for (long n = 0; n < N; ++n) {
        const double a = n + q;
        terms[static_cast<std::size_t>(n)] = (a + 1.0) * std::log1p(1.0 / a) - 1.0;
    }
    const double x = N + q;
    double tail = q * std::log(q) - q - 0.5 * std::log(x);
    double xp = x;
    for (std::size_t j = 1; j <= bernoulli_even.size(); ++j) {
        const double term = bernoulli_even[j - 1] / (2.0 * j * (2.0 * j - 1.0)) / xp;
        tail += term;
        if (std::abs(term) < 1e-18) break;
        xp *= x * x;
    }
    return pairwise_sum(terms) + tail;
}

inline double hurwitz_zeta0(double q) { return 0.5 - q; }

struct LineFit {
    double slope = 0.0, intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    require(x.size() == y.size() && x.size() >= 2, "fit_line: need at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    require(den != 0.0, "fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

// Golden-section search for a minimum of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_minimize(F&& f, double a, double b, double tol = 1e-12)
{
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

// Worker count: hardware concurrency capped by TORSIONLAB_THREADS.
inline unsigned worker_count()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TORSIONLAB_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

// Map f over [0, n) in parallel; results stored by index so ordering is deterministic.
template <class F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<decltype(f(std::size_t{}))>
{
    using T = decltype(f(std::size_t{}));
    std::vector<T> out(n);
    const unsigned workers = std::min<std::size_t>(worker_count(), n == 0 ? 1 : n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex fail_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    out[i] = f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(fail_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

} // namespace torsionlab
