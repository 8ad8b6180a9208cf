#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include <torsionlab/heat_parametrix.hpp>

using namespace torsionlab;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// exp(-t A) for symmetric A by eigendecomposition
template <class M>
M sym_expm(const M& A, double t)
{
    Eigen::SelfAdjointEigenSolver<M> es(A);
    const Eigen::VectorXd e = (-t * es.eigenvalues().array()).exp();
    return es.eigenvectors() * e.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

TEST(Kernels, LineIsGaussian)
{
    const auto k = kernel_line(0.5, 0.3, -0.2);
    EXPECT_NEAR(k.one, std::exp(-0.25 / 2.0) / std::sqrt(2 * pi), 1e-15);
    EXPECT_EQ(k.one, k.dx);
    EXPECT_THROW(kernel_line(0.0, 0, 0), validation_error);
}

TEST(Kernels, HalflineBoundaryConditions)
{
    EXPECT_NEAR(kernel_halfline_scalar(0.7, 0.0, 1.3, true), 0.0, 1e-16);
    // Neumann: d/du vanishes at u = 0 (central difference)
    const double h = 1e-5;
    const double dn = (kernel_halfline_scalar(0.7, h, 1.3, false) - kernel_halfline_scalar(0.7, 0.0, 1.3, false)) / h;
    EXPECT_NEAR(dn, 0.0, 1e-5);
    // far from the wall both agree with the line
    EXPECT_NEAR(kernel_halfline_scalar(0.2, 20.0, 20.0, false), 1.0 / std::sqrt(0.8 * pi), 1e-15);
    EXPECT_THROW(kernel_halfline_scalar(0.2, -1.0, 1.0, true), validation_error);
}

TEST(Kernels, AbsoluteRelativePairs)
{
    const double t = 0.4;
    // absolute on (-inf, 0]: Neumann on the function component, Dirichlet on dx
    auto a = kernel_halfline(t, 0.0, -0.5, Boundary::absolute);
    EXPECT_NEAR(a.dx, 0.0, 1e-16);
    EXPECT_NEAR(a.one, 2 * std::exp(-0.25 / 1.6) / std::sqrt(1.6 * pi), 1e-15);
    auto r = kernel_halfline(t, 0.0, 0.5, Boundary::relative);
    EXPECT_NEAR(r.one, 0.0, 1e-16);
    EXPECT_NEAR(r.dx, a.one, 1e-15);
    EXPECT_THROW(kernel_halfline(t, 0.5, 0.5, Boundary::absolute), validation_error);
    EXPECT_THROW(kernel_halfline(t, -0.5, 0.5, Boundary::relative), validation_error);
    EXPECT_THROW(kernel_halfline(t, 0.5, 0.5, Boundary::closed), validation_error);
}

TEST(Kernels, SemigroupProperty)
{
    for (bool dir : {true, false}) {
        const double t = 0.3, s = 0.5, u = 0.4, v = 1.1;
        const double lhs = simpson([&](double w) {
            return kernel_halfline_scalar(t, u, w, dir) * kernel_halfline_scalar(s, w, v, dir);
        }, 0.0, 30.0);
        EXPECT_NEAR(lhs, kernel_halfline_scalar(t + s, u, v, dir), 1e-8);
    }
    // interval with mixed ends
    const auto K = Kernel1D::interval(-2.0, 1.5, {1, -1}, {-1, 1});
    for (int comp = 0; comp < 2; ++comp) {
        const double t = 0.8, s = 1.7, u = -1.2, v = 0.9;
        auto pick = [&](const ComponentPair& p) { return comp ? p.dx : p.one; };
        const double lhs = simpson([&](double w) { return pick(K.eval(t, u, w)) * pick(K.eval(s, w, v)); }, -2.0, 1.5);
        EXPECT_NEAR(lhs, pick(K.eval(t + s, u, v)), 1e-8);
    }
}

TEST(Kernels, IntervalMatchesSpectralSum)
{
    // Dirichlet at 0, Neumann at l: modes sin((k + 1/2) pi x / l)
    const double l = 2.0, t = 0.15, x = 0.7, y = 1.6;
    const auto K = Kernel1D::interval(0.0, l, {-1, -1}, {1, 1});
    double s = 0;
    for (int k = 0; k < 400; ++k) {
        const double w = (k + 0.5) * pi / l;
        s += (2.0 / l) * std::exp(-t * w * w) * std::sin(w * x) * std::sin(w * y);
    }
    EXPECT_NEAR(K.eval(t, x, y).one, s, 1e-12);
    // derivative against a central difference
    const double h = 1e-5;
    const double fd = (K.eval(t, x + h, y).one - K.eval(t, x - h, y).one) / (2 * h);
    EXPECT_NEAR(K.eval(t, x, y, true).one, fd, 1e-7);
}

TEST(Kernels, OffDiagonalGaussianBound)
{
    const auto K = Kernel1D::interval(-5.0, 5.0, {1, -1}, {-1, 1});
    double worst = -1e300;
    for (double t : {0.05, 0.2, 1.0})
        for (double x = -4.5; x <= 4.5; x += 0.75)
            for (double y = -4.5; y <= 4.5; y += 0.75) {
                const double k = component_max_abs(K.eval(t, x, y));
                if (k > 0) worst = std::max(worst, std::log(k * std::sqrt(t)) + (x - y) * (x - y) / (4 * t));
            }
    EXPECT_LT(worst, 1.0);
}

TEST(Cutoffs, ValuesAndSupports)
{
    const double R = 7.0;
    auto c = [&](CutoffName n, double x) { return collar_cutoff(n, R, x).v; };
    EXPECT_EQ(c(CutoffName::phi1, 0.0), 1.0);
    EXPECT_EQ(c(CutoffName::phi1, 6.5), 0.0);
    EXPECT_EQ(c(CutoffName::phi1, 9.0), 0.0);
    EXPECT_EQ(c(CutoffName::psi1, 4.2), 0.0);
    EXPECT_EQ(c(CutoffName::phi2, 0.9), 0.0);
    EXPECT_EQ(c(CutoffName::phi2, 2.5), 1.0);
    EXPECT_EQ(c(CutoffName::psi2, -9.0), 1.0);
    EXPECT_EQ(c(CutoffName::psi1, 2.0) + c(CutoffName::psi2, 2.0), 1.0);
    // phi = 1 on the support of psi
    for (double x = -8; x <= 8; x += 0.01) {
        if (c(CutoffName::psi1, x) != 0) EXPECT_EQ(c(CutoffName::phi1, x), 1.0);
        if (c(CutoffName::psi2, x) != 0) EXPECT_EQ(c(CutoffName::phi2, x), 1.0);
        EXPECT_NEAR(c(CutoffName::psi1, x) + c(CutoffName::psi2, x), 1.0, 1e-15);
    }
    // derivative against central differences
    const double h = 1e-6, x = 5.4;
    const auto v = collar_cutoff(CutoffName::phi1, R, x);
    EXPECT_NEAR(v.d1, (c(CutoffName::phi1, x + h) - c(CutoffName::phi1, x - h)) / (2 * h), 1e-6);
    const auto w = collar_cutoff(CutoffName::phi2, R, -1.3);
    EXPECT_NEAR(w.d1, (c(CutoffName::phi2, -1.3 + h) - c(CutoffName::phi2, -1.3 - h)) / (2 * h), 1e-6);
}

TEST(Parametrix, ErrorTermMatchesHeatOperatorOnParametrix)
{
    // C = (d/dt - d^2/dx^2) Q, by finite differences
    for (Piece pc : {Piece::whole, Piece::absolute_piece, Piece::relative_piece}) {
        AxialParametrix P(4.0, pc);
        const double t = 0.7, h = 1e-3;
        for (double x : {-3.2, -0.8, 0.6, 3.0})
            for (double xp : {-2.0, -0.3, 0.2, 2.5}) {
                if (x < P.left() || x > P.right() || xp < P.left() || xp > P.right()) continue;
                auto Q = [&](double tt, double xx) { return P.parametrix(tt, xx, xp); };
                const auto dt = (1.0 / (2 * h)) * (Q(t + h, x) - Q(t - h, x));
                const auto dxx = (1.0 / (h * h)) * (Q(t, x + h) - 2.0 * Q(t, x) + Q(t, x - h));
                const auto C = P.error_term(t, x, xp);
                const auto lhs = dt - dxx;
                EXPECT_NEAR(lhs.one, C.one, 1e-4 * std::max(1.0, std::abs(C.one))) << piece_name(pc) << " " << x << " " << xp;
                EXPECT_NEAR(lhs.dx, C.dx, 1e-4 * std::max(1.0, std::abs(C.dx))) << piece_name(pc) << " " << x << " " << xp;
            }
    }
}

TEST(Parametrix, DuhamelIdentity)
{
    ParametrixScanOptions opt;
    for (Piece pc : {Piece::whole, Piece::absolute_piece, Piece::relative_piece}) {
        opt.piece = pc;
        const auto rep = parametrix_error_scan({2.0, 4.0}, {0.5, 2.0}, opt);
        EXPECT_FALSE(rep.samples.empty());
        EXPECT_LE(rep.max_residual, 1e-6) << piece_name(pc);
        EXPECT_EQ(rep.max_diagonal_error, 0.0);
        EXPECT_TRUE(rep.support_ok);
    }
}

TEST(Parametrix, ErrorDecaysInRSquaredOverT)
{
    ParametrixScanOptions opt;
    opt.duhamel = false;
    const auto rep = parametrix_error_scan({4, 6, 8}, {1, 2, 4}, opt);
    EXPECT_LE(rep.slope_kernel_error, -0.1);
    EXPECT_LT(rep.slope_error_term, 0.0);
    EXPECT_TRUE(rep.support_ok);
    EXPECT_THROW(parametrix_error_scan({0.5}, {1}, opt), validation_error);
}

TEST(Parametrix, DifferenceKernelClosedForm)
{
    // e_dif = -sign(x) g dx + sign(x) g 1, g = exp(-x^2/t)/sqrt(4 pi t)
    for (double t : {0.1, 1.0})
        for (double x : {-2.0, -0.3, 0.4, 1.5}) {
            const auto e = difference_kernel(t, x);
            const double g = std::exp(-x * x / t) / std::sqrt(4 * pi * t);
            const double sg = x < 0 ? -1.0 : 1.0;
            EXPECT_NEAR(e.one, sg * g, 1e-15);
            EXPECT_NEAR(e.dx, -sg * g, 1e-15);
        }
}

TEST(Parametrix, CancellationForEvenProfiles)
{
    const auto Y = circle_spectrum(1.0, 0.3);
    for (double R : {2.0, 5.0})
        for (double t : {0.1, 1.0, 3.0}) {
            const auto psi = [&](double x) { return collar_cutoff(CutoffName::psi1, R, x).v; };
            const auto c = cancellation_integral(R, t, psi, Y);
            EXPECT_LT(std::abs(c.value), 1e-12);
            EXPECT_LT(std::abs(c.one_component), 1e-12);
            const auto gauss = [&](double x) { return std::exp(-x * x); };
            EXPECT_LT(std::abs(cancellation_integral(R, t, gauss, Y).value), 1e-12);
        }
    // an odd perturbation breaks it
    const double R = 3.0, t = 0.5;
    const auto odd = [&](double x) { return collar_cutoff(CutoffName::psi1, R, x).v + 0.1 * std::tanh(x); };
    const auto c = cancellation_integral(R, t, odd, Y);
    EXPECT_GT(std::abs(c.one_component), 1e-3);
    // the one-component integral alone: int 0.1 tanh(x) sign(x) g(x) over the line, by Simpson
    const double ref = 2 * simpson([&](double x) {
        return (collar_cutoff(CutoffName::psi1, R, x).v * 0 + 0.1 * std::tanh(x)) * std::exp(-x * x / t) / std::sqrt(4 * pi * t);
    }, 0.0, R);
    EXPECT_NEAR(c.one_component, ref, 1e-9);
}

TEST(Parametrix, KernelComparisonDecays)
{
    std::vector<double> xs, ys;
    for (double r : {1.0, 1.5, 2.0, 2.5})
        for (double t : {0.5, 1.0}) {
            xs.push_back(r * r / t);
            ys.push_back(std::log(kernel_comparison(6.0, t, r)));
        }
    EXPECT_LT(fit_line(xs, ys).slope, -0.5);
}

TEST(ProductKernel, MatchesLatticeMatrixExponential)
{
    // cylinder: twisted circle of length 1 times [0, 1] with Neumann ends, 50 x 50 nodes
    const int n = 50;
    const double LY = 1.0, alpha = 0.3, t = 0.05;
    const double hy = LY / n, hx = 1.0 / (n - 1);
    Eigen::MatrixXcd AY = Eigen::MatrixXcd::Zero(n, n);
    const std::complex<double> ph = std::polar(1.0, 2 * pi * alpha);
    for (int i = 0; i < n; ++i) {
        AY(i, i) = 2.0 / (hy * hy);
        // u(y + L) = e^{2 pi i alpha} u(y) for modes exp(2 pi i (k + alpha) y)
        const std::complex<double> f = (i + 1 == n) ? ph : 1.0;
        AY(i, (i + 1) % n) += -f / (hy * hy);
        AY((i + 1) % n, i) += -std::conj(f) / (hy * hy);
    }
    // vertex-centred Neumann, symmetrised with trapezoid weights
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, hx);
    w(0) = w(n - 1) = hx / 2;
    Eigen::MatrixXd AX = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (i > 0) AX(i, i - 1) = -1.0 / (hx * hx);
        if (i + 1 < n) AX(i, i + 1) = -1.0 / (hx * hx);
        AX(i, i) = 2.0 / (hx * hx);
    }
    AX(0, 1) = AX(n - 1, n - 2) = -2.0 / (hx * hx);
    Eigen::MatrixXd S = w.cwiseSqrt().asDiagonal() * AX * w.cwiseSqrt().cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose()).eval();
    const Eigen::MatrixXcd EY = sym_expm<Eigen::MatrixXcd>(AY, t);
    const Eigen::MatrixXd EXs = sym_expm<Eigen::MatrixXd>(S, t);
    const auto axial = Kernel1D::interval(0.0, 1.0, {1, 1}, {1, 1});
    double worst = 0, scale = 0;
    for (int i : {0, 7, 20, 33}) {
        for (int j : {0, 5, 26}) {
            for (int a : {0, 10, 25, 49}) {
                for (int b : {0, 12, 30, 49}) {
                    const double kx = EXs(a, b) / std::sqrt(w(a) * w(b));
                    const std::complex<double> lat = EY(i, j) / hy * kx;
                    const auto cont = product_kernel_circle(LY, alpha, axial, t, i * hy, a * hx, j * hy, b * hx);
                    worst = std::max(worst, std::abs(lat - cont.one));
                    scale = std::max(scale, std::abs(cont.one));
                }
            }
        }
    }
    EXPECT_LT(worst / scale, 1e-3);
}

TEST(ProductKernel, TraceFactorises)
{
    const auto Y = circle_spectrum(1.0, 0.25);
    const auto axial = Kernel1D::line();
    const double t = 0.3;
    const auto tr = product_kernel_trace(Y, 0, axial, t, 0.0);
    double s = 0;
    for (int k = -60; k <= 60; ++k) s += std::exp(-t * std::pow(2 * pi * (k + 0.25), 2));
    EXPECT_NEAR(tr.one, s / std::sqrt(4 * pi * t), 1e-12);
    // pointwise: integral over y of the diagonal equals the Y trace
    const double pt = std::real(product_kernel_circle(1.0, 0.25, axial, t, 0.3, 0.0, 0.3, 0.0).one);
    EXPECT_NEAR(pt, tr.one, 1e-12);
}
