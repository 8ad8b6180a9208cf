#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include <torsionlab/model_spectra.hpp>

using namespace torsionlab;

namespace {

// Lowest eigenvalues of the second-difference operator with the given ends.
std::vector<double> fd_eigenvalues(int n, double L, const std::string& kind, double alpha = 0.0)
{
    const double h = L / n;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    if (kind == "periodic") {
        const std::complex<double> ph = std::polar(1.0, 2 * pi * alpha);
        for (int i = 0; i < n; ++i) {
            A(i, i) = 2.0 / (h * h);
            A(i, (i + 1) % n) += -1.0 / (h * h) * (i + 1 == n ? ph : 1.0);
            A((i + 1) % n, i) += -1.0 / (h * h) * (i + 1 == n ? std::conj(ph) : 1.0);
        }
    } else if (kind == "dirichlet") {
        // interior nodes of n + 1 intervals
        const double hd = L / (n + 1);
        for (int i = 0; i < n; ++i) {
            A(i, i) = 2.0 / (hd * hd);
            if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -1.0 / (hd * hd);
        }
    } else {
        // cell-centred Neumann
        for (int i = 0; i < n; ++i) {
            A(i, i) = ((i == 0 || i == n - 1) ? 1.0 : 2.0) / (h * h);
            if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -1.0 / (h * h);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + n);
    return v;
}

double massive_circle_log_det(double m, double LY, double alpha)
{
    // log(2 cosh(m LY) - 2 cos(2 pi alpha)) with the linear part m LY split off
    const double e = std::exp(-m * LY);
    return m * LY + std::log(1.0 - 2.0 * std::cos(2 * pi * alpha) * e + e * e);
}

double eta_torus_log_det(double L1, double L2)
{
    // log det' on the flat torus L1 x L2 from the Dedekind eta product
    const double tau2 = L2 / L1, q = std::exp(-2 * pi * tau2);
    double s = 0.0;
    for (int n = 1; n < 200; ++n) s += std::log1p(-std::pow(q, n));
    const double log_eta = -2 * pi * tau2 / 24.0 + s;
    return 2 * std::log(tau2) + 4 * log_eta + 2 * std::log(L1);
}

} // namespace

TEST(ModelSpectra, CircleSpectrumMatchesFiniteDifferences)
{
    const auto S = circle_spectrum(2 * pi, 0.0);
    auto ev = eigenvalues(S, 0, 10.0);
    ASSERT_GE(ev.size(), 5u);
    EXPECT_EQ(ev[0], 0.0);
    EXPECT_EQ(zero_modes(S, 0), 1);
    auto fd1 = fd_eigenvalues(200, 2 * pi, "periodic"), fd2 = fd_eigenvalues(400, 2 * pi, "periodic");
    for (int i = 1; i < 5; ++i) {
        // Richardson extrapolation of the h^2 error
        const double ex = (4 * fd2[i] - fd1[i]) / 3;
        EXPECT_NEAR(ex, ev[i], 1e-6 * ev[i]);
    }
}

TEST(ModelSpectra, HalfTwistedCircleHasNoZeroMode)
{
    const auto S = circle_spectrum(2 * pi, 0.5);
    EXPECT_EQ(zero_modes(S, 0), 0);
    auto ev = eigenvalues(S, 1, 7.0);
    auto fd1 = fd_eigenvalues(200, 2 * pi, "periodic", 0.5), fd2 = fd_eigenvalues(400, 2 * pi, "periodic", 0.5);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR((4 * fd2[i] - fd1[i]) / 3, ev[i], 1e-6 * ev[i]);
    EXPECT_NEAR(ev[0], 0.25, 1e-14);
}

TEST(ModelSpectra, IntegerShiftOfHolonomy)
{
    auto a = eigenvalues(circle_spectrum(1.3, 0.0), 0, 500), b = eigenvalues(circle_spectrum(1.3, 1.0), 0, 500);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(ModelSpectra, IntervalSpectraMatchFiniteDifferences)
{
    const auto abs = interval_spectrum(1.0, Boundary::absolute), rel = interval_spectrum(1.0, Boundary::relative);
    auto n0 = eigenvalues(abs, 0, 200), d0 = eigenvalues(rel, 0, 200);
    EXPECT_EQ(n0[0], 0.0);
    EXPECT_NEAR(d0[0], pi * pi, 1e-12);
    auto fn1 = fd_eigenvalues(200, 1.0, "neumann"), fn2 = fd_eigenvalues(400, 1.0, "neumann");
    auto fd1 = fd_eigenvalues(199, 1.0, "dirichlet"), fd2 = fd_eigenvalues(399, 1.0, "dirichlet");
    for (int i = 1; i < 4; ++i) EXPECT_NEAR((4 * fn2[i] - fn1[i]) / 3, n0[i], 1e-5 * n0[i]);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR((4 * fd2[i] - fd1[i]) / 3, d0[i], 1e-5 * d0[i]);
    // degree swap
    EXPECT_EQ(eigenvalues(rel, 1, 200), n0);
    EXPECT_EQ(eigenvalues(abs, 1, 200), d0);
}

TEST(ModelSpectra, ProductSpectrumMatchesEnumeration)
{
    const double LY = 1.0, al = 0.3, a = 1.7;
    auto P = product_spectrum(circle_spectrum(LY, al), interval_spectrum(a, Boundary::absolute));
    std::vector<double> brute;
    for (int k = -20; k <= 20; ++k)
        for (int j = 0; j <= 20; ++j) brute.push_back(std::pow(2 * pi * (k + al) / LY, 2) + std::pow(pi * j / a, 2));
    std::sort(brute.begin(), brute.end());
    const double cap = 300.0;
    std::vector<double> b2;
    for (double v : brute)
        if (v <= cap) b2.push_back(v);
    auto ev = eigenvalues(P, 0, cap);
    ASSERT_EQ(ev.size(), b2.size());
    for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(ev[i], b2[i], 1e-9);
    EXPECT_THROW(interval_spectrum(0.0, Boundary::absolute), validation_error);
}

TEST(ModelSpectra, TorusDegreeOneDoublesDegreeZero)
{
    auto T = product_spectrum(circle_spectrum(1.0, 0.0), circle_spectrum(2.0, 0.0));
    auto e0 = eigenvalues(T, 0, 200), e1 = eigenvalues(T, 1, 200);
    EXPECT_EQ(e1.size(), 2 * e0.size());
    EXPECT_EQ(zero_modes(T, 1), 2);
}

TEST(ModelSpectra, ZetaClosedForms)
{
    EXPECT_NEAR(zeta_log_det(circle_spectrum(2 * pi, 0.0), 0).value, 2 * std::log(2 * pi), 1e-12);
    for (double L : {1.0, 2 * pi, 0.3})
        EXPECT_NEAR(zeta_log_det(circle_spectrum(L, 0.25), 0).value, std::log(2.0), 1e-12);
    EXPECT_NEAR(zeta_log_det(interval_spectrum(1.0, Boundary::relative), 0).value, std::log(2.0), 1e-12);
    EXPECT_NEAR(zeta_log_det(interval_spectrum(3.0, Boundary::absolute), 0).value, std::log(6.0), 1e-12);
}

TEST(ModelSpectra, MellinAgreesWithHurwitzOnOneIndexFamilies)
{
    for (auto f : {ArithmeticFamily{0, 0.0, {{2.0, 0.3, true, 0}}, 1}, ArithmeticFamily{0, 0.0, {{0.7, 0.0, true, 0}}, 1},
                   ArithmeticFamily{0, 0.0, {{3.1, 0.0, false, 0}}, 2}, ArithmeticFamily{0, 0.0, {{3.1, 0.0, false, 1}}, 1},
                   ArithmeticFamily{0, 0.0, {{1.3, 0.5, false, 0}}, 1}}) {
        const double hz = family_log_det(f).value;
        EXPECT_NEAR(detail::mellin_log_det(f, 40), hz, 1e-11);
    }
}

TEST(ModelSpectra, MassiveCircleDeterminant)
{
    for (double m : {0.3, 1.0, 4.0})
        for (double al : {0.0, 0.2}) {
            const double LY = 1.4;
            ArithmeticFamily f{0, m * m, {{2 * pi / LY, al, true, 0}}, 1};
            EXPECT_NEAR(family_log_det(f).value, massive_circle_log_det(m, LY, al), 1e-10) << m << " " << al;
        }
}

TEST(ModelSpectra, FlatTorusMatchesEtaProduct)
{
    for (auto [L1, L2] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.5}, std::pair{0.7, 0.4}}) {
        auto T = product_spectrum(circle_spectrum(L2, 0.0), circle_spectrum(L1, 0.0));
        EXPECT_NEAR(zeta_log_det(T, 0).value, eta_torus_log_det(L1, L2), 1e-9) << L1 << " " << L2;
    }
}

TEST(ModelSpectra, TwistedProductsMatchMassiveCircleSums)
{
    // sum over the axial index of the massive circle determinant, linear part zeta-regularized
    const double LY = 1.0, al = 0.3;
    for (double a : {1.0, 1.5, 3.0}) {
        double dir = -pi * LY / (12 * a);
        for (int j = 1; j < 2000; ++j) dir += massive_circle_log_det(pi * j / a, LY, al) - pi * j / a * LY;
        const double neu = dir + std::log(4 * std::pow(std::sin(pi * al), 2));
        auto Yc = circle_spectrum(LY, al);
        auto Pd = product_spectrum(Yc, interval_spectrum(a, Boundary::relative));
        auto Pn = product_spectrum(Yc, interval_spectrum(a, Boundary::absolute));
        EXPECT_NEAR(zeta_log_det(Pd, 0).value, dir, 1e-9);
        EXPECT_NEAR(zeta_log_det(Pn, 0).value, neu, 1e-9);
    }
}

TEST(ModelSpectra, AnalyticTorsionOfModels)
{
    for (double al : {0.25, 1.0 / 3, 0.5}) {
        const double ex = std::log(2 * std::sin(pi * al));
        EXPECT_NEAR(analytic_torsion_log(circle_spectrum(1.0, al)).value, ex, 1e-12);
        auto Yc = circle_spectrum(1.0, al);
        EXPECT_NEAR(analytic_torsion_log(product_spectrum(Yc, interval_spectrum(1.3, Boundary::absolute))).value, ex, 1e-8);
        EXPECT_NEAR(analytic_torsion_log(product_spectrum(Yc, interval_spectrum(0.8, Boundary::relative))).value, -ex, 1e-8);
        EXPECT_NEAR(analytic_torsion_log(product_spectrum(Yc, circle_spectrum(2.0, 0.0))).value, 0.0, 1e-12);
    }
    EXPECT_NEAR(analytic_torsion_log(interval_spectrum(2.0, Boundary::absolute)).value, 0.5 * std::log(4.0), 1e-12);
    EXPECT_NEAR(analytic_torsion_log(circle_spectrum(3.0, 0.0)).value, std::log(3.0), 1e-12);
}

TEST(ModelSpectra, ContinuationIsStableUnderTruncationDoubling)
{
    auto P = product_spectrum(circle_spectrum(1.0, 0.3), interval_spectrum(1.5, Boundary::absolute));
    auto a = zeta_log_det(P, 1, 4096), b = zeta_log_det(P, 1, 8192);
    EXPECT_LE(std::abs(a.value - b.value), std::max(a.error, 1e-13));
    EXPECT_EQ(b.truncation, 8192);
}

TEST(ModelSpectra, UnsupportedOneSidedRangeIsRejected)
{
    ArithmeticFamily f{0, 0.0, {{1.0, 0.3, true, 0}, {1.0, 0.2, false, 0}}, 1};
    EXPECT_THROW(family_log_det(f), validation_error);
}

TEST(ModelSpectra, HeatSupertraceEqualsEulerCharacteristic)
{
    auto T = product_spectrum(circle_spectrum(1.0, 0.3), circle_spectrum(2.0, 0.0));
    for (double t : {1e-3, 0.1, 1.0, 10.0}) {
        EXPECT_NEAR(heat_supertrace(circle_spectrum(1.0, 0.0), t), 0.0, 1e-12);
        EXPECT_NEAR(heat_supertrace(T, t), 0.0, 1e-9 * (1 + 1 / t));
    }
    // boundary model tends to chi = 1
    auto I = interval_spectrum(1.0, Boundary::absolute);
    EXPECT_NEAR(heat_supertrace(I, 1e-4), 1.0, 1e-12);
}

TEST(ModelSpectra, WeightedSupertraceLimitsAndEnumeration)
{
    EXPECT_NEAR(weighted_heat_supertrace(circle_spectrum(1.0, 0.3), 200.0), 0.0, 1e-12);
    EXPECT_NEAR(weighted_heat_supertrace(circle_spectrum(1.0, 0.0), 200.0), -0.5, 1e-12);
    auto T = product_spectrum(circle_spectrum(1.0, 0.3), circle_spectrum(1.7, 0.0));
    const double t = 1.0;
    double brute = 0.0;
    for (int p = 1; p <= 2; ++p) {
        const double w = (p % 2 ? -1.0 : 1.0) * 0.5 * p;
        for (double l : eigenvalues(T, p, 4.0 * 40.0 / t)) brute += w * (1 - t * l / 2) * std::exp(-t * l / 4);
    }
    EXPECT_NEAR(weighted_heat_supertrace(T, t), brute, 1e-12);
    // a boundary model against enumeration too
    auto P = product_spectrum(circle_spectrum(1.0, 0.3), interval_spectrum(1.2, Boundary::relative));
    brute = 0.0;
    for (int p = 1; p <= 2; ++p) {
        const double w = (p % 2 ? -1.0 : 1.0) * 0.5 * p;
        for (double l : eigenvalues(P, p, 4.0 * 40.0 / 0.05)) brute += w * (1 - 0.05 * l / 2) * std::exp(-0.05 * l / 4);
    }
    EXPECT_NEAR(weighted_heat_supertrace(P, 0.05), brute, 1e-10);
}

TEST(ModelSpectra, TimeSplitAdditivity)
{
    auto M = ModelFibration::torus_model(1.0, 0.3, 1.0, 1.5);
    auto ts = time_split_contributions(M, 2.0);
    EXPECT_NEAR(ts.S + ts.L, ts.full, 1e-12);
    EXPECT_NEAR(ts.split_time, std::pow(2.0, 1.5), 1e-14);
    auto C = ModelFibration::circle_model(1.0, 1.0);
    auto tc = time_split_contributions(C, 1.0);
    EXPECT_NEAR(tc.S + tc.L, tc.full, 1e-10);
}
