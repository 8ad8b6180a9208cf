#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "errors.hpp"

namespace torsionlab {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline double default_rank_tol = 1e-9;

// Numerical rank: singular values above tol * largest and above an absolute floor.
inline int numerical_rank(const CMat& A, double tol = default_rank_tol, double floor = 0.0)
{
    if (A.rows() == 0 || A.cols() == 0) return 0;
    Eigen::JacobiSVD<CMat> svd(A);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol * s(0) && s(i) > floor) ++r;
    return r;
}

// Finite cochain complex C^0 -> C^1 -> ... -> C^n with Hermitian metrics.
// d[p] maps degree p to degree p+1, so d.size() == h.size() - 1.
class MetricCochainComplex {
public:
    MetricCochainComplex() = default;

    MetricCochainComplex(std::vector<CMat> d, std::vector<CMat> h) : d_(std::move(d)), h_(std::move(h))
    {
        validate();
    }

    // Complex with identity metrics.
    static MetricCochainComplex with_unit_metrics(std::vector<CMat> d, std::vector<int> dims)
    {
        std::vector<CMat> h;
        for (int m : dims) h.push_back(CMat::Identity(m, m));
        return MetricCochainComplex(std::move(d), std::move(h));
    }

    int top_degree() const { return static_cast<int>(h_.size()) - 1; }
    int dim(int p) const { return (p < 0 || p > top_degree()) ? 0 : static_cast<int>(h_[p].rows()); }
    int total_dim() const
    {
        int s = 0;
        for (const auto& m : h_) s += static_cast<int>(m.rows());
        return s;
    }

    // d_p : C^p -> C^{p+1}; zero matrix outside the range.
    CMat d(int p) const
    {
        if (p < 0 || p >= top_degree()) return CMat::Zero(dim(p + 1), dim(p));
        return d_[p];
    }
    const CMat& metric(int p) const { return h_.at(p); }
    const std::vector<CMat>& differentials() const { return d_; }
    const std::vector<CMat>& metrics() const { return h_; }

    // Cholesky factor L_p with h_p = L_p L_p^*.
    CMat cholesky_factor(int p) const
    {
        if (dim(p) == 0) return CMat(0, 0);
        Eigen::LLT<CMat> llt(h_[p]);
        return llt.matrixL();
    }

    // Differential written in h-orthonormal coordinates: L_{p+1}^* d_p L_p^{-*}.
    CMat orthonormal_d(int p) const
    {
        const int m0 = dim(p), m1 = dim(p + 1);
        if (m0 == 0 || m1 == 0) return CMat::Zero(m1, m0);
        CMat L0 = cholesky_factor(p), L1 = cholesky_factor(p + 1);
        CMat X = L1.adjoint() * d(p);
        // X * L0^{-*}: solve L0^* from the right.
        CMat Y = L0.triangularView<Eigen::Lower>().solve(X.adjoint());
        return Y.adjoint();
    }

    // Adjoint d_p^* = h_p^{-1} d_p^dagger h_{p+1}.
    CMat adjoint_d(int p) const
    {
        if (dim(p) == 0 || dim(p + 1) == 0) return CMat::Zero(dim(p), dim(p + 1));
        Eigen::LLT<CMat> llt(h_[p]);
        return llt.solve(d(p).adjoint() * h_[p + 1]);
    }

private:
    void validate() const
    {
        require(!h_.empty(), "MetricCochainComplex: need at least one degree");
        require(d_.size() + 1 == h_.size(), "MetricCochainComplex: need one differential per adjacent degree pair");
        for (std::size_t p = 0; p < h_.size(); ++p) {
            const CMat& h = h_[p];
            require(h.rows() == h.cols(), "MetricCochainComplex: metric at degree " + std::to_string(p) + " not square");
            if (h.rows() == 0) continue;
            const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
            require((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                    "MetricCochainComplex: metric at degree " + std::to_string(p) + " not Hermitian");
            Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
            require(es.eigenvalues().minCoeff() > 0.0,
                    "MetricCochainComplex: metric at degree " + std::to_string(p) + " not positive definite");
        }
        for (std::size_t p = 0; p < d_.size(); ++p) {
            require(d_[p].rows() == h_[p + 1].rows() && d_[p].cols() == h_[p].rows(),
                    "MetricCochainComplex: differential " + std::to_string(p) + " has wrong shape");
        }
        for (std::size_t p = 0; p + 1 < d_.size(); ++p) {
            if (d_[p + 1].rows() == 0 || d_[p].cols() == 0) continue;
            const double dd = (d_[p + 1] * d_[p]).cwiseAbs().maxCoeff();
            const double scale = std::max(1.0, d_[p + 1].cwiseAbs().maxCoeff() * d_[p].cwiseAbs().maxCoeff());
            require(dd <= 1e-12 * scale, "MetricCochainComplex: d^2 != 0 at degree " + std::to_string(p));
        }
    }

    std::vector<CMat> d_;
    std::vector<CMat> h_;
};

struct HodgeData {
    // Per degree: h-orthonormal harmonic basis (columns, original coordinates),
    // Gram of that basis, positive Laplacian eigenvalues (ascending).
    std::vector<CMat> harmonic;
    std::vector<CMat> gram;
    std::vector<std::vector<double>> spectrum;
    std::vector<int> betti;
};

// Hodge decomposition via the Laplacian in h-orthonormal coordinates.
inline HodgeData hodge_decompose(const MetricCochainComplex& C, double rank_tol = default_rank_tol)
{
    HodgeData out;
    const int n = C.top_degree();
    std::vector<CMat> dh(n + 1);
    std::vector<int> rk(n + 1, 0);
    for (int p = 0; p <= n; ++p) {
        dh[p] = C.orthonormal_d(p);
        rk[p] = numerical_rank(dh[p], rank_tol);
    }
    for (int p = 0; p <= n; ++p) {
        const int m = C.dim(p);
        const int prev_rank = p > 0 ? rk[p - 1] : 0;
        const int b = m - rk[p] - prev_rank;
        if (b < 0) throw numerical_error("hodge_decompose: negative Betti number at degree " + std::to_string(p));
        out.betti.push_back(b);
        if (m == 0) {
            out.harmonic.emplace_back(0, 0);
            out.gram.emplace_back(0, 0);
            out.spectrum.emplace_back();
            continue;
        }
        CMat lap = dh[p].adjoint() * dh[p];
        if (p > 0) lap += dh[p - 1] * dh[p - 1].adjoint();
        lap = 0.5 * (lap + lap.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMat> es(lap);
        if (es.info() != Eigen::Success)
            throw numerical_error("hodge_decompose: eigensolver failed at degree " + std::to_string(p));
        const auto& ev = es.eigenvalues();
        const CMat& V = es.eigenvectors();
        const double scale = std::max(1.0, lap.cwiseAbs().maxCoeff());
        const double resid = (lap * V - V * ev.asDiagonal()).cwiseAbs().maxCoeff();
        if (resid > 1e-10 * scale)
            throw numerical_error("hodge_decompose: eigenvector residual too large at degree " + std::to_string(p));
        std::vector<double> pos;
        for (int i = b; i < m; ++i) {
            if (ev(i) <= 0.0)
                throw numerical_error("hodge_decompose: non-positive eigenvalue above the kernel at degree " +
                                      std::to_string(p));
            pos.push_back(ev(i));
        }
        out.spectrum.push_back(pos);
        // back to original coordinates: x = L^{-*} xhat
        CMat L = C.cholesky_factor(p);
        CMat Vh = V.leftCols(b);
        CMat X = L.adjoint().triangularView<Eigen::Upper>().solve(Vh);
        out.harmonic.push_back(X);
        out.gram.push_back(X.adjoint() * C.metric(p) * X);
    }
    return out;
}

// log tau = -1/2 sum_p (-1)^p p log det' Delta_p.
inline double torsion_from_spectra(const std::vector<std::vector<double>>& spectrum)
{
    double s = 0.0;
    for (std::size_t p = 0; p < spectrum.size(); ++p) {
        double ld = 0.0;
        for (double lam : spectrum[p]) ld += std::log(lam);
        s += ((p % 2) ? -1.0 : 1.0) * static_cast<double>(p) * ld;
    }
    return -0.5 * s;
}

inline double torsion_scalar(const MetricCochainComplex& C) { return torsion_from_spectra(hodge_decompose(C).spectrum); }

inline double log_det_hpd(const CMat& h)
{
    if (h.rows() == 0) return 0.0;
    Eigen::LLT<CMat> llt(h);
    if (llt.info() != Eigen::Success) throw validation_error("log_det_hpd: matrix not positive definite");
    const CMat& L = llt.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i) s += 2.0 * std::log(std::real(L(i, i)));
    return s;
}

// 1/2 sum_p (-1)^p [log det h'_p - log det h_p].
inline double metric_variation_term(const std::vector<CMat>& h, const std::vector<CMat>& h2)
{
    require(h.size() == h2.size(), "metric_variation_term: degree count mismatch");
    double s = 0.0;
    for (std::size_t p = 0; p < h.size(); ++p) {
        require(h[p].rows() == h2[p].rows() && h[p].cols() == h2[p].cols(),
                "metric_variation_term: shape mismatch at degree " + std::to_string(p));
        s += ((p % 2) ? -1.0 : 1.0) * (log_det_hpd(h2[p]) - log_det_hpd(h[p]));
    }
    return 0.5 * s;
}

struct ExactSequenceWithMetrics {
    MetricCochainComplex complex;
    std::vector<std::string> labels;
    bool empty() const { return complex.total_dim() == 0; }
};

// Regrade a long exact sequence V_0 -> V_1 -> ... -> V_{n} of cohomology groups
// (Gram matrices as metrics, maps in the same bases) into an acyclic complex.
inline ExactSequenceWithMetrics sequence_from_cohomology(const std::vector<CMat>& grams, const std::vector<CMat>& maps,
                                                         std::vector<std::string> labels = {},
                                                         double rank_tol = default_rank_tol)
{
    require(!grams.empty(), "sequence_from_cohomology: no groups");
    require(maps.size() + 1 == grams.size(), "sequence_from_cohomology: need one map between consecutive groups");
    for (std::size_t i = 0; i < maps.size(); ++i)
        require(maps[i].rows() == grams[i + 1].rows() && maps[i].cols() == grams[i].rows(),
                "sequence_from_cohomology: map " + std::to_string(i) + " has wrong shape");
    // maps that are roundoff relative to the whole sequence count as zero
    double scale = 0.0;
    for (const auto& m : maps)
        if (m.size()) scale = std::max(scale, m.cwiseAbs().maxCoeff());
    const double floor = rank_tol * scale;
    // composites vanish and ranks add up
    for (std::size_t i = 0; i < grams.size(); ++i) {
        const int m = static_cast<int>(grams[i].rows());
        const int r_in = i > 0 ? numerical_rank(maps[i - 1], rank_tol, floor) : 0;
        const int r_out = i < maps.size() ? numerical_rank(maps[i], rank_tol, floor) : 0;
        if (i > 0 && i < maps.size() && maps[i].rows() > 0 && maps[i - 1].cols() > 0) {
            const double c = (maps[i] * maps[i - 1]).cwiseAbs().maxCoeff();
            const double sc = std::max(1.0, maps[i].cwiseAbs().maxCoeff() * maps[i - 1].cwiseAbs().maxCoeff());
            if (c > 1e-9 * sc)
                throw numerical_error("sequence_from_cohomology: consecutive maps do not compose to zero at position " +
                                      std::to_string(i));
        }
        if (r_in + r_out != m)
            throw numerical_error("sequence_from_cohomology: sequence not exact at position " + std::to_string(i) +
                                  " (rank defect " + std::to_string(m - r_in - r_out) + ")");
    }
    if (labels.empty())
        for (std::size_t i = 0; i < grams.size(); ++i) labels.push_back("V" + std::to_string(i));
    std::vector<CMat> clean = maps;
    for (auto& m : clean)
        if (numerical_rank(m, rank_tol, floor) == 0) m.setZero();
    return {MetricCochainComplex(std::move(clean), grams), std::move(labels)};
}

// JSON round trip: {"dims": [...], "d": [[[re,im],...] row-major], "h": [...]}.
namespace detail {
inline nlohmann::json matrix_to_json(const CMat& A)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < A.cols(); ++j) r.push_back({A(i, j).real(), A(i, j).imag()});
        rows.push_back(r);
    }
    return rows;
}

inline CMat matrix_from_json(const nlohmann::json& j, int rows, int cols)
{
    CMat A = CMat::Zero(rows, cols);
    require(static_cast<int>(j.size()) == rows, "complex JSON: row count mismatch");
    for (int i = 0; i < rows; ++i) {
        require(static_cast<int>(j[i].size()) == cols, "complex JSON: column count mismatch");
        for (int k = 0; k < cols; ++k) A(i, k) = cplx(j[i][k][0].get<double>(), j[i][k][1].get<double>());
    }
    return A;
}
} // namespace detail

inline nlohmann::json to_json(const MetricCochainComplex& C)
{
    nlohmann::json j;
    std::vector<int> dims;
    for (int p = 0; p <= C.top_degree(); ++p) dims.push_back(C.dim(p));
    j["degrees"] = {0, C.top_degree()};
    j["dims"] = dims;
    j["d"] = nlohmann::json::array();
    for (const auto& d : C.differentials()) j["d"].push_back(detail::matrix_to_json(d));
    j["h"] = nlohmann::json::array();
    for (const auto& h : C.metrics()) j["h"].push_back(detail::matrix_to_json(h));
    return j;
}

inline MetricCochainComplex complex_from_json(const nlohmann::json& j)
{
    const auto dims = j.at("dims").get<std::vector<int>>();
    std::vector<CMat> d, h;
    for (std::size_t p = 0; p < dims.size(); ++p) h.push_back(detail::matrix_from_json(j.at("h")[p], dims[p], dims[p]));
    for (std::size_t p = 0; p + 1 < dims.size(); ++p)
        d.push_back(detail::matrix_from_json(j.at("d")[p], dims[p + 1], dims[p]));
    return MetricCochainComplex(std::move(d), std::move(h));
}

} // namespace torsionlab
