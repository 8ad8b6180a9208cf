#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "adiabatic.hpp"
#include "errors.hpp"
#include "metric_complex.hpp"
#include "model_spectra.hpp"
#include "numerics.hpp"
#include "simplicial.hpp"

namespace torsionlab {

// Reduce a holonomy phase to [0, 1); integer phases are rejected because the cut fiber is then not acyclic.
inline double reduce_twist(double alpha)
{
    require(std::isfinite(alpha), "alpha must be finite");
    double a = alpha - std::floor(alpha);
    if (a < 1e-12 || a > 1.0 - 1e-12)
        throw validation_error("alpha = " + std::to_string(alpha) +
                               " is an integer: the twisted cohomology of the cut fiber does not vanish "
                               "(acyclicity hypothesis on Y fails)");
    return a;
}

// The terms are reported as Ray-Singer log T. The gluing identity is evaluated with the torsion-form
// sign, T = -log T, under which the sequence torsion T_f and the metric anomalies carry the signs used
// below (the sequence graded H(Z2,Y) -> H(Z) -> H(Z1)).
constexpr double torsion_form_sign = -1.0;

struct GluingReport {
    std::string model;
    double L = 0.0, R = 0.0, alpha = 0.0;
    int rank = 1;
    double logT_Z = 0.0, logT_abs = 0.0, logT_rel = 0.0;
    double T_f = 0.0;
    double euler_term = 0.0;
    double left_side = 0.0; // logT_Z - logT_abs - logT_rel
    double residual = 0.0;  // torsion_form_sign * left_side - euler_term - T_f
    double error_budget = 0.0;
    long truncation = 0;
};

// Simplicial models with the collar edges next to Y lengthened by R, so every piece gains 2R.
inline Triangulation stretched_circle(double L1, double L2, double R, int edges_per_arc = 4)
{
    require(edges_per_arc >= 1 && L1 > 0 && L2 > 0 && R >= 0, "stretched_circle: bad parameters");
    const int n = edges_per_arc;
    std::vector<double> len;
    for (int i = 0; i < n; ++i) len.push_back(L1 / n);
    for (int i = 0; i < n; ++i) len.push_back(L2 / n);
    for (int i : {0, n - 1, n, 2 * n - 1}) len[i] += R;
    return Triangulation::circle_with_lengths(len, n);
}

inline Triangulation stretched_torus(double a1, double a2, double L_Y, double R, int columns_per_strip = 2, int ny = 4)
{
    require(columns_per_strip >= 1 && a1 > 0 && a2 > 0 && R >= 0, "stretched_torus: bad parameters");
    const int n = columns_per_strip;
    std::vector<double> w;
    for (int i = 0; i < n; ++i) w.push_back(a1 / n);
    for (int i = 0; i < n; ++i) w.push_back(a2 / n);
    for (int i : {0, n - 1, n, 2 * n - 1}) w[i] += R;
    return Triangulation::torus_with_widths(w, n, ny, L_Y);
}

namespace detail {

inline FlatBundle model_bundle(const Triangulation& T, const ModelFibration& M)
{
    if (M.alpha == 0.0) return FlatBundle::trivial(T, M.rank);
    require(M.rank == 1, "model bundle: twisted bundles are rank one");
    return FlatBundle::holonomy_phase(T, M.kind == ModelFibration::Kind::circle ? "seam" : "seam_y", M.alpha);
}

inline Triangulation model_triangulation(const ModelFibration& M, int mesh)
{
    if (M.kind == ModelFibration::Kind::circle) return stretched_circle(M.len1, M.len2, M.R, mesh);
    return stretched_torus(M.len1, M.len2, M.L_Y, M.R, mesh);
}

inline GluingReport evaluate_gluing(const ModelFibration& M, long K, int mesh)
{
    GluingReport g;
    g.model = M.kind == ModelFibration::Kind::circle ? "circle" : "torus";
    g.L = M.kind == ModelFibration::Kind::circle ? M.len1 : M.L_Y;
    g.R = M.R;
    g.alpha = M.alpha;
    g.rank = M.rank;
    g.truncation = K;
    const auto z = analytic_torsion_log(M.whole(), K);
    const auto z1 = analytic_torsion_log(M.piece1_absolute(), K);
    const auto z2 = analytic_torsion_log(M.piece2_relative(), K);
    g.logT_Z = z.value;
    g.logT_abs = z1.value;
    g.logT_rel = z2.value;
    const auto T = model_triangulation(M, mesh);
    g.T_f = mayer_vietoris(T, model_bundle(T, M)).torsion();
    g.euler_term = 0.5 * std::log(2.0) * M.rank * M.chi_Y();
    g.left_side = g.logT_Z - g.logT_abs - g.logT_rel;
    g.residual = torsion_form_sign * g.left_side - g.euler_term - g.T_f;
    const double scale = std::abs(g.logT_Z) + std::abs(g.logT_abs) + std::abs(g.logT_rel) + std::abs(g.T_f) + 1.0;
    g.error_budget = z.error + z1.error + z2.error + 64.0 * std::numeric_limits<double>::epsilon() * scale;
    return g;
}

} // namespace detail

// Circle of two equal arcs of length L cut at two points, trivial bundle of the given rank.
inline GluingReport run_circle_gluing(double L, double R = 0.0, int rank = 1, long K = 10000, int edges_per_arc = 4)
{
    require(L > 0, "circle gluing: L must be positive");
    require(rank >= 1, "circle gluing: rank must be positive");
    auto M = ModelFibration::circle_model(L, L).stretched(R);
    M.rank = rank;
    return detail::evaluate_gluing(M, K, edges_per_arc);
}

// Flat torus (circle of length L_Y with holonomy alpha) x (circle of length a1 + a2), cut along two circles.
inline GluingReport run_torus_gluing(double L_Y, double alpha, double a1, double a2, double R = 0.0, long K = 10000,
                                     int columns_per_strip = 2)
{
    require(L_Y > 0 && a1 > 0 && a2 > 0, "torus gluing: lengths must be positive");
    const auto M = ModelFibration::torus_model(L_Y, reduce_twist(alpha), a1, a2).stretched(R);
    return detail::evaluate_gluing(M, K, columns_per_strip);
}

struct AdiabaticSweepRow {
    double R = 0.0;
    double logT_Z = 0.0, logT_abs = 0.0, logT_rel = 0.0, T_f = 0.0;
    double combination = 0.0;      // torsion_form_sign * (logT_Z - logT_abs - logT_rel) - T_f
    double metric_variation = 0.0; // f~(h_ref, h_R) on the sequence metrics, H(Z2,Y) at even positions
    double consistency = 0.0;      // T_f(h_ref) - T_f(h_R) + f~(h_ref, h_R)
    double error_budget = 0.0;
};

struct AdiabaticSweep {
    std::string model;
    std::vector<AdiabaticSweepRow> rows;
    double max_deviation = 0.0;      // of the combination across R
    double max_term_deviation = 0.0; // largest spread of any single torsion term
    double max_consistency = 0.0;
};

// Stretches the model over R_grid (first entry is the reference metric for f~).
inline AdiabaticSweep adiabatic_invariance_sweep(const ModelFibration& model, const std::vector<double>& R_grid,
                                                 long K = 10000, int mesh = 4)
{
    require(!R_grid.empty(), "adiabatic sweep: empty R grid");
    for (double R : R_grid) require(R >= 0, "adiabatic sweep: R must be nonnegative");
    struct Point {
        GluingReport g;
        MayerVietorisData mv;
    };
    const auto pts = parallel_map(R_grid.size(), [&](std::size_t i) {
        const auto M = model.stretched(R_grid[i]);
        const auto T = detail::model_triangulation(M, mesh);
        return Point{detail::evaluate_gluing(M, K, mesh), mayer_vietoris(T, detail::model_bundle(T, M))};
    });

    AdiabaticSweep out;
    out.model = model.kind == ModelFibration::Kind::circle ? "circle" : "torus";
    const auto& ref = pts.front().mv;
    const auto metrics = [](const MayerVietorisData& mv) {
        std::vector<CMat> h;
        for (const auto& g : mv.groups) h.push_back(g.gram);
        return h;
    };
    const auto h_ref = metrics(ref);
    for (const auto& pt : pts) {
        // the class bases are combinatorial, so only the Grams may move
        require(pt.mv.maps.size() == ref.maps.size(), "adiabatic sweep: sequence shape changed");
        for (std::size_t k = 0; k < ref.maps.size(); ++k)
            if (pt.mv.maps[k].size() != ref.maps[k].size() ||
                (pt.mv.maps[k].size() && (pt.mv.maps[k] - ref.maps[k]).norm() > 1e-10))
                throw numerical_error("adiabatic sweep: cohomology maps depend on R");
        AdiabaticSweepRow r;
        r.R = pt.g.R;
        r.logT_Z = pt.g.logT_Z;
        r.logT_abs = pt.g.logT_abs;
        r.logT_rel = pt.g.logT_rel;
        r.T_f = pt.g.T_f;
        r.combination = torsion_form_sign * (r.logT_Z - r.logT_abs - r.logT_rel) - r.T_f;
        // mayer_vietoris puts H^0(Z) at position 0; shifting by one flips the parity
        r.metric_variation = -metric_variation_term(h_ref, metrics(pt.mv));
        r.consistency = ref.torsion() - r.T_f + r.metric_variation;
        r.error_budget = pt.g.error_budget;
        out.rows.push_back(r);
    }
    auto spread = [&](auto field) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& r : out.rows) {
            lo = std::min(lo, r.*field);
            hi = std::max(hi, r.*field);
        }
        return hi - lo;
    };
    out.max_deviation = spread(&AdiabaticSweepRow::combination);
    out.max_term_deviation = std::max({spread(&AdiabaticSweepRow::logT_Z), spread(&AdiabaticSweepRow::logT_abs),
                                       spread(&AdiabaticSweepRow::logT_rel), spread(&AdiabaticSweepRow::T_f)});
    for (const auto& r : out.rows) out.max_consistency = std::max(out.max_consistency, std::abs(r.consistency));
    return out;
}

struct SequenceLimitRow {
    double R = 0.0;
    double T_f = 0.0;
    int sequence_dim = 0; // total dimension of the Mayer-Vietoris sequence
    int census = 0;       // sum over p of h^p(Z1) + h^p(Z2, Y)
    int lattice_zero_modes = 0;
};

struct SequenceLimit {
    double alpha = 0.0;
    std::vector<SequenceLimitRow> rows;
    double log_slope = 0.0; // fitted d T_f / d log R
};

// T_f of the stretched Mayer-Vietoris sequence for the torus model, with the zero-mode census of the
// twisted lattice cylinder. alpha = 0 is allowed here as a negative control.
inline SequenceLimit torsion_sequence_limit(const ModelFibration& model, const std::vector<double>& R_grid,
                                            int columns_per_strip = 2, const GapScanConfig& lattice = {})
{
    require(model.kind == ModelFibration::Kind::torus, "torsion_sequence_limit: needs the torus model");
    require(R_grid.size() >= 2, "torsion_sequence_limit: need at least two R values");
    for (double R : R_grid) require(R > 0, "torsion_sequence_limit: R must be positive");
    GapScanConfig cfg = lattice;
    cfg.L_Y = model.L_Y;
    cfg.alpha = model.alpha;
    cfg.allow_integer_twist = true;
    const auto gaps = gap_scan(cfg, R_grid);
    SequenceLimit out;
    out.alpha = model.alpha;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < R_grid.size(); ++i) {
        const auto M = model.stretched(R_grid[i]);
        const auto T = detail::model_triangulation(M, columns_per_strip);
        const auto mv = mayer_vietoris(T, detail::model_bundle(T, M));
        SequenceLimitRow r;
        r.R = R_grid[i];
        r.T_f = mv.torsion();
        r.sequence_dim = mv.sequence.complex.total_dim();
        for (int b : mv.h1) r.census += b;
        for (int b : mv.h2) r.census += b;
        r.lattice_zero_modes = gaps[i].zero_modes;
        out.rows.push_back(r);
        x.push_back(std::log(r.R));
        y.push_back(r.T_f);
    }
    out.log_slope = fit_line(x, y).slope;
    return out;
}

} // namespace torsionlab
