#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "adiabatic.hpp"
#include "gluing.hpp"
#include "heat_parametrix.hpp"
#include "model_spectra.hpp"

#ifndef TORSIONLAB_VERSION
#define TORSIONLAB_VERSION "unknown"
#endif

namespace torsionlab {

using TableCell = std::variant<std::string, long, double>;

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v); // no "-0"
    return buf;
}

inline std::string format_cell(const TableCell& c)
{
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    if (const auto* i = std::get_if<long>(&c)) return std::to_string(*i);
    return format_double(std::get<double>(c));
}

struct OutputTable {
    std::string experiment;
    std::vector<std::string> columns;
    std::vector<std::vector<TableCell>> rows;
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();

    void add_row(std::vector<TableCell> r)
    {
        require(r.size() == columns.size(), "OutputTable: row width does not match the schema");
        rows.push_back(std::move(r));
    }
};

// Conventions every output carries.
inline nlohmann::ordered_json convention_metadata()
{
    nlohmann::ordered_json m;
    m["version"] = TORSIONLAB_VERSION;
    m["torsion_sign"] = "log T = -1/2 sum_p (-1)^p p log det' Delta_p (Ray-Singer); gluing identity uses -log T";
    m["sequence_grading"] = "H^p(Z2,Y), H^p(Z), H^p(Z1) at positions 3p, 3p+1, 3p+2";
    m["cohomology_metric"] = "L2 Grams of cell-harmonic class representatives, volume-weighted cochain metric";
    m["zeta_backend"] = "Hurwitz for one-index families, Mellin/theta otherwise";
    m["float_format"] = "%.17g";
    return m;
}

inline OutputTable make_table(std::string experiment, std::vector<std::string> columns)
{
    OutputTable t;
    t.experiment = std::move(experiment);
    t.columns = std::move(columns);
    t.metadata = convention_metadata();
    t.metadata["experiment"] = t.experiment;
    return t;
}

// Metadata as leading '#' lines, then a header and the rows.
inline void write_csv(std::ostream& os, const OutputTable& t)
{
    for (const auto& [k, v] : t.metadata.items())
        os << "# " << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_cell(r[i]);
        os << '\n';
    }
}

inline nlohmann::ordered_json to_json(const OutputTable& t)
{
    nlohmann::ordered_json j;
    j["metadata"] = t.metadata;
    j["columns"] = t.columns;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (const auto& c : r) std::visit([&](const auto& v) { row.push_back(v); }, c);
        j["rows"].push_back(row);
    }
    j["summary"] = t.summary;
    return j;
}

inline OutputTable gluing_table(const std::vector<GluingReport>& reports)
{
    auto t = make_table("gluing", {"model", "L", "R", "alpha", "logT_Z", "logT_abs", "logT_rel", "T_f", "euler_term",
                                   "residual", "error_budget"});
    double worst = 0.0;
    for (const auto& g : reports) {
        t.add_row({g.model, g.L, g.R, g.alpha, g.logT_Z, g.logT_abs, g.logT_rel, g.T_f, g.euler_term, g.residual,
                   g.error_budget});
        worst = std::max(worst, std::abs(g.residual));
    }
    if (!reports.empty()) t.metadata["truncation_K"] = reports.front().truncation;
    t.summary["max_abs_residual"] = worst;
    return t;
}

inline OutputTable adiabatic_sweep_table(const AdiabaticSweep& s, long K)
{
    auto t = make_table("adiabatic-sweep", {"model", "R", "logT_Z", "logT_abs", "logT_rel", "T_f", "combination",
                                            "metric_variation", "consistency", "error_budget"});
    t.metadata["truncation_K"] = K;
    for (const auto& r : s.rows)
        t.add_row({s.model, r.R, r.logT_Z, r.logT_abs, r.logT_rel, r.T_f, r.combination, r.metric_variation,
                   r.consistency, r.error_budget});
    t.summary["max_deviation"] = s.max_deviation;
    t.summary["max_term_deviation"] = s.max_term_deviation;
    t.summary["max_consistency"] = s.max_consistency;
    return t;
}

inline OutputTable gap_table(const std::vector<GapReport>& reports, const GapScanConfig& cfg)
{
    auto t = make_table("gap-scan", {"R", "alpha", "mesh", "zero_modes", "min_positive", "window_count"});
    t.metadata["L_Y"] = cfg.L_Y;
    t.metadata["N_Y"] = cfg.N_Y;
    t.metadata["axial_model"] = cfg.ends == Boundary::closed ? "circle of length 2R" : "segment, absolute/relative ends";
    std::vector<double> x, y;
    for (const auto& g : reports) {
        t.add_row({g.R, g.alpha, g.mesh, static_cast<long>(g.zero_modes), g.min_positive,
                   static_cast<long>(g.window_count)});
        x.push_back(std::log(g.R));
        y.push_back(std::log(g.min_positive));
    }
    if (reports.size() >= 2) t.summary["fitted_exponent"] = -fit_line(x, y).slope;
    return t;
}

inline OutputTable parametrix_table(const ParametrixReport& rep, Piece piece)
{
    auto t = make_table("parametrix-scan", {"R", "t", "x", "x_prime", "component", "true_kernel", "parametrix", "error",
                                            "duhamel_residual"});
    t.metadata["piece"] = piece_name(piece);
    for (const auto& s : rep.samples) {
        t.add_row({s.R, s.t, s.x, s.xp, std::string("one"), s.true_kernel.one, s.parametrix.one, s.error.one,
                   s.residual.one});
        t.add_row({s.R, s.t, s.x, s.xp, std::string("dx"), s.true_kernel.dx, s.parametrix.dx, s.error.dx,
                   s.residual.dx});
    }
    t.summary["max_residual"] = rep.max_residual;
    t.summary["max_diagonal_error"] = rep.max_diagonal_error;
    t.summary["support_ok"] = rep.support_ok;
    t.summary["slope_kernel_error"] = rep.slope_kernel_error;
    t.summary["slope_error_term"] = rep.slope_error_term;
    return t;
}

inline OutputTable time_split_table(const std::vector<double>& R_grid, const std::vector<TimeSplit>& rows)
{
    auto t = make_table("time-split", {"R", "S", "L", "full", "split_time", "error"});
    for (std::size_t i = 0; i < rows.size(); ++i)
        t.add_row({R_grid[i], rows[i].S, rows[i].L, rows[i].full, rows[i].split_time, rows[i].error});
    return t;
}

} // namespace torsionlab
