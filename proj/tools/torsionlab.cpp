#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <torsionlab/adiabatic.hpp>
#include <torsionlab/errors.hpp>
#include <torsionlab/gluing.hpp>
#include <torsionlab/heat_parametrix.hpp>
#include <torsionlab/model_spectra.hpp>
#include <torsionlab/output.hpp>
#include <torsionlab/simplicial.hpp>

using namespace torsionlab;

namespace {

// JSON config: nested objects select subcommands, e.g. {"glue": {"torus": {"alpha": 0.3}}}.
class ConfigJSON : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const nlohmann::json& v)
    {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_float()) return format_double(v.get<double>());
        return v.dump();
    }

    static void collect(const nlohmann::json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out)
    {
        if (!j.is_object()) throw CLI::ConversionError("config: expected a JSON object");
        for (const auto& [key, v] : j.items()) {
            if (v.is_object()) {
                auto p = parents;
                p.push_back(key);
                collect(v, p, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (v.is_array())
                for (const auto& e : v) item.inputs.push_back(scalar(e));
            else
                item.inputs.push_back(scalar(v));
            out.push_back(item);
        }
    }
};

struct Output {
    std::string csv_path, json_path;

    void emit(const OutputTable& t) const
    {
        if (csv_path.empty() || csv_path == "-") {
            write_csv(std::cout, t);
        } else {
            std::ofstream f(csv_path);
            if (!f) throw validation_error("cannot open " + csv_path + " for writing");
            write_csv(f, t);
        }
        if (!json_path.empty()) {
            std::ofstream f(json_path);
            if (!f) throw validation_error("cannot open " + json_path + " for writing");
            f << to_json(t).dump(2) << '\n';
        }
    }
};

std::vector<double> positive_grid(const std::vector<double>& g, const std::string& name, bool allow_zero = false)
{
    require(!g.empty(), name + ": grid must be nonempty");
    for (double v : g)
        require(std::isfinite(v) && (allow_zero ? v >= 0 : v > 0),
                name + (allow_zero ? ": values must be nonnegative" : ": values must be positive"));
    return g;
}

void positive(double v, const std::string& name) { require(std::isfinite(v) && v > 0, name + " must be positive"); }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gluing and adiabatic-limit experiments for analytic torsion"};
    app.config_formatter(std::make_shared<ConfigJSON>());
    app.set_config("--config", "", "JSON configuration file; command-line flags override it");
    app.require_subcommand(1);
    app.fallthrough();

    Output out;
    int threads = 0;
    app.add_option("-o,--output", out.csv_path, "CSV output file (default: stdout)");
    app.add_option("--json", out.json_path, "JSON summary file");
    app.add_option("--threads", threads, "Worker cap (same as TORSIONLAB_THREADS)")->check(CLI::PositiveNumber);

    std::function<OutputTable()> run;

    // glue circle | glue torus
    auto* glue = app.add_subcommand("glue", "Gluing identity on a model");
    glue->require_subcommand(1);
    struct {
        std::vector<double> length{1.0}, r{0.0};
        int rank = 1, mesh = 4;
        long K = 10000;
    } gc;
    auto* circle = glue->add_subcommand("circle", "Circle cut at two points into equal arcs");
    circle->add_option("--length", gc.length, "Arc length L (list)")->delimiter(',');
    circle->add_option("--r", gc.r, "Collar stretch R (list)")->delimiter(',');
    circle->add_option("--rank", gc.rank, "Rank of the trivial bundle");
    circle->add_option("--K", gc.K, "Zeta truncation");
    circle->add_option("--mesh", gc.mesh, "Edges per arc");
    circle->callback([&] {
        run = [&] {
            positive_grid(gc.length, "length");
            positive_grid(gc.r, "r", true);
            require(gc.K >= 16 && gc.mesh >= 1, "K and mesh out of range");
            std::vector<std::pair<double, double>> pts;
            for (double L : gc.length)
                for (double R : gc.r) pts.emplace_back(L, R);
            const auto reps = parallel_map(pts.size(), [&](std::size_t i) {
                return run_circle_gluing(pts[i].first, pts[i].second, gc.rank, gc.K, gc.mesh);
            });
            return gluing_table(reps);
        };
    });

    struct {
        double ly = 1.0, alpha = 0.5, a1 = 1.0, a2 = 1.5;
        std::vector<double> r{0.0};
        long K = 10000;
    } gt;
    auto* torus = glue->add_subcommand("torus", "Flat torus with twisted transverse circle cut along two circles");
    torus->add_option("--ly", gt.ly, "Transverse circle length");
    torus->add_option("--alpha", gt.alpha, "Holonomy phase (reduced mod 1; integers rejected)");
    torus->add_option("--a1", gt.a1, "Width of the absolute piece");
    torus->add_option("--a2", gt.a2, "Width of the relative piece");
    torus->add_option("--r", gt.r, "Collar stretch R (list)")->delimiter(',');
    torus->add_option("--K", gt.K, "Zeta truncation");
    torus->callback([&] {
        run = [&] {
            positive_grid(gt.r, "r", true);
            const auto reps = parallel_map(gt.r.size(), [&](std::size_t i) {
                return run_torus_gluing(gt.ly, gt.alpha, gt.a1, gt.a2, gt.r[i], gt.K);
            });
            return gluing_table(reps);
        };
    });

    // sweep adiabatic
    auto* sweep = app.add_subcommand("sweep", "Parameter sweeps");
    sweep->require_subcommand(1);
    struct {
        std::string model = "circle";
        double length = 1.0, length2 = 0.0, ly = 1.0, alpha = 0.3, a1 = 1.0, a2 = 1.5;
        std::vector<double> r{0.0, 1.0, 2.0, 4.0};
        long K = 10000;
        int mesh = 0;
    } sa;
    auto* adiabatic = sweep->add_subcommand("adiabatic", "Stretch invariance of the gluing combination");
    adiabatic->add_option("--model", sa.model, "circle or torus")->check(CLI::IsMember({"circle", "torus"}));
    adiabatic->add_option("--length", sa.length, "Circle model: first arc length");
    adiabatic->add_option("--length2", sa.length2, "Circle model: second arc length (default: equal arcs)");
    adiabatic->add_option("--ly", sa.ly, "Torus model: transverse circle length");
    adiabatic->add_option("--alpha", sa.alpha, "Torus model: holonomy phase");
    adiabatic->add_option("--a1", sa.a1, "Torus model: absolute strip width");
    adiabatic->add_option("--a2", sa.a2, "Torus model: relative strip width");
    adiabatic->add_option("--r", sa.r, "Stretch grid; the first value is the reference")->delimiter(',');
    adiabatic->add_option("--K", sa.K, "Zeta truncation");
    adiabatic->add_option("--mesh", sa.mesh, "Cells per piece in the simplicial model");
    adiabatic->callback([&] {
        run = [&] {
            positive_grid(sa.r, "r", true);
            ModelFibration M;
            if (sa.model == "circle") {
                positive(sa.length, "length");
                M = ModelFibration::circle_model(sa.length, sa.length2 > 0 ? sa.length2 : sa.length);
            } else {
                M = ModelFibration::torus_model(sa.ly, reduce_twist(sa.alpha), sa.a1, sa.a2);
            }
            const int mesh = sa.mesh > 0 ? sa.mesh : (sa.model == "circle" ? 4 : 2);
            return adiabatic_sweep_table(adiabatic_invariance_sweep(M, sa.r, sa.K, mesh), sa.K);
        };
    });

    // gap-scan
    GapScanConfig gcfg;
    std::vector<double> gap_r{2.0, 4.0, 8.0};
    std::string gap_ends = "closed";
    auto* gap = app.add_subcommand("gap-scan", "Spectral gap of the twisted lattice cylinder");
    gap->add_option("--alpha", gcfg.alpha, "Transverse holonomy phase (integers run as a negative control)");
    gap->add_option("--r", gap_r, "Half-lengths R (list)")->delimiter(',');
    gap->add_option("--mesh", gcfg.mesh, "Axial mesh width");
    gap->add_option("--ny", gcfg.N_Y, "Transverse lattice nodes");
    gap->add_option("--ly", gcfg.L_Y, "Transverse circle length");
    gap->add_option("--ends", gap_ends, "closed (axial circle) or segment (absolute/relative ends)")
        ->check(CLI::IsMember({"closed", "segment"}));
    gap->callback([&] {
        run = [&] {
            positive_grid(gap_r, "r");
            positive(gcfg.mesh, "mesh");
            positive(gcfg.L_Y, "ly");
            require(gcfg.N_Y >= 3, "ny must be at least 3");
            require(std::isfinite(gcfg.alpha), "alpha must be finite");
            gcfg.alpha -= std::floor(gcfg.alpha);
            gcfg.ends = gap_ends == "closed" ? Boundary::closed : Boundary::absolute;
            gcfg.allow_integer_twist = true;
            auto t = gap_table(gap_scan(gcfg, gap_r), gcfg);
            if (gcfg.alpha == 0.0) t.metadata["note"] = "integer twist: negative control, cross-section not acyclic";
            return t;
        };
    });

    // parametrix-scan
    struct {
        std::vector<double> r{2.0, 4.0}, t{0.5, 1.0, 2.0, 4.0};
        std::string piece = "whole";
        int s_nodes = 64;
        bool no_duhamel = false;
    } ps;
    auto* par = app.add_subcommand("parametrix-scan", "Heat-kernel parametrix and Duhamel identity");
    par->add_option("--r", ps.r, "R values, at least 1 (list)")->delimiter(',');
    par->add_option("--t", ps.t, "Times (list)")->delimiter(',');
    par->add_option("--piece", ps.piece, "whole, absolute or relative")
        ->check(CLI::IsMember({"whole", "absolute", "relative"}));
    par->add_option("--s-nodes", ps.s_nodes, "Gauss-Legendre nodes of the Duhamel time integral");
    par->add_flag("--no-duhamel", ps.no_duhamel, "Skip the Duhamel convolution");
    par->callback([&] {
        run = [&] {
            positive_grid(ps.r, "r");
            positive_grid(ps.t, "t");
            ParametrixScanOptions opt;
            opt.piece = ps.piece == "whole" ? Piece::whole
                                            : (ps.piece == "absolute" ? Piece::absolute_piece : Piece::relative_piece);
            opt.s_nodes = ps.s_nodes;
            opt.duhamel = !ps.no_duhamel;
            return parametrix_table(parametrix_error_scan(ps.r, ps.t, opt), opt.piece);
        };
    });

    // time-split
    struct {
        std::string model = "torus";
        double length = 1.0, ly = 1.0, alpha = 0.3, a1 = 1.0, a2 = 1.5, eps = 0.5, t_min = 1e-8;
        std::vector<double> r{2.0, 4.0, 8.0};
    } ts;
    auto* split = app.add_subcommand("time-split", "Small- and large-time parts of the torsion difference");
    split->add_option("--model", ts.model, "circle or torus")->check(CLI::IsMember({"circle", "torus"}));
    split->add_option("--length", ts.length, "Circle model: arc length");
    split->add_option("--ly", ts.ly, "Torus model: transverse circle length");
    split->add_option("--alpha", ts.alpha, "Torus model: holonomy phase");
    split->add_option("--a1", ts.a1, "Torus model: absolute strip width");
    split->add_option("--a2", ts.a2, "Torus model: relative strip width");
    split->add_option("--r", ts.r, "R values (list)")->delimiter(',');
    split->add_option("--eps", ts.eps, "Split exponent: the split time is R^(2 - eps)");
    split->add_option("--t-min", ts.t_min, "Lower cut of the time integral");
    split->callback([&] {
        run = [&] {
            positive_grid(ts.r, "r", true);
            const auto M = ts.model == "circle" ? ModelFibration::circle_model(ts.length, ts.length)
                                                : ModelFibration::torus_model(ts.ly, reduce_twist(ts.alpha), ts.a1, ts.a2);
            const auto rows = parallel_map(
                ts.r.size(), [&](std::size_t i) { return time_split_contributions(M, ts.r[i], ts.eps, ts.t_min); });
            auto t = time_split_table(ts.r, rows);
            t.metadata["model"] = ts.model;
            t.metadata["eps"] = ts.eps;
            t.metadata["t_min"] = ts.t_min;
            return t;
        };
    });

    // cheeger-muller
    struct {
        std::vector<double> alpha{0.25, 1.0 / 3.0, 0.5};
        std::vector<int> k{3, 12};
        double length = 1.0;
        long K = 10000;
    } cm;
    auto* cmc = app.add_subcommand("cheeger-muller", "Analytic vs combinatorial torsion of the twisted circle");
    cmc->add_option("--alpha", cm.alpha, "Holonomy phases (list)")->delimiter(',');
    cmc->add_option("--k", cm.k, "Subdivisions (list)")->delimiter(',');
    cmc->add_option("--length", cm.length, "Circle length");
    cmc->add_option("--K", cm.K, "Zeta truncation");
    cmc->callback([&] {
        run = [&] {
            positive(cm.length, "length");
            auto t = make_table("cheeger-muller", {"alpha", "L", "k", "analytic", "reidemeister", "difference"});
            double worst = 0.0;
            for (double a0 : cm.alpha) {
                const double a = reduce_twist(a0);
                const double an = analytic_torsion_log(circle_spectrum(cm.length, a), cm.K).value;
                for (int k : cm.k) {
                    require(k >= 2, "k must be at least 2");
                    const auto T = Triangulation::circle(k, 0, cm.length);
                    const double re = reidemeister_torsion(T, FlatBundle::holonomy_phase(T, "seam", a));
                    t.add_row({a, cm.length, static_cast<long>(k), an, re, an - re});
                    worst = std::max(worst, std::abs(an - re));
                }
            }
            t.metadata["truncation_K"] = cm.K;
            t.summary["max_abs_difference"] = worst;
            return t;
        };
    });

    // spectrum
    struct {
        std::string kind = "circle";
        double length = 1.0, alpha = 0.0, lambda_max = 100.0;
        long K = 10000;
    } sp;
    auto* spec = app.add_subcommand("spectrum", "Hodge Laplacian spectra of the model fibers");
    spec->add_option("--kind", sp.kind, "circle, interval-abs or interval-rel")
        ->check(CLI::IsMember({"circle", "interval-abs", "interval-rel"}));
    spec->add_option("--length", sp.length, "Length");
    spec->add_option("--alpha", sp.alpha, "Holonomy phase (circle)");
    spec->add_option("--lambda-max", sp.lambda_max, "Largest eigenvalue listed");
    spec->add_option("--K", sp.K, "Zeta truncation");
    spec->callback([&] {
        run = [&] {
            positive(sp.length, "length");
            positive(sp.lambda_max, "lambda-max");
            require(std::isfinite(sp.alpha), "alpha must be finite");
            const double a = sp.alpha - std::floor(sp.alpha);
            const auto S = sp.kind == "circle" ? circle_spectrum(sp.length, a)
                                               : interval_spectrum(sp.length, sp.kind == "interval-abs" ? Boundary::absolute
                                                                                                        : Boundary::relative);
            auto t = make_table("spectrum", {"degree", "index", "eigenvalue"});
            t.metadata["kind"] = sp.kind;
            t.metadata["truncation_K"] = sp.K;
            for (int p = 0; p <= S.top_degree; ++p) {
                const auto ev = eigenvalues(S, p, sp.lambda_max);
                for (std::size_t i = 0; i < ev.size(); ++i)
                    t.add_row({static_cast<long>(p), static_cast<long>(i), ev[i]});
                t.summary["zero_modes_" + std::to_string(p)] = zero_modes(S, p);
                t.summary["log_det_" + std::to_string(p)] = zeta_log_det(S, p, sp.K).value;
            }
            t.summary["log_torsion"] = analytic_torsion_log(S, sp.K).value;
            return t;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (threads > 0) setenv("TORSIONLAB_THREADS", std::to_string(threads).c_str(), 1);
        if (!run) throw validation_error("no experiment selected");
        out.emit(run());
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
