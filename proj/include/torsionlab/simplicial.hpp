#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "metric_complex.hpp"
#include "numerics.hpp"

namespace torsionlab {

enum class Part { Z1, Z2, Y };

struct Cell {
    std::vector<std::pair<int, int>> boundary; // (face index, incidence sign)
    Part part = Part::Z1;
    std::vector<double> barycenter;
    double volume = 1.0;
    // edges and rectangles: corner points in a chart (used by the de Rham map)
    std::vector<double> start, end;
};

// Regular cell complex of dimension <= 2 with a splitting Z = Z1 u_Y Z2.
class Triangulation {
public:
    int dim = 0;
    std::vector<std::vector<Cell>> cells;
    std::map<std::string, std::vector<int>> edge_sets; // named edge lists, e.g. seams

    int count(int p) const { return (p < 0 || p > dim) ? 0 : static_cast<int>(cells[p].size()); }

    void validate() const
    {
        require(dim >= 0 && dim <= 2 && static_cast<int>(cells.size()) == dim + 1, "Triangulation: dimension must be 0, 1 or 2");
        for (int p = 1; p <= dim; ++p) {
            for (std::size_t c = 0; c < cells[p].size(); ++c) {
                for (auto [f, s] : cells[p][c].boundary) {
                    require(f >= 0 && f < count(p - 1) && (s == 1 || s == -1),
                            "Triangulation: bad boundary entry in cell " + std::to_string(c) + " of dimension " +
                                std::to_string(p));
                    const Part fp = cells[p - 1][f].part, cp = cells[p][c].part;
                    const bool ok = fp == cp || fp == Part::Y;
                    require(ok, "Triangulation: face of a " + part_name(cp) + " cell tagged " + part_name(fp));
                }
            }
        }
        // boundary of boundary vanishes on integer chains
        for (int p = 2; p <= dim; ++p) {
            for (std::size_t c = 0; c < cells[p].size(); ++c) {
                std::map<int, int> acc;
                for (auto [f, s] : cells[p][c].boundary)
                    for (auto [g, t] : cells[p - 1][f].boundary) acc[g] += s * t;
                for (auto [g, v] : acc)
                    require(v == 0, "Triangulation: boundary of boundary nonzero at cell " + std::to_string(c));
            }
        }
        // cells adjacent to both sides must lie on the cut
        for (int p = 0; p < dim; ++p) {
            std::vector<int> side(count(p), 0);
            for (const Cell& c : cells[p + 1]) {
                for (auto [f, s] : c.boundary) {
                    if (c.part == Part::Z1) side[f] |= 1;
                    if (c.part == Part::Z2) side[f] |= 2;
                }
            }
            for (int f = 0; f < count(p); ++f)
                require(side[f] != 3 || cells[p][f].part == Part::Y,
                        "Triangulation: cell " + std::to_string(f) + " of dimension " + std::to_string(p) +
                            " touches both sides but is not tagged Y");
        }
    }

    // Vertex set of a cell.
    std::vector<int> vertices(int p, int c) const
    {
        if (p == 0) return {c};
        std::set<int> vs;
        for (auto [f, s] : cells[p][c].boundary)
            for (int v : vertices(p - 1, f)) vs.insert(v);
        return {vs.begin(), vs.end()};
    }

    // Edge set of a cell's closure (p >= 1).
    std::vector<int> edges(int p, int c) const
    {
        if (p == 1) return {c};
        std::set<int> es;
        for (auto [f, s] : cells[p][c].boundary)
            for (int e : edges(p - 1, f)) es.insert(e);
        return {es.begin(), es.end()};
    }

    int base_vertex(int p, int c) const { return vertices(p, c).front(); }

    // Oriented edge endpoints (tail, head).
    std::pair<int, int> edge_ends(int e) const
    {
        int tail = -1, head = -1;
        for (auto [v, s] : cells[1][e].boundary) (s > 0 ? head : tail) = v;
        require(tail >= 0 && head >= 0, "Triangulation: edge " + std::to_string(e) + " needs one head and one tail");
        return {tail, head};
    }

    static std::string part_name(Part p) { return p == Part::Z1 ? "Z1" : (p == Part::Z2 ? "Z2" : "Y"); }

    // Circle of length L1 + L2 made of n1 edges (Z1 arc) and n2 edges (Z2 arc).
    // The cut Y is the two vertices 0 and n1. With n2 == 0 the circle is not split.
    static Triangulation circle(int n1, int n2, double L1, double L2 = 0.0)
    {
        require(n1 >= 1 && n2 >= 0 && n1 + n2 >= 2, "circle: need at least two edges");
        require(L1 > 0 && (n2 == 0 || L2 > 0), "circle: lengths must be positive");
        std::vector<double> len;
        for (int i = 0; i < n1; ++i) len.push_back(L1 / n1);
        for (int i = 0; i < n2; ++i) len.push_back(L2 / n2);
        return circle_with_lengths(len, n2 > 0 ? n1 : -1);
    }

    // Circle with explicit edge lengths; edges [0, cut) form Z1, the rest Z2. cut < 0: unsplit.
    static Triangulation circle_with_lengths(const std::vector<double>& len, int cut)
    {
        const int N = static_cast<int>(len.size());
        require(N >= 2, "circle: need at least two edges");
        Triangulation T;
        T.dim = 1;
        T.cells.resize(2);
        double x = 0.0;
        std::vector<double> xs;
        for (int i = 0; i < N; ++i) {
            require(len[i] > 0, "circle: edge lengths must be positive");
            xs.push_back(x);
            x += len[i];
        }
        const double total = x;
        for (int i = 0; i < N; ++i) {
            Cell v;
            v.barycenter = {xs[i]};
            if (cut < 0) v.part = Part::Z1;
            else if (i == 0 || i == cut) v.part = Part::Y;
            else v.part = i < cut ? Part::Z1 : Part::Z2;
            T.cells[0].push_back(v);
        }
        for (int i = 0; i < N; ++i) {
            Cell e;
            e.boundary = {{i, -1}, {(i + 1) % N, 1}};
            e.part = (cut < 0 || i < cut) ? Part::Z1 : Part::Z2;
            e.start = {xs[i]};
            e.end = {i + 1 < N ? xs[i + 1] : total};
            e.barycenter = {0.5 * (e.start[0] + e.end[0])};
            e.volume = len[i];
            T.cells[1].push_back(e);
        }
        T.edge_sets["seam"] = {N - 1};
        T.validate();
        return T;
    }

    // Interval [0, L] with n edges, not split.
    static Triangulation interval(int n, double L)
    {
        require(n >= 1 && L > 0, "interval: need n >= 1 and L > 0");
        Triangulation T;
        T.dim = 1;
        T.cells.resize(2);
        for (int i = 0; i <= n; ++i) {
            Cell v;
            v.barycenter = {L * i / n};
            T.cells[0].push_back(v);
        }
        for (int i = 0; i < n; ++i) {
            Cell e;
            e.boundary = {{i, -1}, {i + 1, 1}};
            e.start = {L * i / n};
            e.end = {L * (i + 1) / n};
            e.barycenter = {0.5 * (e.start[0] + e.end[0])};
            e.volume = L / n;
            T.cells[1].push_back(e);
        }
        T.validate();
        return T;
    }

    // Rectangular torus [0, a1 + a2] x [0, LY] with n1 + n2 columns and ny rows.
    // Z1 = columns [0, n1), Z2 = the rest; the cut is the two vertical circles x = 0, x = a1.
    // Edge sets "seam_x" (horizontal edges closing the x circle) and "seam_y".
    static Triangulation torus(int n1, int n2, int ny, double a1, double a2, double LY)
    {
        std::vector<double> w;
        for (int i = 0; i < n1; ++i) w.push_back(a1 / n1);
        for (int i = 0; i < n2; ++i) w.push_back(a2 / n2);
        return torus_with_widths(w, n1, ny, LY);
    }

    static Triangulation torus_with_widths(const std::vector<double>& widths, int cut, int ny, double LY)
    {
        const int N = static_cast<int>(widths.size());
        require(N >= 2 && ny >= 2 && cut >= 1 && cut < N && LY > 0, "torus: bad lattice parameters");
        Triangulation T;
        T.dim = 2;
        T.cells.resize(3);
        std::vector<double> xs;
        double x = 0.0;
        for (double w : widths) {
            require(w > 0, "torus: widths must be positive");
            xs.push_back(x);
            x += w;
        }
        const double total = x;
        const double hy = LY / ny;
        auto vid = [&](int i, int j) { return ((i % N + N) % N) * ny + ((j % ny + ny) % ny); };
        auto col_part = [&](int i) { return (i == 0 || i == cut) ? Part::Y : (i < cut ? Part::Z1 : Part::Z2); };
        auto strip_part = [&](int i) { return i < cut ? Part::Z1 : Part::Z2; };
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < ny; ++j) {
                Cell v;
                v.barycenter = {xs[i], j * hy};
                v.part = col_part(i);
                T.cells[0].push_back(v);
            }
        // horizontal edges h(i,j): (i,j) -> (i+1,j); vertical v(i,j): (i,j) -> (i,j+1)
        auto hid = [&](int i, int j) { return ((i % N + N) % N) * ny + ((j % ny + ny) % ny); };
        auto vidx = [&](int i, int j) { return N * ny + ((i % N + N) % N) * ny + ((j % ny + ny) % ny); };
        T.cells[1].resize(2 * N * ny);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < ny; ++j) {
                Cell h;
                h.boundary = {{vid(i, j), -1}, {vid(i + 1, j), 1}};
                h.part = strip_part(i);
                h.start = {xs[i], j * hy};
                h.end = {i + 1 < N ? xs[i + 1] : total, j * hy};
                h.barycenter = {0.5 * (h.start[0] + h.end[0]), j * hy};
                h.volume = widths[i];
                T.cells[1][hid(i, j)] = h;
                if (i == N - 1) T.edge_sets["seam_x"].push_back(hid(i, j));
                Cell v;
                v.boundary = {{vid(i, j), -1}, {vid(i, j + 1), 1}};
                v.part = col_part(i);
                v.start = {xs[i], j * hy};
                v.end = {xs[i], (j + 1) * hy};
                v.barycenter = {xs[i], (j + 0.5) * hy};
                v.volume = hy;
                T.cells[1][vidx(i, j)] = v;
                if (j == ny - 1) T.edge_sets["seam_y"].push_back(vidx(i, j));
            }
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < ny; ++j) {
                Cell s;
                s.boundary = {{hid(i, j), 1}, {vidx(i + 1, j), 1}, {hid(i, j + 1), -1}, {vidx(i, j), -1}};
                s.part = strip_part(i);
                s.start = {xs[i], j * hy};
                s.end = {i + 1 < N ? xs[i + 1] : total, (j + 1) * hy};
                s.barycenter = {0.5 * (s.start[0] + s.end[0]), 0.5 * (s.start[1] + s.end[1])};
                s.volume = widths[i] * hy;
                T.cells[2].push_back(s);
            }
        T.validate();
        return T;
    }
};

// Flat bundle: transport g_e : F_tail -> F_head per edge, fiber metric per vertex.
struct FlatBundle {
    int rank = 1;
    std::vector<CMat> transport;
    std::vector<CMat> metric;

    static FlatBundle trivial(const Triangulation& T, int rank = 1)
    {
        require(rank >= 1, "FlatBundle: rank must be positive");
        FlatBundle F;
        F.rank = rank;
        F.transport.assign(T.count(1), CMat::Identity(rank, rank));
        F.metric.assign(T.count(0), CMat::Identity(rank, rank));
        return F;
    }

    // Rank-one bundle with transport lambda on the named edge set and 1 elsewhere.
    static FlatBundle with_phase(const Triangulation& T, const std::string& edge_set, cplx lambda)
    {
        FlatBundle F = trivial(T, 1);
        auto it = T.edge_sets.find(edge_set);
        require(it != T.edge_sets.end(), "FlatBundle: unknown edge set " + edge_set);
        for (int e : it->second) F.transport[e] = CMat::Constant(1, 1, lambda);
        return F;
    }

    static FlatBundle holonomy_phase(const Triangulation& T, const std::string& edge_set, double alpha)
    {
        return with_phase(T, edge_set, std::polar(1.0, 2.0 * pi * alpha));
    }
};

enum class Subcomplex { Z, Z1, Z2_rel_Y, Z2, Y };
enum class MetricMode { cell, volume };

struct TwistedComplex {
    MetricCochainComplex complex;
    std::vector<std::vector<int>> cells; // global cell index per local cell, per degree
    int rank = 1;
};

namespace detail {

inline bool in_subcomplex(Part p, Subcomplex which)
{
    switch (which) {
    case Subcomplex::Z: return true;
    case Subcomplex::Z1: return p != Part::Z2;
    case Subcomplex::Z2: return p != Part::Z1;
    case Subcomplex::Z2_rel_Y: return p == Part::Z2;
    case Subcomplex::Y: return p == Part::Y;
    }
    return false;
}

// Transport from the base vertex of a cell to each of its vertices, by breadth-first search
// over the cell's edges. Checks consistency on every edge (flatness).
inline std::map<int, CMat> cell_transports(const Triangulation& T, const FlatBundle& F, int p, int c)
{
    std::map<int, CMat> P;
    const int r = F.rank;
    const auto verts = T.vertices(p, c);
    P[verts.front()] = CMat::Identity(r, r);
    if (p == 0) return P;
    const auto es = T.edges(p, c);
    bool grown = true;
    while (grown) {
        grown = false;
        for (int e : es) {
            auto [tail, head] = T.edge_ends(e);
            const CMat& g = F.transport[e];
            if (P.count(tail) && !P.count(head)) {
                P[head] = g * P[tail];
                grown = true;
            } else if (P.count(head) && !P.count(tail)) {
                P[tail] = g.inverse() * P[head];
                grown = true;
            }
        }
    }
    for (int e : es) {
        auto [tail, head] = T.edge_ends(e);
        const double err = (P.at(head) - F.transport[e] * P.at(tail)).cwiseAbs().maxCoeff();
        if (err > 1e-12 * std::max(1.0, P.at(head).cwiseAbs().maxCoeff()))
            throw validation_error("flat bundle: holonomy around " + std::to_string(p) + "-cell " + std::to_string(c) +
                                   " is not the identity");
    }
    return P;
}

inline int binomial(int n, int k)
{
    int r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Closure of each top cell, per dimension.
inline std::vector<std::vector<std::set<int>>> top_closures(const Triangulation& T)
{
    std::vector<std::vector<std::set<int>>> out(T.count(T.dim), std::vector<std::set<int>>(T.dim + 1));
    for (int c = 0; c < T.count(T.dim); ++c) {
        out[c][T.dim].insert(c);
        for (int p = T.dim; p > 0; --p)
            for (int f : out[c][p])
                for (auto [g, s] : T.cells[p][f].boundary) out[c][p - 1].insert(g);
    }
    return out;
}

// Volume weights: each top cell spreads its volume over its p-faces, one share per
// parallel class; exact L^2 for 1-D complexes and rectangular lattices.
inline std::vector<std::vector<double>> volume_weights(const Triangulation& T, Subcomplex which)
{
    Subcomplex host = which == Subcomplex::Z2_rel_Y ? Subcomplex::Z2 : which;
    std::vector<std::vector<double>> w(T.dim + 1);
    for (int p = 0; p <= T.dim; ++p) w[p].assign(T.count(p), 0.0);
    const auto clos = top_closures(T);
    const int top = host == Subcomplex::Y ? T.dim - 1 : T.dim;
    if (top == T.dim) {
        for (int c = 0; c < T.count(T.dim); ++c) {
            if (!in_subcomplex(T.cells[T.dim][c].part, host)) continue;
            const double vol = T.cells[T.dim][c].volume;
            for (int p = 0; p <= T.dim; ++p) {
                const double share = static_cast<double>(clos[c][p].size()) / binomial(T.dim, p);
                for (int f : clos[c][p]) {
                    const double vf = T.cells[p][f].volume;
                    w[p][f] += vol / (vf * vf * share);
                }
            }
        }
    } else {
        // the cut itself: treat its top cells as the pieces
        require(top >= 0, "volume weights: empty cut");
        for (int c = 0; c < T.count(top); ++c) {
            if (T.cells[top][c].part != Part::Y) continue;
            const double vol = T.cells[top][c].volume;
            std::vector<std::set<int>> cl(top + 1);
            cl[top].insert(c);
            for (int p = top; p > 0; --p)
                for (int f : cl[p])
                    for (auto [g, s] : T.cells[p][f].boundary) cl[p - 1].insert(g);
            for (int p = 0; p <= top; ++p) {
                const double share = static_cast<double>(cl[p].size()) / binomial(top, p);
                for (int f : cl[p]) w[p][f] += vol / (T.cells[p][f].volume * T.cells[p][f].volume * share);
            }
        }
        if (top == 0)
            for (int f = 0; f < T.count(0); ++f)
                if (T.cells[0][f].part == Part::Y) w[0][f] = 1.0;
    }
    return w;
}

} // namespace detail

// Twisted cochain complex of a subcomplex (or of the pair (Z2, Y)).
inline TwistedComplex twisted_cochain_complex(const Triangulation& T, const FlatBundle& F, Subcomplex which,
                                              MetricMode mode = MetricMode::cell)
{
    require(static_cast<int>(F.transport.size()) == T.count(1), "twisted_cochain_complex: bundle/edge count mismatch");
    require(static_cast<int>(F.metric.size()) == T.count(0), "twisted_cochain_complex: bundle/vertex count mismatch");
    const int r = F.rank;
    TwistedComplex out;
    out.rank = r;
    const int top = which == Subcomplex::Y ? T.dim - 1 : T.dim;
    out.cells.resize(std::max(top, 0) + 1);
    std::vector<std::map<int, int>> local(T.dim + 1);
    for (int p = 0; p <= top; ++p)
        for (int c = 0; c < T.count(p); ++c)
            if (detail::in_subcomplex(T.cells[p][c].part, which)) {
                local[p][c] = static_cast<int>(out.cells[p].size());
                out.cells[p].push_back(c);
            }
    std::vector<std::vector<double>> w;
    if (mode == MetricMode::volume) w = detail::volume_weights(T, which);
    std::vector<CMat> d, h;
    for (int p = 0; p <= top; ++p) {
        const int m = static_cast<int>(out.cells[p].size());
        CMat hp = CMat::Zero(m * r, m * r);
        for (int i = 0; i < m; ++i) {
            const int c = out.cells[p][i];
            const double weight = mode == MetricMode::volume ? w[p][c] : 1.0;
            require(weight > 0, "twisted_cochain_complex: zero volume weight at cell " + std::to_string(c));
            hp.block(i * r, i * r, r, r) = weight * F.metric[T.base_vertex(p, c)];
        }
        h.push_back(hp);
    }
    for (int p = 0; p < top; ++p) {
        const int m0 = static_cast<int>(out.cells[p].size()), m1 = static_cast<int>(out.cells[p + 1].size());
        CMat dp = CMat::Zero(m1 * r, m0 * r);
        for (int i = 0; i < m1; ++i) {
            const int c = out.cells[p + 1][i];
            const auto P = detail::cell_transports(T, F, p + 1, c);
            for (auto [f, s] : T.cells[p + 1][c].boundary) {
                auto it = local[p].find(f);
                if (it == local[p].end()) continue; // face outside the complex (relative part)
                const int bf = T.base_vertex(p, f);
                // transport from the face's base vertex to the cell's base vertex
                dp.block(i * r, it->second * r, r, r) += static_cast<double>(s) * P.at(bf).inverse();
            }
        }
        d.push_back(dp);
    }
    // flatness of every 2-cell in the whole complex, even outside the subcomplex
    if (T.dim == 2)
        for (int c = 0; c < T.count(2); ++c) detail::cell_transports(T, F, 2, c);
    out.complex = MetricCochainComplex(std::move(d), std::move(h));
    return out;
}

// Inclusion/restriction matrix between cochain spaces of two subcomplexes at degree p:
// extension by zero from `from` into `to` when from is smaller, restriction otherwise.
inline CMat cochain_transfer(const TwistedComplex& from, const TwistedComplex& to, int p)
{
    const int r = from.rank;
    const auto& a = p < static_cast<int>(from.cells.size()) ? from.cells[p] : std::vector<int>{};
    const auto& b = p < static_cast<int>(to.cells.size()) ? to.cells[p] : std::vector<int>{};
    std::map<int, int> pos;
    for (std::size_t i = 0; i < b.size(); ++i) pos[b[i]] = static_cast<int>(i);
    CMat M = CMat::Zero(static_cast<int>(b.size()) * r, static_cast<int>(a.size()) * r);
    for (std::size_t j = 0; j < a.size(); ++j) {
        auto it = pos.find(a[j]);
        if (it != pos.end()) M.block(it->second * r, static_cast<int>(j) * r, r, r) = CMat::Identity(r, r);
    }
    return M;
}

// Cohomology of a complex described in a fixed basis of class representatives.
struct CohomologyGroup {
    std::string label;
    CMat reps;       // cocycle representatives (columns), orthonormal harmonic in the reference metric
    CMat ref_metric; // reference metric used to read off classes
    CMat gram;       // Gram matrix of the classes in the actual metric
    int degree = 0;
};

namespace detail {

inline CohomologyGroup cohomology_group(const MetricCochainComplex& ref, const MetricCochainComplex& actual, int p,
                                        std::string label)
{
    CohomologyGroup g;
    g.label = std::move(label);
    g.degree = p;
    if (p > ref.top_degree() || ref.dim(p) == 0) {
        g.reps = CMat(ref.dim(p), 0);
        g.ref_metric = CMat::Identity(ref.dim(p), ref.dim(p));
        g.gram = CMat(0, 0);
        return g;
    }
    const auto Href = hodge_decompose(ref);
    const auto Hact = hodge_decompose(actual);
    g.reps = Href.harmonic[p];
    g.ref_metric = ref.metric(p);
    const CMat& X = Hact.harmonic[p];
    const CMat& h = actual.metric(p);
    CMat proj = X.adjoint() * h * g.reps; // coordinates of the harmonic parts
    g.gram = proj.adjoint() * proj;
    return g;
}

// Map on cohomology in class bases: coordinates of [M c] for each representative c.
inline CMat class_map(const CohomologyGroup& src, const CohomologyGroup& tgt, const CMat& M)
{
    if (src.reps.cols() == 0 || tgt.reps.cols() == 0) return CMat::Zero(tgt.reps.cols(), src.reps.cols());
    return tgt.reps.adjoint() * tgt.ref_metric * (M * src.reps);
}

} // namespace detail

struct MayerVietorisData {
    TwistedComplex Z, Z1, Z2rel;
    std::vector<int> h, h1, h2; // Betti numbers of Z, Z1, (Z2, Y)
    std::vector<CohomologyGroup> groups;
    std::vector<CMat> maps;
    ExactSequenceWithMetrics sequence;

    double torsion() const { return sequence.empty() ? 0.0 : torsion_scalar(sequence.complex); }
};

// Mayer-Vietoris sequence of Z = Z1 u_Y Z2 with L^2 metrics on cohomology. Classes are read
// off with cell metrics; Grams use `mode`. Grading: H^p(Z) at 3p, H^p(Z1) at 3p + 1,
// H^{p+1}(Z2, Y) at 3p + 2. This needs H^0(Z2, Y) = 0.
inline MayerVietorisData mayer_vietoris(const Triangulation& T, const FlatBundle& F, MetricMode mode = MetricMode::volume)
{
    MayerVietorisData mv;
    mv.Z = twisted_cochain_complex(T, F, Subcomplex::Z, mode);
    mv.Z1 = twisted_cochain_complex(T, F, Subcomplex::Z1, mode);
    mv.Z2rel = twisted_cochain_complex(T, F, Subcomplex::Z2_rel_Y, mode);
    const auto refZ = twisted_cochain_complex(T, F, Subcomplex::Z, MetricMode::cell).complex;
    const auto refZ1 = twisted_cochain_complex(T, F, Subcomplex::Z1, MetricMode::cell).complex;
    const auto refZ2 = twisted_cochain_complex(T, F, Subcomplex::Z2_rel_Y, MetricMode::cell).complex;
    const int n = T.dim;

    // cochain-level short exact sequence 0 -> C(Z2,Y) -> C(Z) -> C(Z1) -> 0
    for (int p = 0; p <= n; ++p) {
        CMat J = cochain_transfer(mv.Z2rel, mv.Z, p);
        CMat I = cochain_transfer(mv.Z, mv.Z1, p);
        const int dz = mv.Z.complex.dim(p);
        const int rj = numerical_rank(J), ri = numerical_rank(I);
        if (rj != J.cols() || ri != I.rows() || rj + ri != dz || (J.size() && I.size() && (I * J).norm() > 0))
            throw numerical_error("mayer_vietoris: cochain sequence not exact at degree " + std::to_string(p));
        if (p < n) {
            CMat J1 = cochain_transfer(mv.Z2rel, mv.Z, p + 1);
            CMat I1 = cochain_transfer(mv.Z, mv.Z1, p + 1);
            if ((mv.Z.complex.d(p) * J - J1 * mv.Z2rel.complex.d(p)).norm() > 1e-12 ||
                (I1 * mv.Z.complex.d(p) - mv.Z1.complex.d(p) * I).norm() > 1e-12)
                throw numerical_error("mayer_vietoris: transfer maps are not chain maps at degree " + std::to_string(p));
        }
    }

    const auto HZ = hodge_decompose(mv.Z.complex), HZ1 = hodge_decompose(mv.Z1.complex),
               HZ2 = hodge_decompose(mv.Z2rel.complex);
    mv.h = HZ.betti;
    mv.h1 = HZ1.betti;
    mv.h2 = HZ2.betti;
    if (!mv.h2.empty() && mv.h2[0] != 0)
        throw validation_error("mayer_vietoris: H^0(Z2, Y) must vanish for this grading");

    std::vector<CMat> grams;
    std::vector<std::string> labels;
    for (int p = 0; p <= n; ++p) {
        mv.groups.push_back(detail::cohomology_group(refZ, mv.Z.complex, p, "H^" + std::to_string(p) + "(Z)"));
        mv.groups.push_back(detail::cohomology_group(refZ1, mv.Z1.complex, p, "H^" + std::to_string(p) + "(Z1)"));
        mv.groups.push_back(
            detail::cohomology_group(refZ2, mv.Z2rel.complex, p + 1, "H^" + std::to_string(p + 1) + "(Z2,Y)"));
    }
    for (const auto& g : mv.groups) {
        grams.push_back(g.gram);
        labels.push_back(g.label);
    }
    for (int p = 0; p <= n; ++p) {
        const auto& gZ = mv.groups[3 * p];
        const auto& gZ1 = mv.groups[3 * p + 1];
        const auto& gZ2 = mv.groups[3 * p + 2];
        // i*: restriction
        mv.maps.push_back(detail::class_map(gZ, gZ1, cochain_transfer(mv.Z, mv.Z1, p)));
        // connecting map: extend by zero, apply d on Z, read on Z2-only cells
        CMat delta = CMat::Zero(mv.Z2rel.complex.dim(p + 1), mv.Z1.complex.dim(p));
        if (p < n) delta = cochain_transfer(mv.Z, mv.Z2rel, p + 1) * mv.Z.complex.d(p) * cochain_transfer(mv.Z1, mv.Z, p);
        mv.maps.push_back(detail::class_map(gZ1, gZ2, delta));
        // j*: extension by zero
        if (p < n) mv.maps.push_back(detail::class_map(gZ2, mv.groups[3 * p + 3], cochain_transfer(mv.Z2rel, mv.Z, p + 1)));
    }
    mv.sequence = sequence_from_cohomology(grams, mv.maps, labels);
    return mv;
}

// Torsion of the acyclic twisted complex of Z with cell-basis metrics.
inline double reidemeister_torsion(const Triangulation& T, const FlatBundle& F)
{
    const auto C = twisted_cochain_complex(T, F, Subcomplex::Z, MetricMode::cell).complex;
    const auto H = hodge_decompose(C);
    for (std::size_t p = 0; p < H.betti.size(); ++p)
        if (H.betti[p] != 0)
            throw validation_error("reidemeister_torsion: complex is not acyclic (h^" + std::to_string(p) +
                                   " = " + std::to_string(H.betti[p]) + ")");
    return torsion_from_spectra(H.spectrum);
}

// De Rham map. The evaluator returns the form applied to the tangent at a point, already
// expressed in the fiber of the cell's base vertex; for 0-forms the tangent is empty.
using FormEvaluator = std::function<CVec(int cell, const std::vector<double>& point, const std::vector<double>& tangent)>;

inline CVec de_rham_map(const Triangulation& T, const FlatBundle& F, int degree, const FormEvaluator& form, int order = 8)
{
    require(degree >= 0 && degree <= T.dim, "de_rham_map: degree out of range");
    const int r = F.rank;
    const int m = T.count(degree);
    CVec out = CVec::Zero(m * r);
    const QuadRule& q = gauss_legendre(order);
    for (int c = 0; c < m; ++c) {
        const Cell& cell = T.cells[degree][c];
        CVec val = CVec::Zero(r);
        if (degree == 0) {
            val = form(c, cell.barycenter, {});
        } else if (degree == 1) {
            std::vector<double> tangent(cell.start.size());
            double len2 = 0.0;
            for (std::size_t k = 0; k < tangent.size(); ++k) {
                tangent[k] = cell.end[k] - cell.start[k];
                len2 += tangent[k] * tangent[k];
            }
            if (!(len2 > 0.0)) throw validation_error("de_rham_map: degenerate edge " + std::to_string(c));
            for (int i = 0; i < order; ++i) {
                const double s = 0.5 * (q.x[i] + 1.0);
                std::vector<double> pt(tangent.size());
                for (std::size_t k = 0; k < pt.size(); ++k) pt[k] = cell.start[k] + s * tangent[k];
                val += 0.5 * q.w[i] * form(c, pt, tangent);
            }
        } else {
            // axis-parallel rectangle from start to end; evaluator returns the area density
            const double wx = cell.end[0] - cell.start[0], wy = cell.end[1] - cell.start[1];
            if (!(wx > 0.0 && wy > 0.0)) throw validation_error("de_rham_map: degenerate 2-cell " + std::to_string(c));
            for (int i = 0; i < order; ++i)
                for (int j = 0; j < order; ++j) {
                    std::vector<double> pt = {cell.start[0] + 0.5 * (q.x[i] + 1.0) * wx,
                                              cell.start[1] + 0.5 * (q.x[j] + 1.0) * wy};
                    val += 0.25 * q.w[i] * q.w[j] * wx * wy * form(c, pt, {});
                }
        }
        require(val.size() == r, "de_rham_map: evaluator returned a vector of the wrong rank");
        out.segment(c * r, r) = val;
    }
    return out;
}

// JSON formats for fixtures.
inline nlohmann::json to_json(const Triangulation& T)
{
    nlohmann::json j;
    j["dim"] = T.dim;
    j["cells"] = nlohmann::json::array();
    for (int p = 0; p <= T.dim; ++p) {
        nlohmann::json layer = nlohmann::json::array();
        for (const Cell& c : T.cells[p]) {
            nlohmann::json jc;
            jc["boundary"] = c.boundary;
            jc["tag"] = Triangulation::part_name(c.part);
            jc["barycenter"] = c.barycenter;
            jc["volume"] = c.volume;
            if (!c.start.empty()) {
                jc["start"] = c.start;
                jc["end"] = c.end;
            }
            layer.push_back(jc);
        }
        j["cells"].push_back(layer);
    }
    j["edge_sets"] = T.edge_sets;
    return j;
}

inline Triangulation triangulation_from_json(const nlohmann::json& j)
{
    Triangulation T;
    T.dim = j.at("dim").get<int>();
    for (const auto& layer : j.at("cells")) {
        std::vector<Cell> cs;
        for (const auto& jc : layer) {
            Cell c;
            c.boundary = jc.value("boundary", std::vector<std::pair<int, int>>{});
            const std::string tag = jc.value("tag", std::string("Z1"));
            c.part = tag == "Y" ? Part::Y : (tag == "Z2" ? Part::Z2 : Part::Z1);
            c.barycenter = jc.value("barycenter", std::vector<double>{});
            c.volume = jc.value("volume", 1.0);
            c.start = jc.value("start", std::vector<double>{});
            c.end = jc.value("end", std::vector<double>{});
            cs.push_back(c);
        }
        T.cells.push_back(cs);
    }
    if (j.contains("edge_sets")) T.edge_sets = j["edge_sets"].get<std::map<std::string, std::vector<int>>>();
    T.validate();
    return T;
}

inline nlohmann::json to_json(const FlatBundle& F)
{
    nlohmann::json j;
    j["rank"] = F.rank;
    j["edges"] = nlohmann::json::array();
    for (const auto& g : F.transport) j["edges"].push_back(detail::matrix_to_json(g));
    j["metric"] = nlohmann::json::array();
    for (const auto& h : F.metric) j["metric"].push_back(detail::matrix_to_json(h));
    return j;
}

inline FlatBundle bundle_from_json(const nlohmann::json& j)
{
    FlatBundle F;
    F.rank = j.at("rank").get<int>();
    for (const auto& g : j.at("edges")) F.transport.push_back(detail::matrix_from_json(g, F.rank, F.rank));
    for (const auto& h : j.at("metric")) F.metric.push_back(detail::matrix_from_json(h, F.rank, F.rank));
    return F;
}

} // namespace torsionlab
