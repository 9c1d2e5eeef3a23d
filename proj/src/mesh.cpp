#include "polyvem/mesh.hpp"

#include "polyvem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace polyvem {

std::string to_string(MeshKind kind)
{
    switch (kind) {
    case MeshKind::Triangular: return "triangular";
    case MeshKind::DistortedQuad: return "distorted";
    case MeshKind::ConcaveQuad: return "concave";
    case MeshKind::VoronoiCVT: return "cvt";
    case MeshKind::GammaTriangular: return "gamma-triangular";
    }
    return "unknown";
}

MeshKind parse_mesh_kind(const std::string& name)
{
    if (name == "triangular" || name == "tri") return MeshKind::Triangular;
    if (name == "distorted" || name == "distorted-quad" || name == "quad") return MeshKind::DistortedQuad;
    if (name == "concave" || name == "concave-quad") return MeshKind::ConcaveQuad;
    if (name == "cvt" || name == "voronoi") return MeshKind::VoronoiCVT;
    if (name == "gamma-triangular") return MeshKind::GammaTriangular;
    throw ConfigError("unknown mesh family '" + name +
                      "' (valid: triangular, distorted, concave, cvt, gamma-triangular)");
}

std::string to_string(Domain domain)
{
    return domain == Domain::UnitSquare ? "unit-square" : "gamma";
}

// ---------------------------------------------------------------------------
// PolygonalMesh

PolygonalMesh::PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells))
{
    const int nv = num_vertices();
    std::vector<bool> used(nv, false);
    geometry_.reserve(cells_.size());
    for (int c = 0; c < num_cells(); ++c) {
        const auto& cell = cells_[c];
        if (cell.size() < 3) {
            throw ValidationError("cell " + std::to_string(c) + " has fewer than 3 vertices");
        }
        for (int v : cell) {
            if (v < 0 || v >= nv) {
                throw ValidationError("cell " + std::to_string(c) + " references vertex " + std::to_string(v) +
                                      " out of range [0, " + std::to_string(nv) + ")");
            }
            used[v] = true;
        }
        try {
            geometry_.push_back(make_polygon(cell_vertices(c)));
        } catch (const GeometryError& e) {
            throw GeometryError("cell " + std::to_string(c) + ": " + e.what());
        }
        h_ = std::max(h_, geometry_.back().diameter);
    }
    for (int v = 0; v < nv; ++v) {
        if (!used[v]) {
            throw ValidationError("vertex " + std::to_string(v) + " is not referenced by any cell");
        }
    }
    build_topology();
}

Eigen::Matrix2Xd PolygonalMesh::cell_vertices(int c) const
{
    const auto& cell = cells_[c];
    Eigen::Matrix2Xd out(2, cell.size());
    for (std::size_t i = 0; i < cell.size(); ++i) {
        out.col(i) = vertices_[cell[i]];
    }
    return out;
}

double PolygonalMesh::total_area() const
{
    double a = 0.0;
    for (const auto& g : geometry_) {
        a += g.area;
    }
    return a;
}

void PolygonalMesh::reverse_edge(int e)
{
    std::swap(edges_[e].vertices[0], edges_[e].vertices[1]);
}

void PolygonalMesh::build_topology()
{
    std::map<std::pair<int, int>, int> lookup;
    cell_edges_.assign(cells_.size(), {});
    for (int c = 0; c < num_cells(); ++c) {
        const auto& cell = cells_[c];
        const int n = static_cast<int>(cell.size());
        cell_edges_[c].resize(n);
        for (int i = 0; i < n; ++i) {
            const int a = cell[i];
            const int b = cell[(i + 1) % n];
            const auto key = std::minmax(a, b);
            auto it = lookup.find(key);
            if (it == lookup.end()) {
                lookup.emplace(key, num_edges());
                cell_edges_[c][i] = num_edges();
                edges_.push_back(Edge{{a, b}, {c, -1}});
                continue;
            }
            Edge& edge = edges_[it->second];
            if (edge.cells[1] >= 0 || edge.cells[0] == c) {
                throw ValidationError("non-manifold edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                      ") shared by more than two cell sides");
            }
            if (edge.vertices[0] != b || edge.vertices[1] != a) {
                throw ValidationError("cells " + std::to_string(edge.cells[0]) + " and " + std::to_string(c) +
                                      " traverse a shared edge in the same direction");
            }
            edge.cells[1] = c;
            cell_edges_[c][i] = it->second;
        }
    }
    boundary_vertex_.assign(vertices_.size(), false);
    for (const auto& e : edges_) {
        if (e.boundary()) {
            boundary_vertex_[e.vertices[0]] = true;
            boundary_vertex_[e.vertices[1]] = true;
        }
    }
}

// ---------------------------------------------------------------------------
// generators

namespace {

// Structured grid of squares of side `spacing` with lower-left corner `origin`;
// squares (i, j) with active(i, j) false are skipped.
template <typename Active>
class SquareGrid {
public:
    SquareGrid(int nx, int ny, Point origin, double spacing, Active active)
        : nx_(nx), ny_(ny), origin_(std::move(origin)), spacing_(spacing), active_(std::move(active)),
          node_(static_cast<std::size_t>(nx + 1) * (ny + 1), -1)
    {
    }

    [[nodiscard]] bool active(int i, int j) const
    {
        return i >= 0 && j >= 0 && i < nx_ && j < ny_ && active_(i, j);
    }

    [[nodiscard]] bool interior_node(int i, int j) const
    {
        return active(i - 1, j - 1) && active(i, j - 1) && active(i - 1, j) && active(i, j);
    }

    [[nodiscard]] Point node_position(int i, int j) const
    {
        return origin_ + spacing_ * Point(i, j);
    }

    template <typename Perturb>
    int node(int i, int j, std::vector<Point>& vertices, const Perturb& perturb)
    {
        int& id = node_[static_cast<std::size_t>(j) * (nx_ + 1) + i];
        if (id < 0) {
            Point p = node_position(i, j);
            if (interior_node(i, j)) {
                p += perturb(p);
            }
            id = static_cast<int>(vertices.size());
            vertices.push_back(p);
        }
        return id;
    }

    [[nodiscard]] int nx() const noexcept { return nx_; }
    [[nodiscard]] int ny() const noexcept { return ny_; }
    [[nodiscard]] double spacing() const noexcept { return spacing_; }

private:
    int nx_, ny_;
    Point origin_;
    double spacing_;
    Active active_;
    std::vector<int> node_;
};

template <typename Grid, typename Perturb>
PolygonalMesh tile(Grid& grid, MeshKind kind, const Perturb& perturb)
{
    std::vector<Point> vertices;
    std::vector<std::vector<int>> cells;
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            if (!grid.active(i, j)) {
                continue;
            }
            const int a = grid.node(i, j, vertices, perturb);
            const int b = grid.node(i + 1, j, vertices, perturb);
            const int c = grid.node(i + 1, j + 1, vertices, perturb);
            const int d = grid.node(i, j + 1, vertices, perturb);
            const Point lower = grid.node_position(i, j);
            if (kind == MeshKind::Triangular) {
                const int m = static_cast<int>(vertices.size());
                vertices.push_back(lower + 0.5 * grid.spacing() * Point(1.0, 1.0));
                cells.push_back({a, b, m});
                cells.push_back({b, c, m});
                cells.push_back({c, d, m});
                cells.push_back({d, a, m});
            } else if (kind == MeshKind::ConcaveQuad) {
                // interior point pushed off the diagonal a-c makes abcp reflex at p
                constexpr double delta = 0.2;
                const int p = static_cast<int>(vertices.size());
                vertices.push_back(lower + grid.spacing() * Point(0.5 + delta, 0.5 - delta));
                cells.push_back({a, b, c, p});
                cells.push_back({a, p, c, d});
            } else {
                cells.push_back({a, b, c, d});
            }
        }
    }
    PolygonalMesh mesh(std::move(vertices), std::move(cells));
    mesh.set_nominal_h(grid.spacing());
    return mesh;
}

Point distortion(const Point& p, double amplitude)
{
    // phase shifts keep the law non-zero at grid nodes
    return amplitude * Point(std::sin(7.3 * p(0) + 3.1 * p(1) + 0.5), std::cos(2.7 * p(0) - 5.9 * p(1) + 0.3));
}

// Convex polygon clipped to the half-plane (x - m) . d <= 0.
std::vector<Point> clip(const std::vector<Point>& poly, const Point& m, const Point& d)
{
    std::vector<Point> out;
    const std::size_t n = poly.size();
    out.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % n];
        const double sp = (p - m).dot(d);
        const double sq = (q - m).dot(d);
        if (sp <= 0.0) {
            out.push_back(p);
        }
        if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) {
            out.push_back(p + sp / (sp - sq) * (q - p));
        }
    }
    return out;
}

std::vector<std::vector<Point>> voronoi_cells(const std::vector<Point>& seeds)
{
    const std::vector<Point> square{Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)};
    const int n = static_cast<int>(seeds.size());
    std::vector<std::vector<Point>> cells(n);
    std::vector<std::pair<double, int>> order(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            order[j] = {(seeds[j] - seeds[i]).squaredNorm(), j};
        }
        std::sort(order.begin(), order.end());
        std::vector<Point> poly = square;
        for (const auto& [d2, j] : order) {
            if (j == i) {
                continue;
            }
            double reach = 0.0;
            for (const auto& p : poly) {
                reach = std::max(reach, (p - seeds[i]).squaredNorm());
            }
            // a bisector farther than twice the cell radius cannot cut the cell
            if (d2 > 4.0 * reach) {
                break;
            }
            poly = clip(poly, 0.5 * (seeds[i] + seeds[j]), seeds[j] - seeds[i]);
        }
        cells[i] = std::move(poly);
    }
    return cells;
}

Point polygon_centroid(const std::vector<Point>& poly)
{
    Eigen::Matrix2Xd v(2, poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) {
        v.col(i) = poly[i];
    }
    return area_centroid(v);
}

bool on_square_boundary(const Point& p, double tol)
{
    return p(0) < tol || p(1) < tol || p(0) > 1.0 - tol || p(1) > 1.0 - tol;
}

bool on_square_corner(const Point& p, double tol)
{
    const bool x = p(0) < tol || p(0) > 1.0 - tol;
    const bool y = p(1) < tol || p(1) > 1.0 - tol;
    return x && y;
}

int find_root(std::vector<int>& parent, int i)
{
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

PolygonalMesh generate_cvt(int resolution, std::uint64_t seed)
{
    const int n = resolution * resolution;
    std::mt19937_64 rng(seed);
    const auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<Point> seeds(n);
    for (auto& s : seeds) {
        s(0) = uniform();
        s(1) = uniform();
    }
    for (int sweep = 0; sweep < 50; ++sweep) {
        const auto cells = voronoi_cells(seeds);
        for (int i = 0; i < n; ++i) {
            seeds[i] = polygon_centroid(cells[i]);
        }
    }
    const auto polys = voronoi_cells(seeds);

    // merge coincident corners shared by neighbouring cells
    const double tol = 1e-9 / resolution;
    std::vector<Point> points;
    std::vector<std::vector<int>> cells(n);
    for (int i = 0; i < n; ++i) {
        for (const auto& p : polys[i]) {
            int id = -1;
            for (int k = 0; k < static_cast<int>(points.size()); ++k) {
                if ((points[k] - p).lpNorm<Eigen::Infinity>() < tol) {
                    id = k;
                    break;
                }
            }
            if (id < 0) {
                id = static_cast<int>(points.size());
                points.push_back(p);
            }
            if (cells[i].empty() || (cells[i].back() != id && cells[i].front() != id)) {
                cells[i].push_back(id);
            }
        }
    }

    // collapse edges much shorter than the mean cell size
    const double short_edge = 0.05 / resolution;
    std::vector<int> parent(points.size());
    std::iota(parent.begin(), parent.end(), 0);
    for (const auto& cell : cells) {
        for (std::size_t k = 0; k < cell.size(); ++k) {
            const int a = cell[k];
            const int b = cell[(k + 1) % cell.size()];
            if ((points[a] - points[b]).norm() < short_edge) {
                const int ra = find_root(parent, a);
                const int rb = find_root(parent, b);
                if (ra != rb) {
                    parent[std::max(ra, rb)] = std::min(ra, rb);
                }
            }
        }
    }
    std::vector<std::vector<int>> groups(points.size());
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
        groups[find_root(parent, i)].push_back(i);
    }
    std::vector<int> new_id(points.size(), -1);
    std::vector<Point> vertices;
    const double btol = 1e-12;
    for (int r = 0; r < static_cast<int>(points.size()); ++r) {
        if (groups[r].empty()) {
            continue;
        }
        Point pos = Point::Zero();
        int rank = -1;
        for (int i : groups[r]) {
            const int ri = on_square_corner(points[i], btol) ? 2 : (on_square_boundary(points[i], btol) ? 1 : 0);
            if (ri > rank) {
                rank = ri;
                pos = points[i];
            }
        }
        if (rank == 0) {
            pos.setZero();
            for (int i : groups[r]) {
                pos += points[i];
            }
            pos /= static_cast<double>(groups[r].size());
        }
        for (int i : groups[r]) {
            new_id[i] = static_cast<int>(vertices.size());
        }
        vertices.push_back(pos);
    }
    std::vector<std::vector<int>> merged;
    merged.reserve(n);
    for (const auto& cell : cells) {
        std::vector<int> c;
        for (int v : cell) {
            const int id = new_id[v];
            if (c.empty() || c.back() != id) {
                c.push_back(id);
            }
        }
        while (c.size() > 1 && c.front() == c.back()) {
            c.pop_back();
        }
        if (c.size() >= 3) {
            merged.push_back(std::move(c));
        }
    }
    PolygonalMesh mesh(std::move(vertices), std::move(merged));
    mesh.set_nominal_h(1.0 / resolution);
    return mesh;
}

}  // namespace

PolygonalMesh generate(const MeshFamily& family, Domain domain)
{
    const int n = family.resolution;
    if (n < 1) {
        throw InputError("mesh resolution must be >= 1");
    }
    MeshKind kind = family.kind;
    if (kind == MeshKind::GammaTriangular) {
        kind = MeshKind::Triangular;
        domain = Domain::GammaShape;
    }
    if (kind == MeshKind::VoronoiCVT) {
        if (domain != Domain::UnitSquare) {
            throw UnsupportedError("the cvt family is only available on the unit square");
        }
        return generate_cvt(n, family.seed);
    }
    const double spacing = 1.0 / n;
    const auto perturb = [&](const Point& p) {
        return kind == MeshKind::DistortedQuad ? distortion(p, 0.1 * spacing) : Point(Point::Zero());
    };
    if (domain == Domain::UnitSquare) {
        SquareGrid grid(n, n, Point(0, 0), spacing, [](int, int) { return true; });
        return tile(grid, kind, perturb);
    }
    // (-1,1)^2 without the lower-right quadrant
    SquareGrid grid(2 * n, 2 * n, Point(-1, -1), spacing, [n](int i, int j) { return !(i >= n && j < n); });
    return tile(grid, kind, perturb);
}

// ---------------------------------------------------------------------------
// IO

std::string format_mesh(const PolygonalMesh& mesh)
{
    std::string out = "polymesh 1\nV " + std::to_string(mesh.num_vertices()) + "\n";
    char buf[96];
    for (const auto& p : mesh.vertices()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p(0), p(1));
        out += buf;
    }
    out += "C " + std::to_string(mesh.num_cells()) + "\n";
    for (const auto& cell : mesh.cells()) {
        out += std::to_string(cell.size());
        for (int v : cell) {
            out += ' ' + std::to_string(v);
        }
        out += '\n';
    }
    return out;
}

void save_mesh(const PolygonalMesh& mesh, const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw InputError("cannot open '" + path + "' for writing");
    }
    f << format_mesh(mesh);
    if (!f) {
        throw InputError("write to '" + path + "' failed");
    }
}

namespace {

class LineReader {
public:
    explicit LineReader(const std::string& text) : in_(text) {}

    // next non-blank line, tokenized
    std::vector<std::string> next(const char* expecting)
    {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            std::istringstream ls(line);
            std::vector<std::string> tokens;
            std::string tok;
            while (ls >> tok) {
                tokens.push_back(tok);
            }
            if (!tokens.empty()) {
                return tokens;
            }
        }
        throw ParseError(std::string("unexpected end of file, expected ") + expecting, line_no_ + 1);
    }

    [[nodiscard]] int line() const noexcept { return line_no_; }

    // true when a non-blank line remains; line() then points at it
    bool skip_blank()
    {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                return true;
            }
        }
        return false;
    }

    long to_int(const std::string& s) const
    {
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != s.size() || s.empty()) {
            throw ParseError("expected an integer, got '" + s + "'", line_no_);
        }
        return v;
    }

    double to_double(const std::string& s) const
    {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != s.size() || s.empty() || !std::isfinite(v)) {
            throw ParseError("expected a finite number, got '" + s + "'", line_no_);
        }
        return v;
    }

private:
    std::istringstream in_;
    int line_no_ = 0;
};

}  // namespace

PolygonalMesh parse_mesh(const std::string& text, std::vector<std::string>* warnings)
{
    LineReader r(text);
    auto tok = r.next("header");
    if (tok.size() != 2 || tok[0] != "polymesh" || tok[1] != "1") {
        throw ParseError("expected header 'polymesh 1'", r.line());
    }
    tok = r.next("'V <n>'");
    if (tok.size() != 2 || tok[0] != "V") {
        throw ParseError("expected 'V <n>'", r.line());
    }
    const long nv = r.to_int(tok[1]);
    if (nv < 0) {
        throw ParseError("negative vertex count", r.line());
    }
    std::vector<Point> vertices(nv);
    for (long i = 0; i < nv; ++i) {
        tok = r.next("vertex coordinates");
        if (tok.size() != 2) {
            throw ParseError("expected 'x y'", r.line());
        }
        vertices[i] = Point(r.to_double(tok[0]), r.to_double(tok[1]));
    }
    tok = r.next("'C <m>'");
    if (tok.size() != 2 || tok[0] != "C") {
        throw ParseError("expected 'C <m>'", r.line());
    }
    const long nc = r.to_int(tok[1]);
    if (nc < 0) {
        throw ParseError("negative cell count", r.line());
    }
    std::vector<std::vector<int>> cells(nc);
    for (long c = 0; c < nc; ++c) {
        tok = r.next("cell");
        const long count = r.to_int(tok[0]);
        if (count < 0 || static_cast<long>(tok.size()) != count + 1) {
            throw ParseError("cell vertex count does not match the number of indices", r.line());
        }
        for (long k = 0; k < count; ++k) {
            const long v = r.to_int(tok[k + 1]);
            if (v < 0 || v >= nv) {
                throw ValidationError("line " + std::to_string(r.line()) + ": vertex index " + std::to_string(v) +
                                      " out of range [0, " + std::to_string(nv) + ")");
            }
            cells[c].push_back(static_cast<int>(v));
        }
        if (cells[c].size() >= 3) {
            Eigen::Matrix2Xd pts(2, cells[c].size());
            for (std::size_t k = 0; k < cells[c].size(); ++k) {
                pts.col(k) = vertices[cells[c][k]];
            }
            if (signed_area(pts) < 0.0) {
                std::reverse(cells[c].begin(), cells[c].end());
                const std::string msg = "cell " + std::to_string(c) + " was clockwise; reoriented";
                if (warnings) {
                    warnings->push_back(msg);
                } else {
                    std::cerr << "warning: " << msg << '\n';
                }
            }
        }
    }
    if (r.skip_blank()) {
        throw ParseError("trailing content after the cell block", r.line());
    }
    return PolygonalMesh(std::move(vertices), std::move(cells));
}

PolygonalMesh load_mesh(const std::string& path, std::vector<std::string>* warnings)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw InputError("cannot open mesh file '" + path + "'");
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_mesh(ss.str(), warnings);
}

// ---------------------------------------------------------------------------

MeshDiagnostics mesh_diagnostics(const PolygonalMesh& mesh)
{
    MeshDiagnostics d;
    d.h = mesh.h();
    d.min_edge_ratio = std::numeric_limits<double>::infinity();
    d.quasi_uniformity_ratio = std::numeric_limits<double>::infinity();
    d.min_area = std::numeric_limits<double>::infinity();
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& g = mesh.geometry(c);
        const int n = g.num_vertices();
        double shortest = std::numeric_limits<double>::infinity();
        bool convex = true;
        for (int i = 0; i < n; ++i) {
            const Point a = g.vertex(i - 1);
            const Point b = g.vertex(i);
            const Point e = g.vertex(i + 1);
            shortest = std::min(shortest, (e - b).norm());
            const double cr = (b(0) - a(0)) * (e(1) - b(1)) - (b(1) - a(1)) * (e(0) - b(0));
            if (cr < -1e-14 * g.diameter * g.diameter) {
                convex = false;
            }
        }
        d.min_edge_ratio = std::min(d.min_edge_ratio, shortest / g.diameter);
        d.quasi_uniformity_ratio = std::min(d.quasi_uniformity_ratio, g.diameter / d.h);
        d.min_area = std::min(d.min_area, g.area);
        d.total_area += g.area;
        d.num_nonconvex += convex ? 0 : 1;
        d.num_not_star_shaped += is_star_shaped_wrt(g.vertices, g.centroid) ? 0 : 1;
    }
    return d;
}

}  // namespace polyvem
