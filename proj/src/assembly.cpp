#include "polyvem/assembly.hpp"

#include "polyvem/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>

namespace polyvem {

std::string to_string(BoundaryCondition bc)
{
    switch (bc) {
    case BoundaryCondition::CP: return "cp";
    case BoundaryCondition::NC: return "nc";
    case BoundaryCondition::CH: return "ch";
    }
    return "unknown";
}

BoundaryCondition parse_bc(const std::string& name)
{
    if (name == "cp" || name == "CP") return BoundaryCondition::CP;
    if (name == "nc" || name == "NC") return BoundaryCondition::NC;
    if (name == "ch" || name == "CH") return BoundaryCondition::CH;
    throw ConfigError("unknown boundary condition '" + name + "' (valid: cp, nc, ch)");
}

GlobalDofMap build_dof_map(const PolygonalMesh& mesh, const DofLayout& layout, BoundaryCondition bc)
{
    GlobalDofMap map;
    map.bc = bc;
    map.edge0_count = layout.edge0_count();
    map.edge1_count = layout.edge1_count();
    map.cell_count = layout.cell_count();
    const int V = mesh.num_vertices();
    const int E = mesh.num_edges();
    const int per_edge = map.edge0_count + map.edge1_count;
    map.edge_base.resize(E);
    for (int e = 0; e < E; ++e) {
        map.edge_base[e] = V + e * per_edge;
    }
    map.cell_base.resize(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        map.cell_base[c] = V + E * per_edge + c * map.cell_count;
    }
    map.total = V + E * per_edge + mesh.num_cells() * map.cell_count;

    std::vector<bool> constrained(map.total, false);
    const bool values = bc != BoundaryCondition::CH;
    const bool normals = bc != BoundaryCondition::NC;
    for (int v = 0; v < V; ++v) {
        if (values && mesh.boundary_vertex(v)) {
            constrained[map.vertex_dof(v)] = true;
        }
    }
    for (int e = 0; e < E; ++e) {
        if (!mesh.boundary_edge(e)) {
            continue;
        }
        for (int i = 0; i < map.edge0_count && values; ++i) {
            constrained[map.edge0_dof(e, i)] = true;
        }
        for (int i = 0; i < map.edge1_count && normals; ++i) {
            constrained[map.edge1_dof(e, i)] = true;
        }
    }
    map.free_index.assign(map.total, -1);
    map.constrained_index.assign(map.total, -1);
    for (int g = 0; g < map.total; ++g) {
        if (constrained[g]) {
            map.constrained_index[g] = static_cast<int>(map.constrained_dofs.size());
            map.constrained_dofs.push_back(g);
        } else {
            map.free_index[g] = static_cast<int>(map.free_dofs.size());
            map.free_dofs.push_back(g);
        }
    }
    map.num_free = static_cast<int>(map.free_dofs.size());
    map.num_constrained = static_cast<int>(map.constrained_dofs.size());

    map.cell_dofs.resize(mesh.num_cells());
    map.cell_signs.resize(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cell(c);
        const int N = static_cast<int>(cell.size());
        auto& dofs = map.cell_dofs[c];
        auto& signs = map.cell_signs[c];
        dofs.resize(layout.local_count(N));
        signs.assign(dofs.size(), 1.0);
        for (int i = 0; i < N; ++i) {
            dofs[DofLayout::vertex_dof(i)] = map.vertex_dof(cell[i]);
        }
        for (int e = 0; e < N; ++e) {
            const int ge = mesh.cell_edge(c, e);
            const bool owner = mesh.edge_sign(c, ge) > 0;
            for (int i = 0; i < map.edge0_count; ++i) {
                const int l = layout.edge0_dof(N, e, i);
                dofs[l] = map.edge0_dof(ge, i);
                signs[l] = owner || i % 2 == 0 ? 1.0 : -1.0;
            }
            for (int i = 0; i < map.edge1_count; ++i) {
                const int l = layout.edge1_dof(N, e, i);
                dofs[l] = map.edge1_dof(ge, i);
                signs[l] = owner || i % 2 == 1 ? 1.0 : -1.0;
            }
        }
        for (int b = 0; b < map.cell_count; ++b) {
            dofs[layout.cell_dof(N, b)] = map.cell_base[c] + b;
        }
    }
    return map;
}

int worker_count()
{
    if (const char* env = std::getenv("POLYVEM_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n >= 1) {
            return static_cast<int>(n);
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<ElementOperators> compute_elements(const PolygonalMesh& mesh, const DofLayout& layout, int threads)
{
    const int C = mesh.num_cells();
    std::vector<ElementOperators> out(C);
    if (threads < 1) {
        threads = worker_count();
    }
    threads = std::max(1, std::min(threads, C));
    std::vector<std::exception_ptr> errors(threads);
    std::vector<int> failed_cell(threads, C);
    const auto work = [&](int t) {
        for (int c = t; c < C; c += threads) {
            try {
                out[c] = build_element(layout, mesh.geometry(c), c);
            } catch (...) {
                errors[t] = std::current_exception();
                failed_cell[t] = c;
                return;
            }
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(work, t);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    // report the lowest failing cell so the error does not depend on scheduling
    int first = -1;
    for (int t = 0; t < threads; ++t) {
        if (errors[t] && (first < 0 || failed_cell[t] < failed_cell[first])) {
            first = t;
        }
    }
    if (first >= 0) {
        std::rethrow_exception(errors[first]);
    }
    return out;
}

SparseMatrix assemble_operator(const GlobalDofMap& map, const std::vector<ElementOperators>& elements,
                               OperatorKind kind)
{
    std::vector<Eigen::Triplet<double>> trip;
    std::size_t nnz = 0;
    for (const auto& d : map.cell_dofs) {
        nnz += d.size() * d.size();
    }
    trip.reserve(nnz);
    for (std::size_t c = 0; c < elements.size(); ++c) {
        const auto& ops = elements[c];
        const Eigen::MatrixXd& K = kind == OperatorKind::Mass ? ops.Mh : (kind == OperatorKind::Stiffness4 ? ops.Ah : ops.Bh);
        const auto& dofs = map.cell_dofs[c];
        const auto& signs = map.cell_signs[c];
        for (std::size_t j = 0; j < dofs.size(); ++j) {
            for (std::size_t i = 0; i < dofs.size(); ++i) {
                trip.emplace_back(dofs[i], dofs[j], signs[i] * signs[j] * K(i, j));
            }
        }
    }
    SparseMatrix A(map.total, map.total);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

namespace {

SparseMatrix extract(const SparseMatrix& full, const std::vector<int>& row_index, int rows,
                     const std::vector<int>& col_index, int cols)
{
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(full.nonZeros());
    for (int j = 0; j < full.outerSize(); ++j) {
        const int cj = col_index[j];
        if (cj < 0) {
            continue;
        }
        for (SparseMatrix::InnerIterator it(full, j); it; ++it) {
            const int ri = row_index[it.row()];
            if (ri >= 0) {
                trip.emplace_back(ri, cj, it.value());
            }
        }
    }
    SparseMatrix out(rows, cols);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

struct EdgeMoments {
    Eigen::VectorXd v;
    Eigen::VectorXd dn;
};

// moments along a -> b with the outward normal of a counterclockwise cell
EdgeMoments edge_moments(const Point& a, const Point& b, const SmoothFunction& u, int ne0, int ne1, int degree)
{
    const auto rule = edge_quadrature<double>(a, b, degree);
    const double len = (b - a).norm();
    const Point t = (b - a) / len;
    const Point n(t(1), -t(0));
    EdgeMoments m{Eigen::VectorXd::Zero(std::max(ne0, 0)), Eigen::VectorXd::Zero(std::max(ne1, 0))};
    for (int q = 0; q < rule.size(); ++q) {
        const Point x = rule.points.col(q);
        const double s = rule.params(q);
        const double val = ne0 > 0 ? u.value(x) : 0.0;
        const double dn = ne1 > 0 ? n.dot(u.gradient(x)) : 0.0;
        double p = 1.0;
        for (int i = 0; i < std::max(ne0, ne1); ++i) {
            if (i < ne0) {
                m.v(i) += rule.weights(q) * p * val / len;
            }
            if (i < ne1) {
                m.dn(i) += rule.weights(q) * p * dn;
            }
            p *= s;
        }
    }
    return m;
}

std::pair<Point, Point> owner_direction(const PolygonalMesh& mesh, int e)
{
    const int c = mesh.edge(e).cells[0];
    const auto& cell = mesh.cell(c);
    const auto& ce = mesh.cell_edges(c);
    for (std::size_t i = 0; i < ce.size(); ++i) {
        if (ce[i] == e) {
            return {mesh.vertex(cell[i]), mesh.vertex(cell[(i + 1) % cell.size()])};
        }
    }
    throw ValidationError("edge " + std::to_string(e) + " missing from its owner cell");
}

int interpolation_degree(const DofLayout& layout)
{
    return element_quadrature_degree(layout.order()) + 4;
}

}  // namespace

SparseMatrix free_block(const SparseMatrix& full, const GlobalDofMap& map)
{
    return extract(full, map.free_index, map.num_free, map.free_index, map.num_free);
}

SparseMatrix coupling_block(const SparseMatrix& full, const GlobalDofMap& map)
{
    return extract(full, map.free_index, map.num_free, map.constrained_index, map.num_constrained);
}

Eigen::VectorXd combine(const GlobalDofMap& map, const Eigen::VectorXd& free, const Eigen::VectorXd& constrained)
{
    Eigen::VectorXd out(map.total);
    for (int i = 0; i < map.num_free; ++i) {
        out(map.free_dofs[i]) = free(i);
    }
    for (int i = 0; i < map.num_constrained; ++i) {
        out(map.constrained_dofs[i]) = constrained(i);
    }
    return out;
}

Eigen::VectorXd restrict_free(const GlobalDofMap& map, const Eigen::VectorXd& full)
{
    return full(map.free_dofs);
}

Eigen::VectorXd restrict_constrained(const GlobalDofMap& map, const Eigen::VectorXd& full)
{
    return full(map.constrained_dofs);
}

NonlinearContribution assemble_nonlinear(const GlobalDofMap& map, const std::vector<ElementOperators>& elements,
                                         const Eigen::VectorXd& U_full, const Nonlinearity& f, bool with_jacobian)
{
    NonlinearContribution out;
    out.F = Eigen::VectorXd::Zero(map.total);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t c = 0; c < elements.size(); ++c) {
        const auto& dofs = map.cell_dofs[c];
        const auto& signs = map.cell_signs[c];
        const Eigen::Index n = static_cast<Eigen::Index>(dofs.size());
        Eigen::VectorXd Ul(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Ul(i) = signs[i] * U_full(dofs[i]);
        }
        const auto loc = local_nonlinear(elements[c], Ul, f);
        for (Eigen::Index i = 0; i < n; ++i) {
            out.F(dofs[i]) += signs[i] * loc.F(i);
        }
        if (with_jacobian) {
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    trip.emplace_back(dofs[i], dofs[j], signs[i] * signs[j] * loc.J(i, j));
                }
            }
        }
    }
    out.J.resize(map.total, map.total);
    if (with_jacobian) {
        out.J.setFromTriplets(trip.begin(), trip.end());
    }
    return out;
}

Eigen::VectorXd assemble_load(const GlobalDofMap& map, const std::vector<ElementOperators>& elements,
                              const std::function<double(const Point&)>& g)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(map.total);
    for (std::size_t c = 0; c < elements.size(); ++c) {
        const auto& ops = elements[c];
        Eigen::VectorXd gw(ops.weights.size());
        for (Eigen::Index q = 0; q < gw.size(); ++q) {
            gw(q) = ops.weights(q) * g(ops.points.col(q));
        }
        const Eigen::VectorXd loc = ops.Phi.transpose() * gw;
        const auto& dofs = map.cell_dofs[c];
        const auto& signs = map.cell_signs[c];
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            out(dofs[i]) += signs[i] * loc(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

Eigen::VectorXd interpolate(const PolygonalMesh& mesh, const DofLayout& layout, const GlobalDofMap& map,
                            const SmoothFunction& u)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(map.total);
    const int degree = interpolation_degree(layout);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        out(map.vertex_dof(v)) = u.value(mesh.vertex(v));
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto [a, b] = owner_direction(mesh, e);
        const auto m = edge_moments(a, b, u, map.edge0_count, map.edge1_count, degree);
        for (int i = 0; i < map.edge0_count; ++i) {
            out(map.edge0_dof(e, i)) = m.v(i);
        }
        for (int i = 0; i < map.edge1_count; ++i) {
            out(map.edge1_dof(e, i)) = m.dn(i);
        }
    }
    if (map.cell_count > 0) {
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const Eigen::VectorXd loc = dof_functionals(layout, mesh.geometry(c), u, degree);
            out.segment(map.cell_base[c], map.cell_count) = loc.tail(map.cell_count);
        }
    }
    return out;
}

Eigen::VectorXd boundary_values(const PolygonalMesh& mesh, const DofLayout& layout, const GlobalDofMap& map,
                                const SmoothFunction& u)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(map.num_constrained);
    const int degree = interpolation_degree(layout);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const int k = map.constrained_index[map.vertex_dof(v)];
        if (k >= 0) {
            out(k) = u.value(mesh.vertex(v));
        }
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        if (!mesh.boundary_edge(e)) {
            continue;
        }
        const bool values = map.edge0_count > 0 && map.constrained_index[map.edge0_dof(e, 0)] >= 0;
        const bool normals = map.edge1_count > 0 && map.constrained_index[map.edge1_dof(e, 0)] >= 0;
        if (!values && !normals) {
            continue;
        }
        const auto [a, b] = owner_direction(mesh, e);
        const auto m = edge_moments(a, b, u, values ? map.edge0_count : 0, normals ? map.edge1_count : 0, degree);
        for (int i = 0; values && i < map.edge0_count; ++i) {
            out(map.constrained_index[map.edge0_dof(e, i)]) = m.v(i);
        }
        for (int i = 0; normals && i < map.edge1_count; ++i) {
            out(map.constrained_index[map.edge1_dof(e, i)]) = m.dn(i);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

bool SparseSolver::same_pattern(const SparseMatrix& A) const
{
    if (A.rows() != A_.rows() || A.nonZeros() != static_cast<Eigen::Index>(inner_.size())) {
        return false;
    }
    return std::equal(outer_.begin(), outer_.end(), A.outerIndexPtr()) &&
           std::equal(inner_.begin(), inner_.end(), A.innerIndexPtr());
}

void SparseSolver::compute(const SparseMatrix& A)
{
    if (A.rows() != A.cols()) {
        throw SolverError("sparse solve: operator is not square");
    }
    SparseMatrix Ac = A;
    Ac.makeCompressed();
    if (!analysed_ || !same_pattern(Ac)) {
        ldlt_.analyzePattern(Ac);
        outer_.assign(Ac.outerIndexPtr(), Ac.outerIndexPtr() + Ac.outerSize() + 1);
        inner_.assign(Ac.innerIndexPtr(), Ac.innerIndexPtr() + Ac.nonZeros());
        analysed_ = true;
        lu_analysed_ = false;
    }
    A_ = std::move(Ac);
    norm_inf_ = A_.rows() > 0 ? (A_.cwiseAbs() * Eigen::VectorXd::Ones(A_.cols())).maxCoeff() : 0.0;
    ldlt_.factorize(A_);
    use_lu_ = ldlt_.info() != Eigen::Success;
    if (use_lu_) {
        if (!lu_analysed_) {
            lu_.analyzePattern(A_);
            lu_analysed_ = true;
        }
        lu_.factorize(A_);
        if (lu_.info() != Eigen::Success) {
            throw SolverError("sparse solve: singular operator (" + lu_.lastErrorMessage() + ")");
        }
    }
}

Eigen::VectorXd SparseSolver::solve(const Eigen::VectorXd& b) const
{
    if (b.size() != A_.rows()) {
        throw SolverError("sparse solve: right-hand side size mismatch");
    }
    if (A_.rows() == 0) {
        return Eigen::VectorXd();
    }
    const auto within_bound = [&](const Eigen::VectorXd& x) {
        if (!x.allFinite()) {
            return false;
        }
        const double r = (A_ * x - b).lpNorm<Eigen::Infinity>();
        return r <= 1e-9 * (norm_inf_ * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>());
    };
    if (!use_lu_) {
        Eigen::VectorXd x = ldlt_.solve(b);
        if (within_bound(x)) {
            return x;
        }
        if (!lu_analysed_) {
            lu_.analyzePattern(A_);
            lu_analysed_ = true;
        }
        lu_.factorize(A_);
        if (lu_.info() != Eigen::Success) {
            throw SolverError("sparse solve: singular operator (" + lu_.lastErrorMessage() + ")");
        }
        use_lu_ = true;
    }
    Eigen::VectorXd x = lu_.solve(b);
    if (!within_bound(x)) {
        throw SolverError("sparse solve: residual bound not met; the system is singular or ill-posed");
    }
    return x;
}

Eigen::VectorXd solve_sparse(const SparseMatrix& A, const Eigen::VectorXd& b)
{
    SparseSolver s;
    s.compute(A);
    return s.solve(b);
}

}  // namespace polyvem
