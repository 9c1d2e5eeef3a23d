#pragma once

// Global DoF numbering, sparse assembly, boundary-condition elimination and
// the sparse direct solver.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "polyvem/field.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/vem_element.hpp"

namespace polyvem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Clamped (u = dn u = 0), Navier (u = Laplacian u = 0), Cahn-Hilliard (dn u = dn Laplacian u = 0).
enum class BoundaryCondition { CP, NC, CH };

std::string to_string(BoundaryCondition bc);
BoundaryCondition parse_bc(const std::string& name);

/// Global numbering: vertex values, then per edge (in edge order) its
/// v-moments followed by its dn-moments, then interior moments per cell.
/// Edge moments are taken in the owner cell's direction and outward normal.
struct GlobalDofMap {
    BoundaryCondition bc = BoundaryCondition::CP;
    int total = 0;
    int num_free = 0;
    int num_constrained = 0;
    int edge0_count = 0;
    int edge1_count = 0;
    int cell_count = 0;
    std::vector<int> edge_base;  // first global DoF of each edge
    std::vector<int> cell_base;  // first global DoF of each cell's interior block
    std::vector<int> free_index;         // global -> free position or -1
    std::vector<int> constrained_index;  // global -> constrained position or -1
    std::vector<int> free_dofs;
    std::vector<int> constrained_dofs;
    /// Per cell, the global DoF and orientation sign of each local DoF.
    std::vector<std::vector<int>> cell_dofs;
    std::vector<std::vector<double>> cell_signs;

    [[nodiscard]] int vertex_dof(int v) const noexcept { return v; }
    [[nodiscard]] int edge0_dof(int e, int i) const { return edge_base[e] + i; }
    [[nodiscard]] int edge1_dof(int e, int i) const { return edge_base[e] + edge0_count + i; }
};

GlobalDofMap build_dof_map(const PolygonalMesh& mesh, const DofLayout& layout, BoundaryCondition bc);

/// Worker count for element loops: POLYVEM_THREADS if set, else the hardware count.
int worker_count();

/// Element operators for every cell, in cell order. Failures carry the cell id.
std::vector<ElementOperators> compute_elements(const PolygonalMesh& mesh, const DofLayout& layout,
                                               int threads = -1);

enum class OperatorKind { Mass, Stiffness4, Stiffness2 };

/// Full (total x total) assembled operator.
SparseMatrix assemble_operator(const GlobalDofMap& map, const std::vector<ElementOperators>& elements,
                               OperatorKind kind);

/// Rows of the free DoFs; columns either free or constrained.
SparseMatrix free_block(const SparseMatrix& full, const GlobalDofMap& map);
SparseMatrix coupling_block(const SparseMatrix& full, const GlobalDofMap& map);

/// Global vector from free values and constrained (lifted) values.
Eigen::VectorXd combine(const GlobalDofMap& map, const Eigen::VectorXd& free, const Eigen::VectorXd& constrained);
Eigen::VectorXd restrict_free(const GlobalDofMap& map, const Eigen::VectorXd& full);
Eigen::VectorXd restrict_constrained(const GlobalDofMap& map, const Eigen::VectorXd& full);

struct NonlinearContribution {
    Eigen::VectorXd F;  // total
    SparseMatrix J;     // total x total
};

NonlinearContribution assemble_nonlinear(const GlobalDofMap& map, const std::vector<ElementOperators>& elements,
                                         const Eigen::VectorXd& U_full, const Nonlinearity& f,
                                         bool with_jacobian = true);

/// Load vector int g(x) Pi phi_j with the element quadrature.
Eigen::VectorXd assemble_load(const GlobalDofMap& map, const std::vector<ElementOperators>& elements,
                              const std::function<double(const Point&)>& g);

/// Global DoF vector of a smooth function (all entries).
Eigen::VectorXd interpolate(const PolygonalMesh& mesh, const DofLayout& layout, const GlobalDofMap& map,
                            const SmoothFunction& u);

/// Only the constrained entries, in constrained order.
Eigen::VectorXd boundary_values(const PolygonalMesh& mesh, const DofLayout& layout, const GlobalDofMap& map,
                                const SmoothFunction& u);

/// Sparse direct solver: LDLT first, LU when LDLT fails or misses the residual
/// bound. The symbolic analysis is reused while the sparsity pattern is unchanged.
class SparseSolver {
public:
    void compute(const SparseMatrix& A);
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

private:
    bool same_pattern(const SparseMatrix& A) const;

    SparseMatrix A_;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    // LU is factorized lazily from solve() when LDLT misses the residual bound
    mutable Eigen::SparseLU<SparseMatrix> lu_;
    bool analysed_ = false;
    mutable bool lu_analysed_ = false;
    mutable bool use_lu_ = false;
    double norm_inf_ = 0.0;
    std::vector<int> outer_, inner_;
};

/// One-shot solve; throws SolverError when the system is singular or the
/// residual bound |Ax - b| <= 1e-9 (|A| |x| + |b|) fails.
Eigen::VectorXd solve_sparse(const SparseMatrix& A, const Eigen::VectorXd& b);

}  // namespace polyvem
