#pragma once

// Element-level machinery for the C0-nonconforming and Morley-type spaces:
// DoF layouts, DoF functionals, the four polynomial projectors, enhancement
// based moment reconstruction, and the local mass/stiffness matrices.
//
// Local DoF ordering on a cell with N vertices:
//   [N vertex values |
//    per edge, v-moments of order 0..d_edge0 |
//    per edge, normal-derivative moments of order 0..d_edge1 |
//    interior moments of order 0..d_cell0]
// Edge e joins local vertices e and e+1. Moments use the edge coordinate
// s_hat = (s - s_mid)/h_e running counterclockwise and the outward normal:
//   v-moment      h_e^{-1} int_e v s_hat^i
//   dn-moment     int_e dn v s_hat^i
//   interior      h_K^{-2} int_K v m_alpha

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "polyvem/field.hpp"
#include "polyvem/geometry.hpp"
#include "polyvem/polybasis.hpp"

namespace polyvem {

enum class SpaceKind { C0NC, Morley };

std::string to_string(SpaceKind space);
SpaceKind parse_space(const std::string& name);

struct DofTuple {
    int d_vertex = 0;
    int d_edge0 = 0;
    int d_edge1 = 0;
    int d_cell0 = 0;
};

DofTuple dof_tuple(SpaceKind space, int k);

class DofLayout {
public:
    DofLayout(SpaceKind space, int k);

    [[nodiscard]] SpaceKind space() const noexcept { return space_; }
    [[nodiscard]] int order() const noexcept { return k_; }
    [[nodiscard]] const DofTuple& tuple() const noexcept { return tuple_; }

    [[nodiscard]] int edge0_count() const noexcept { return tuple_.d_edge0 + 1; }
    [[nodiscard]] int edge1_count() const noexcept { return tuple_.d_edge1 + 1; }
    [[nodiscard]] int cell_count() const noexcept { return monomial_count(tuple_.d_cell0); }
    /// Closed form: C0NC N(2k-1) + (k-2)(k-3)/2, Morley 2N(k-1) + (k-2)(k-3)/2.
    [[nodiscard]] int local_count(int n_vertices) const noexcept
    {
        return n_vertices * (1 + edge0_count() + edge1_count()) + cell_count();
    }

    [[nodiscard]] static int vertex_dof(int i) noexcept { return i; }
    [[nodiscard]] int edge0_dof(int n_vertices, int e, int i) const noexcept
    {
        return n_vertices + e * edge0_count() + i;
    }
    [[nodiscard]] int edge1_dof(int n_vertices, int e, int i) const noexcept
    {
        return n_vertices * (1 + edge0_count()) + e * edge1_count() + i;
    }
    [[nodiscard]] int cell_dof(int n_vertices, int beta) const noexcept
    {
        return n_vertices * (1 + edge0_count() + edge1_count()) + beta;
    }

private:
    SpaceKind space_;
    int k_;
    DofTuple tuple_;
};

int local_dof_count(const DofLayout& layout, const PolygonGeometry& cell);

/// Quadrature degree used for element integrals.
constexpr int element_quadrature_degree(int k) noexcept
{
    return 2 * k + 2 > 4 * k ? 2 * k + 2 : 4 * k;
}

/// Values of the functionals for a set of functions given by `values` and
/// `gradients` callbacks (each maps 2 x n points to n x m tables).
/// `orders` selects the moment ranges, as in a DofTuple.
using TableFn = std::function<Eigen::MatrixXd(const Eigen::Matrix2Xd&)>;
Eigen::MatrixXd moment_functionals(const PolygonGeometry& cell, const DofTuple& orders, const TableFn& values,
                                   const TableFn& grad_x, const TableFn& grad_y, int quad_degree);

/// Local DoF vector of a smooth function (interpolation functionals).
Eigen::VectorXd dof_functionals(const DofLayout& layout, const PolygonGeometry& cell, const SmoothFunction& v,
                                int quad_degree = -1);

/// Geometry-dependent data shared by all projector computations on one cell.
struct ElementContext {
    PolygonGeometry geometry;
    ScaledMonomialBasis<double> basis;
    QuadratureRule<double> quad;
    Eigen::MatrixXd values;                 // nq x n_k
    std::array<Eigen::MatrixXd, 2> grads;   // nq x n_k
    std::array<Eigen::MatrixXd, 3> hess;    // nq x n_k (xx, xy, yy)
    Eigen::MatrixXd G0;                     // int m_i m_j
    Eigen::MatrixXd GB;                     // int grad m_i . grad m_j
    Eigen::MatrixXd GA;                     // int hess m_i : hess m_j
    /// Moments of every monomial for the full set (vertex values, edge v- and
    /// dn-moments through order k-2, interior moments through order k).
    Eigen::MatrixXd Dfull;
    /// D(i, j) = dof_i(m_j).
    Eigen::MatrixXd D;
    /// Row of Dfull for each local DoF.
    std::vector<int> dof_rows;
};

ElementContext make_element_context(const DofLayout& layout, const PolygonGeometry& cell, int cell_id = -1);

/// Row of `Dfull` holding each moment of the full set.
struct FullMomentIndex {
    int n_vertices;
    int k;
    [[nodiscard]] int vertex(int i) const noexcept { return i; }
    [[nodiscard]] int edge0(int e, int i) const noexcept { return n_vertices + e * (k - 1) + i; }
    [[nodiscard]] int edge1(int e, int i) const noexcept { return n_vertices * k + e * (k - 1) + i; }
    [[nodiscard]] int cell(int beta) const noexcept { return n_vertices * (2 * k - 1) + beta; }
    [[nodiscard]] int size() const noexcept { return n_vertices * (2 * k - 1) + monomial_count(k); }
};

struct H2Projection {
    Eigen::MatrixXd P;  // n_k x N coefficients of the projection of each local basis function
    Eigen::MatrixXd D;
};

/// H2-seminorm projector: A^K(m_alpha, v) for |alpha| >= 2 by integration by
/// parts, the linear kernel fixed by the boundary averages of v and grad v.
H2Projection compute_H2_projector(const DofLayout& layout, const ElementContext& ctx, int cell_id = -1);

/// Full moment set (rows as in FullMomentIndex) of every local basis function.
/// Moments that are DoFs are copied; the rest come from the H2 projection.
Eigen::MatrixXd reconstruct_moments(const DofLayout& layout, const ElementContext& ctx, const Eigen::MatrixXd& P_H2);

struct LowerProjections {
    Eigen::MatrixXd P_L2;                    // n_k x N
    std::array<Eigen::MatrixXd, 2> P_grad;   // n_{k-1} x N per component
    Eigen::MatrixXd P_H1;                    // n_k x N
};

LowerProjections compute_L2_and_grad_projectors(const DofLayout& layout, const ElementContext& ctx,
                                                const Eigen::MatrixXd& moments, int cell_id = -1);

/// Coefficients in P_k(e) (powers of s_hat) of the trace of a function with
/// the given endpoint values and v-moments of order 0..k-2.
Eigen::MatrixXd edge_trace_operator(int k);

struct LocalMatrices {
    Eigen::MatrixXd Mh;
    Eigen::MatrixXd Ah;
    Eigen::MatrixXd Bh;
};

struct ElementOperators {
    int cell_id = -1;
    int n_vertices = 0;
    double diameter = 0.0;
    Eigen::MatrixXd D;
    Eigen::MatrixXd P_H2;
    Eigen::MatrixXd P_L2;
    std::array<Eigen::MatrixXd, 2> P_grad;
    Eigen::MatrixXd P_H1;
    Eigen::MatrixXd Mh, Ah, Bh;
    // projected basis at the element quadrature points, for nonlinear terms and loads
    Eigen::MatrixXd Phi;  // nq x N
    Eigen::VectorXd weights;
    Eigen::Matrix2Xd points;
};

LocalMatrices local_matrices(const ElementContext& ctx, const H2Projection& h2, const LowerProjections& low);

/// Full pipeline on one cell. Throws ElementError carrying `cell_id` on a
/// singular local system.
ElementOperators build_element(const DofLayout& layout, const PolygonGeometry& cell, int cell_id = -1);

struct LocalNonlinear {
    Eigen::VectorXd F;
    Eigen::MatrixXd J;
};

/// F_j = int f(Pi U) Pi phi_j and J_ij = int f'(Pi U) Pi phi_i Pi phi_j.
LocalNonlinear local_nonlinear(const ElementOperators& ops, const Eigen::VectorXd& U, const Nonlinearity& f);

}  // namespace polyvem
