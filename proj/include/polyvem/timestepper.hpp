#pragma once

// Backward Euler in time with Newton's method for the nonlinear reaction term.
// States are full global DoF vectors; constrained entries carry the lifted
// boundary data of their time level.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "polyvem/assembly.hpp"
#include "polyvem/problems.hpp"

namespace polyvem {

struct TimeGrid {
    double T_final = 1.0;
    int N_steps = 1;

    [[nodiscard]] double dt() const noexcept { return T_final / N_steps; }
    [[nodiscard]] double t(int n) const noexcept { return n * dt(); }
};

/// Grid with T_final / dt steps; dt must divide T_final up to 1e-9 relative.
TimeGrid make_time_grid(double T_final, double dt);

enum class InitialGuess { ZeroFirstStep, PreviousStep };

struct NewtonConfig {
    double tol = 1e-8;  // on the max-norm of the increment
    int max_iter = 25;
    InitialGuess initial_guess = InitialGuess::ZeroFirstStep;
};

/// Mesh-level operators of one discretization (independent of time and dt).
struct Discretization {
    const PolygonalMesh* mesh = nullptr;
    DofLayout layout;
    GlobalDofMap map;
    std::vector<ElementOperators> elements;
    SparseMatrix M;  // full
    SparseMatrix K;  // full, a1 A + a2 B
};

Discretization discretize(const PolygonalMesh& mesh, const DofLayout& layout, const ProblemSpec& spec,
                          int threads = -1);

/// Full DoF vector of u(., t0).
Eigen::VectorXd interpolate_initial(const Discretization& disc, const SmoothFunction& u0);

struct NewtonResult {
    Eigen::VectorXd U;  // full
    int iterations = 0;
    bool converged = false;
    double last_increment = 0.0;
    double last_residual = 0.0;
};

/// Residual on the free rows:
///   M (U - U_prev) + dt K U - dt F(U) - dt Load(t)
Eigen::VectorXd newton_residual(const Discretization& disc, const Problem& problem, const Eigen::VectorXd& U,
                                const Eigen::VectorXd& U_prev, const Eigen::VectorXd& load, double dt);

/// Free-free block of M + dt K - dt F'(U).
SparseMatrix newton_jacobian(const Discretization& disc, const Problem& problem, const Eigen::VectorXd& U,
                             double dt);

/// One backward Euler step to time t from U_prev. `guess` is the starting full
/// vector (its constrained entries are replaced by the lifted data at t).
/// Throws NonConvergenceError after max_iter iterations.
NewtonResult newton_solve(const Discretization& disc, const Problem& problem, const Eigen::VectorXd& U_prev,
                          const Eigen::VectorXd& guess, double t, double dt, const NewtonConfig& config);

struct StepStats {
    int step = 0;
    double t = 0.0;
    int iterations = 0;
    double last_increment = 0.0;
};

using StepCallback = std::function<void(const StepStats&, const Eigen::VectorXd&)>;

/// Steps first_step .. first_step + count - 1 of `grid`, starting from U_start
/// at time level first_step - 1. Calls `on_step` after each step and returns
/// the final state.
Eigen::VectorXd advance(const Discretization& disc, const Problem& problem, const TimeGrid& grid,
                        const NewtonConfig& config, const Eigen::VectorXd& U_start, int first_step, int count,
                        const StepCallback& on_step = {});

/// Largest step of the well-posedness bound dt < 1 / (2 L_f).
double step_bound(const ProblemSpec& spec);

}  // namespace polyvem
