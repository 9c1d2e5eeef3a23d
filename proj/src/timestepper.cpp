#include "polyvem/timestepper.hpp"

#include "polyvem/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace polyvem {

TimeGrid make_time_grid(double T_final, double dt)
{
    if (!(T_final > 0.0) || !(dt > 0.0)) {
        throw ConfigError("time grid: final time and step must be positive");
    }
    const double n = T_final / dt;
    const long steps = std::lround(n);
    if (steps < 1 || std::abs(n - static_cast<double>(steps)) > 1e-9 * n) {
        std::ostringstream msg;
        msg << "time grid: step " << dt << " does not divide the final time " << T_final;
        throw ConfigError(msg.str());
    }
    return {T_final, static_cast<int>(steps)};
}

Discretization discretize(const PolygonalMesh& mesh, const DofLayout& layout, const ProblemSpec& spec,
                          int threads)
{
    Discretization d{&mesh, layout, build_dof_map(mesh, layout, spec.bc), {}, {}, {}};
    d.elements = compute_elements(mesh, layout, threads);
    d.M = assemble_operator(d.map, d.elements, OperatorKind::Mass);
    d.K = spec.alpha1 * assemble_operator(d.map, d.elements, OperatorKind::Stiffness4);
    if (spec.alpha2 != 0.0) {
        d.K += spec.alpha2 * assemble_operator(d.map, d.elements, OperatorKind::Stiffness2);
    }
    return d;
}

Eigen::VectorXd interpolate_initial(const Discretization& disc, const SmoothFunction& u0)
{
    return interpolate(*disc.mesh, disc.layout, disc.map, u0);
}

namespace {

Eigen::VectorXd load_vector(const Discretization& disc, const Problem& problem, double t)
{
    return assemble_load(disc.map, disc.elements, [&](const Point& x) { return problem.load(x, t); });
}

double row_sum_norm(const SparseMatrix& A)
{
    return A.rows() == 0 ? 0.0 : (A.cwiseAbs() * Eigen::VectorXd::Ones(A.cols())).maxCoeff();
}

Eigen::VectorXd residual_full(const Discretization& disc, const Eigen::VectorXd& U,
                              const Eigen::VectorXd& U_prev, const Eigen::VectorXd& load, double dt,
                              const Eigen::VectorXd& F)
{
    return disc.M * (U - U_prev) + dt * (disc.K * U) - dt * F - dt * load;
}

}  // namespace

Eigen::VectorXd newton_residual(const Discretization& disc, const Problem& problem, const Eigen::VectorXd& U,
                                const Eigen::VectorXd& U_prev, const Eigen::VectorXd& load, double dt)
{
    const auto F = assemble_nonlinear(disc.map, disc.elements, U, problem.spec.f, false).F;
    return restrict_free(disc.map, residual_full(disc, U, U_prev, load, dt, F));
}

SparseMatrix newton_jacobian(const Discretization& disc, const Problem& problem, const Eigen::VectorXd& U,
                             double dt)
{
    const auto nl = assemble_nonlinear(disc.map, disc.elements, U, problem.spec.f, true);
    const SparseMatrix J = disc.M + dt * disc.K - dt * nl.J;
    return free_block(J, disc.map);
}

NewtonResult newton_solve(const Discretization& disc, const Problem& problem, const Eigen::VectorXd& U_prev,
                          const Eigen::VectorXd& guess, double t, double dt, const NewtonConfig& config)
{
    if (!(config.tol > 0.0) || config.max_iter < 1) {
        throw ConfigError("newton: tolerance must be positive and max_iter >= 1");
    }
    const auto& map = disc.map;
    const Eigen::VectorXd lifted = boundary_values(*disc.mesh, disc.layout, map, problem.exact.at(t));
    const Eigen::VectorXd load = load_vector(disc, problem, t);

    NewtonResult res;
    res.U = combine(map, restrict_free(map, guess), lifted);
    SparseSolver solver;
    for (int it = 1; it <= config.max_iter; ++it) {
        const auto nl = assemble_nonlinear(map, disc.elements, res.U, problem.spec.f, true);
        const Eigen::VectorXd R = restrict_free(map, residual_full(disc, res.U, U_prev, load, dt, nl.F));
        const SparseMatrix J = free_block(disc.M + dt * disc.K - dt * nl.J, map);
        solver.compute(J);
        const Eigen::VectorXd dU = solver.solve(-R);
        for (int i = 0; i < map.num_free; ++i) {
            res.U(map.free_dofs[i]) += dU(i);
        }
        res.iterations = it;
        res.last_increment = dU.lpNorm<Eigen::Infinity>();
        if (!res.U.allFinite()) {
            break;
        }

        // an affine residual is solved exactly by the first update; detect that
        // by the updated residual sitting at the roundoff level of its terms
        const auto F = assemble_nonlinear(map, disc.elements, res.U, problem.spec.f, false).F;
        const Eigen::VectorXd Rn = restrict_free(map, residual_full(disc, res.U, U_prev, load, dt, F));
        res.last_residual = Rn.lpNorm<Eigen::Infinity>();
        const double roundoff = 1e2 * std::numeric_limits<double>::epsilon() *
                                (row_sum_norm(J) * res.U.lpNorm<Eigen::Infinity>() +
                                 row_sum_norm(disc.M) * U_prev.lpNorm<Eigen::Infinity>() +
                                 dt * load.lpNorm<Eigen::Infinity>() + dt * F.lpNorm<Eigen::Infinity>());
        if (res.last_increment < config.tol || res.last_residual <= roundoff) {
            res.converged = true;
            return res;
        }
    }
    std::ostringstream msg;
    msg << "newton did not converge at t = " << t << " after " << res.iterations
        << " iterations (last increment " << res.last_increment << ", residual " << res.last_residual
        << "); the time step may be too large";
    throw NonConvergenceError(msg.str(), res.last_increment, res.last_residual);
}

Eigen::VectorXd advance(const Discretization& disc, const Problem& problem, const TimeGrid& grid,
                        const NewtonConfig& config, const Eigen::VectorXd& U_start, int first_step, int count,
                        const StepCallback& on_step)
{
    Eigen::VectorXd U = U_start;
    const double dt = grid.dt();
    for (int n = first_step; n < first_step + count; ++n) {
        const double t = grid.t(n);
        const bool zero = config.initial_guess == InitialGuess::ZeroFirstStep && n == 1;
        const Eigen::VectorXd guess = zero ? Eigen::VectorXd::Zero(U.size()) : U;
        NewtonResult r;
        try {
            r = newton_solve(disc, problem, U, guess, t, dt, config);
        } catch (const NonConvergenceError& e) {
            throw NonConvergenceError("step " + std::to_string(n) + ": " + e.what(), e.last_increment(),
                                      e.last_residual());
        }
        U = std::move(r.U);
        if (on_step) {
            on_step(StepStats{n, t, r.iterations, r.last_increment}, U);
        }
    }
    return U;
}

double step_bound(const ProblemSpec& spec)
{
    return 1.0 / (2.0 * spec.lipschitz);
}

}  // namespace polyvem
