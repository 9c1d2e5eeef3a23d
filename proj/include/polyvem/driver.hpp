#pragma once

// Run configuration and the mesh -> assemble -> advance -> postproc pipeline.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyvem/mesh.hpp"
#include "polyvem/postproc.hpp"
#include "polyvem/problems.hpp"
#include "polyvem/timestepper.hpp"
#include "polyvem/vem_element.hpp"

namespace polyvem {

/// Defaults reproduce the clamped Test 1 study: Morley k = 2 on criss-cross
/// triangles, h = dt = 1/4 halved four times.
struct RunConfig {
    std::string problem = "test1_cp";
    std::string space = "morley";
    int order = 2;
    std::string mesh = "triangular";
    std::vector<int> resolutions{4, 8, 16, 32, 64};
    std::vector<double> dts{0.25};
    /// Halve dt with every level, starting from dts[0].
    bool diagonal = true;
    /// Also run every (resolution, dt) pair.
    bool grid = false;
    std::string bc;  // empty: the problem's own condition
    double tol = 1e-8;
    int max_iter = 25;
    std::string initial_guess = "zero-first";
    std::uint64_t seed = 1;
    bool full_norm = true;
    double T_final = 0.0;  // 0: the problem's own final time
    int threads = -1;
    std::string out;
    std::string format;  // empty: from the output extension
    // custom problem
    std::vector<double> custom_p0;
    std::vector<double> custom_p1;
    std::optional<double> alpha1;  // unset: the problem's own coefficient
    std::optional<double> alpha2;
    std::string nonlinearity = "efk";
    double custom_bound = 1.0;
};

/// Sets one key from its text value; throws ConfigError for unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` text, `#` starts a comment.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Every key with its effective value, in a fixed order.
std::vector<std::pair<std::string, std::string>> effective_config(const RunConfig& config);

/// Checks cross-field constraints (nonempty lists, k >= 2, known names).
void validate(const RunConfig& config);

Problem build_problem(const RunConfig& config);

/// One run at the given resolution and step.
RunReport run_single(const RunConfig& config, int resolution, double dt);

/// Time step of refinement level `level`.
double level_dt(const RunConfig& config, int level);

/// Runs every level (and the grid when requested) and builds the rate table.
StudyReport run_study(const RunConfig& config);

/// Report of a single run (the first level) with its one-row table.
StudyReport single_report(const RunConfig& config);

/// Python/matplotlib script plotting e2 against h from a CSV report.
std::string plot_script(const std::string& csv_path);

}  // namespace polyvem
