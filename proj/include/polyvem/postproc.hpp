#pragma once

// Errors of the reconstruction Pi^{k,grad^2} u_h, time-accumulated norms,
// convergence rates and report files.

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "polyvem/field.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/timestepper.hpp"

namespace polyvem {

/// Broken norms of u - Pi u_h: L2, H1 seminorm, H2 seminorm.
struct ErrorNorms {
    double l2 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;

    /// Full broken H2 norm (all three levels combined).
    [[nodiscard]] double full() const;
};

/// Quadrature degree defaults to 2k + 2.
ErrorNorms broken_errors(const Discretization& disc, const Eigen::VectorXd& U, const SmoothFunction& u,
                         int quad_degree = -1);

/// Level 0, 1 or 2; with `full_norm`, level 2 combines levels 0..2.
double broken_error(const Discretization& disc, const Eigen::VectorXd& U, const SmoothFunction& u, int level,
                    bool full_norm = false, int quad_degree = -1);

/// (dt sum_n e_n^2)^{1/2}
double accumulate_e2(const std::vector<double>& step_errors, double dt);

struct RateRow {
    double h = 0.0;
    long dofs = 0;
    double e2 = 0.0;
    double rate = 0.0;  // NaN on the first row
    int newton_max = 0;
    double newton_avg = 0.0;
};

struct RateTable {
    std::vector<RateRow> rows;
};

/// Fills the rate column; h must be strictly decreasing.
RateTable rate_table(std::vector<RateRow> rows);

struct StepRecord {
    int step = 0;
    double t = 0.0;
    int iterations = 0;
    ErrorNorms errors;
};

struct RunReport {
    std::string problem;
    std::string space;
    int order = 0;
    std::string mesh;
    int resolution = 0;
    double h = 0.0;      // nominal mesh size used for rates
    long free_dofs = 0;
    long total_dofs = 0;
    int cells = 0;
    double dt = 0.0;
    int steps = 0;
    MeshDiagnostics diagnostics;
    std::vector<StepRecord> records;
    bool full_norm = true;
    double e2 = 0.0;
    int newton_max = 0;
    double newton_avg = 0.0;
    std::vector<std::string> warnings;
};

struct StudyReport {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<RunReport> runs;
    RateTable table;
    /// Optional (h, dt) grid: e2 per resolution (rows) and step (columns).
    std::vector<double> grid_h;
    std::vector<double> grid_dt;
    std::vector<std::vector<double>> grid_e2;
};

enum class ReportFormat { Text, Csv, Json };

ReportFormat parse_report_format(const std::string& name);
/// From the file extension: .csv, .json, anything else text.
ReportFormat format_for_path(const std::string& path);

RateRow summary_row(const RunReport& run);

void write_report(std::ostream& out, const StudyReport& report, ReportFormat format);
/// Writes to a file; throws Error on I/O failure.
void emit_report(const StudyReport& report, const std::string& path, ReportFormat format);

}  // namespace polyvem
