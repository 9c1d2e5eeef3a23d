#include "polyvem/postproc.hpp"

#include "polyvem/errors.hpp"
#include "polyvem/polybasis.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

namespace polyvem {

double ErrorNorms::full() const
{
    return std::sqrt(l2 * l2 + h1 * h1 + h2 * h2);
}

ErrorNorms broken_errors(const Discretization& disc, const Eigen::VectorXd& U, const SmoothFunction& u,
                         int quad_degree)
{
    const int k = disc.layout.order();
    const int degree = quad_degree < 0 ? 2 * k + 2 : quad_degree;
    double l2 = 0.0, h1 = 0.0, h2 = 0.0;
    for (int c = 0; c < disc.mesh->num_cells(); ++c) {
        const auto& geo = disc.mesh->geometry(c);
        const auto& dofs = disc.map.cell_dofs[c];
        const auto& signs = disc.map.cell_signs[c];
        Eigen::VectorXd local(dofs.size());
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            local(static_cast<Eigen::Index>(i)) = signs[i] * U(dofs[i]);
        }
        const Eigen::VectorXd coeffs = disc.elements[c].P_H2 * local;
        const auto basis = build_element_basis(geo, k);
        const auto quad = polygon_quadrature(geo.vertices, degree);
        for (int q = 0; q < quad.size(); ++q) {
            const Point x = quad.points.col(q);
            const double w = quad.weights(q);
            const double ev = u.value(x) - basis.values(x).dot(coeffs);
            const Eigen::Vector2d eg = u.gradient(x) - basis.gradients(x).transpose() * coeffs;
            l2 += w * ev * ev;
            h1 += w * eg.squaredNorm();
            if (u.hessian) {
                const Eigen::Vector3d eh = u.hessian(x) - basis.hessians(x).transpose() * coeffs;
                h2 += w * (eh(0) * eh(0) + 2.0 * eh(1) * eh(1) + eh(2) * eh(2));
            }
        }
    }
    return {std::sqrt(l2), std::sqrt(h1), std::sqrt(h2)};
}

double broken_error(const Discretization& disc, const Eigen::VectorXd& U, const SmoothFunction& u, int level,
                    bool full_norm, int quad_degree)
{
    if (level < 0 || level > 2) {
        throw InputError("broken_error: level must be 0, 1 or 2");
    }
    const auto e = broken_errors(disc, U, u, quad_degree);
    if (level == 0) return e.l2;
    if (level == 1) return e.h1;
    return full_norm ? e.full() : e.h2;
}

double accumulate_e2(const std::vector<double>& step_errors, double dt)
{
    double sum = 0.0;
    for (double e : step_errors) {
        sum += e * e;
    }
    return std::sqrt(dt * sum);
}

RateTable rate_table(std::vector<RateRow> rows)
{
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 0) {
            rows[i].rate = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        if (!(rows[i].h < rows[i - 1].h)) {
            throw InputError("rate table: mesh sizes must be strictly decreasing");
        }
        rows[i].rate = std::log(rows[i - 1].e2 / rows[i].e2) / std::log(rows[i - 1].h / rows[i].h);
    }
    return {std::move(rows)};
}

ReportFormat parse_report_format(const std::string& name)
{
    if (name == "text" || name == "txt") return ReportFormat::Text;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw ConfigError("unknown report format '" + name + "' (valid: text, csv, json)");
}

ReportFormat format_for_path(const std::string& path)
{
    const auto ends = [&](const std::string& ext) {
        return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
    };
    if (ends(".csv")) return ReportFormat::Csv;
    if (ends(".json")) return ReportFormat::Json;
    return ReportFormat::Text;
}

RateRow summary_row(const RunReport& run)
{
    return {run.h, run.free_dofs, run.e2, std::numeric_limits<double>::quiet_NaN(), run.newton_max, run.newton_avg};
}

namespace {

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

nlohmann::json to_json(const ErrorNorms& e)
{
    return {{"l2", e.l2}, {"h1", e.h1}, {"h2", e.h2}};
}

nlohmann::json to_json(const RunReport& r)
{
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.records) {
        steps.push_back({{"step", s.step}, {"t", s.t}, {"newton_iterations", s.iterations},
                         {"errors", to_json(s.errors)}});
    }
    const auto& d = r.diagnostics;
    return {{"problem", r.problem},
            {"space", r.space},
            {"order", r.order},
            {"mesh", r.mesh},
            {"resolution", r.resolution},
            {"h", r.h},
            {"free_dofs", r.free_dofs},
            {"total_dofs", r.total_dofs},
            {"cells", r.cells},
            {"dt", r.dt},
            {"steps", r.steps},
            {"full_norm", r.full_norm},
            {"e2", r.e2},
            {"newton_max", r.newton_max},
            {"newton_avg", r.newton_avg},
            {"mesh_diagnostics",
             {{"h_max", d.h},
              {"min_edge_ratio", d.min_edge_ratio},
              {"quasi_uniformity_ratio", d.quasi_uniformity_ratio},
              {"min_area", d.min_area},
              {"total_area", d.total_area},
              {"nonconvex_cells", d.num_nonconvex},
              {"not_star_shaped_cells", d.num_not_star_shaped}}},
            {"step_records", steps},
            {"warnings", r.warnings}};
}

}  // namespace

void write_report(std::ostream& out, const StudyReport& report, ReportFormat format)
{
    if (format == ReportFormat::Json) {
        nlohmann::json j;
        nlohmann::json cfg = nlohmann::json::object();
        for (const auto& [k, v] : report.config) {
            cfg[k] = v;
        }
        j["config"] = cfg;
        j["runs"] = nlohmann::json::array();
        for (const auto& r : report.runs) {
            j["runs"].push_back(to_json(r));
        }
        j["table"] = nlohmann::json::array();
        for (const auto& row : report.table.rows) {
            j["table"].push_back({{"h", row.h},
                                  {"dofs", row.dofs},
                                  {"e2", row.e2},
                                  {"rate", std::isnan(row.rate) ? nlohmann::json(nullptr) : nlohmann::json(row.rate)},
                                  {"newton_max", row.newton_max},
                                  {"newton_avg", row.newton_avg}});
        }
        if (!report.grid_e2.empty()) {
            j["grid"] = {{"h", report.grid_h}, {"dt", report.grid_dt}, {"e2", report.grid_e2}};
        }
        out << j.dump(2) << '\n';
        return;
    }
    for (const auto& [k, v] : report.config) {
        out << "# " << k << " = " << v << '\n';
    }
    if (format == ReportFormat::Csv) {
        out << "h,dofs,e2,rate,newton_max,newton_avg\n";
        for (const auto& row : report.table.rows) {
            out << fmt("%.17g", row.h) << ',' << row.dofs << ',' << fmt("%.17g", row.e2) << ','
                << (std::isnan(row.rate) ? std::string() : fmt("%.17g", row.rate)) << ',' << row.newton_max << ','
                << fmt("%.17g", row.newton_avg) << '\n';
        }
        return;
    }
    char line[160];
    std::snprintf(line, sizeof line, "%12s %10s %14s %8s %11s %11s\n", "h", "dofs", "e2", "rate", "newton_max",
                  "newton_avg");
    out << line;
    for (const auto& row : report.table.rows) {
        std::snprintf(line, sizeof line, "%12.6g %10ld %14.6e %8s %11d %11.3f\n", row.h, row.dofs, row.e2,
                      std::isnan(row.rate) ? "-" : fmt("%.3f", row.rate).c_str(), row.newton_max, row.newton_avg);
        out << line;
    }
    if (!report.grid_e2.empty()) {
        out << "\ne2 on the (h, dt) grid\n";
        std::snprintf(line, sizeof line, "%12s", "h \\ dt");
        out << line;
        for (double dt : report.grid_dt) {
            std::snprintf(line, sizeof line, " %12.5g", dt);
            out << line;
        }
        out << '\n';
        for (std::size_t i = 0; i < report.grid_h.size(); ++i) {
            std::snprintf(line, sizeof line, "%12.6g", report.grid_h[i]);
            out << line;
            for (double e : report.grid_e2[i]) {
                std::snprintf(line, sizeof line, " %12.5e", e);
                out << line;
            }
            out << '\n';
        }
    }
}

void emit_report(const StudyReport& report, const std::string& path, ReportFormat format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open report file '" + path + "' for writing");
    }
    write_report(out, report, format);
    out.flush();
    if (!out) {
        throw Error("failed writing report file '" + path + "'");
    }
}

}  // namespace polyvem
