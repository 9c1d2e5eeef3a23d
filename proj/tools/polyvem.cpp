// polyvem command-line driver.

#include <CLI11.hpp>
#include <json.hpp>

#include "polyvem/driver.hpp"
#include "polyvem/errors.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/verify.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

using namespace polyvem;

namespace {

struct RunFlags {
    std::string config_file;
    std::map<std::string, std::string> values;  // only flags given on the command line
    std::vector<std::string> sets;
};

void add_run_flags(CLI::App* cmd, RunFlags& f)
{
    cmd->add_option("--config", f.config_file, "key = value configuration file");
    const std::vector<std::pair<std::string, std::string>> options{
        {"problem", "test1_cp, test1_nc, test2_ch, test3_gamma, custom"},
        {"space", "c0nc or morley"},
        {"order", "polynomial order k >= 2"},
        {"mesh", "triangular, distorted, concave, cvt, gamma-triangular"},
        {"levels", "level count (doubling from res0) or a resolution list such as 4,8,16"},
        {"res0", "resolution of the first level"},
        {"dt", "time step, or a comma list"},
        {"bc", "boundary condition override: cp, nc, ch"},
        {"tol", "Newton tolerance on the max-norm of the increment"},
        {"max-iter", "Newton iteration cap"},
        {"seed", "mesh generator seed"},
        {"out", "report file (.txt, .csv or .json)"},
        {"format", "report format override: text, csv, json"},
        {"threads", "worker threads for element loops"},
    };
    for (const auto& [name, help] : options) {
        cmd->add_option_function<std::string>(
            "--" + name, [&f, key = name](const std::string& v) { f.values[key] = v; }, help);
    }
    cmd->add_flag_function(
        "--diagonal,!--no-diagonal", [&f](std::int64_t n) { f.values["diagonal"] = n > 0 ? "true" : "false"; },
        "halve the time step with every level (default on)");
    cmd->add_option("--set", f.sets, "any configuration key as key=value")->take_all();
}

RunConfig build_config(const RunFlags& f)
{
    RunConfig c;
    if (!f.config_file.empty()) {
        c = load_config(f.config_file, c);
    }
    for (const auto& [key, value] : f.values) {
        const std::string k = key == "max-iter" ? "max_iter" : key;
        if (k != "levels" && k != "res0") {
            apply_setting(c, k, value);
        }
    }
    // res0 first so a level count doubles from it
    if (auto it = f.values.find("res0"); it != f.values.end()) {
        apply_setting(c, "res0", it->second);
    }
    if (auto it = f.values.find("levels"); it != f.values.end()) {
        apply_setting(c, "levels", it->second);
    }
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + s + "'");
        }
        apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
    }
    validate(c);
    return c;
}

ReportFormat report_format(const RunConfig& c)
{
    return c.format.empty() ? format_for_path(c.out) : parse_report_format(c.format);
}

void print_warnings(const StudyReport& r)
{
    for (const auto& run : r.runs) {
        for (const auto& w : run.warnings) {
            std::cerr << "warning (h = " << run.h << ", dt = " << run.dt << "): " << w << '\n';
        }
    }
}

int cmd_run(const RunFlags& flags)
{
    const RunConfig c = build_config(flags);
    const StudyReport report = single_report(c);
    print_warnings(report);
    write_report(std::cout, report, ReportFormat::Text);
    if (!c.out.empty()) {
        emit_report(report, c.out, report_format(c));
    }
    return 0;
}

int cmd_study(const RunFlags& flags, bool grid)
{
    RunConfig c = build_config(flags);
    if (grid) {
        c.grid = true;
    }
    if (c.resolutions.size() < 2) {
        throw ConfigError("a study needs at least two refinement levels");
    }
    const StudyReport report = run_study(c);
    print_warnings(report);
    write_report(std::cout, report, ReportFormat::Text);
    if (!c.out.empty()) {
        const auto format = report_format(c);
        emit_report(report, c.out, format);
        const auto dot = c.out.find_last_of('.');
        const std::string stem = dot == std::string::npos ? c.out : c.out.substr(0, dot);
        std::string csv = c.out;
        if (format != ReportFormat::Csv) {
            csv = stem + ".csv";
            emit_report(report, csv, ReportFormat::Csv);
        }
        std::ofstream script(stem + "_plot.py");
        script << plot_script(csv);
        if (!script) {
            throw Error("cannot write plotting script " + stem + "_plot.py");
        }
    }
    return 0;
}

int cmd_verify(const std::vector<std::string>& suites_in, const std::string& out)
{
    const auto suites = suites_in.empty() ? verify_suites() : suites_in;
    nlohmann::json summary = nlohmann::json::array();
    bool all = true;
    for (const auto& suite : suites) {
        for (const auto& r : run_verify(suite)) {
            all = all && r.passed;
            std::printf("%s  %-55s %.3e <= %.1e  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.value,
                        r.threshold, r.detail.c_str());
            summary.push_back({{"suite", suite},
                               {"name", r.name},
                               {"passed", r.passed},
                               {"value", r.value},
                               {"threshold", r.threshold},
                               {"detail", r.detail}});
        }
    }
    if (!out.empty()) {
        std::ofstream f(out);
        f << summary.dump(2) << '\n';
        if (!f) {
            throw Error("cannot write " + out);
        }
    }
    std::printf("%s\n", all ? "all checks passed" : "some checks FAILED");
    return all ? 0 : 1;
}

int cmd_mesh_gen(const std::string& kind, int res, std::uint64_t seed, const std::string& domain,
                 const std::string& out)
{
    Domain d = Domain::UnitSquare;
    if (domain == "gamma") {
        d = Domain::GammaShape;
    } else if (domain != "square") {
        throw ConfigError("domain must be square or gamma");
    }
    const PolygonalMesh mesh = generate({parse_mesh_kind(kind), res, seed}, d);
    if (out.empty()) {
        std::cout << format_mesh(mesh);
    } else {
        save_mesh(mesh, out);
        std::cerr << "wrote " << mesh.num_cells() << " cells to " << out << '\n';
    }
    return 0;
}

int cmd_mesh_info(const std::string& path)
{
    std::vector<std::string> warnings;
    const PolygonalMesh mesh = load_mesh(path, &warnings);
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    const auto d = mesh_diagnostics(mesh);
    int boundary_edges = 0;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        boundary_edges += mesh.boundary_edge(e);
    }
    std::printf("vertices               %d\n", mesh.num_vertices());
    std::printf("edges                  %d (%d on the boundary)\n", mesh.num_edges(), boundary_edges);
    std::printf("cells                  %d\n", mesh.num_cells());
    std::printf("h (max diameter)       %.6g\n", d.h);
    std::printf("min edge / h_K         %.6g\n", d.min_edge_ratio);
    std::printf("min h_K / h            %.6g\n", d.quasi_uniformity_ratio);
    std::printf("min area               %.6g\n", d.min_area);
    std::printf("total area             %.12g\n", d.total_area);
    std::printf("nonconvex cells        %d\n", d.num_nonconvex);
    std::printf("not star-shaped cells  %d\n", d.num_not_star_shaped);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"polyvem: nonconforming virtual elements for fourth-order parabolic problems"};
    app.require_subcommand(1);

    RunFlags run_flags, study_flags;
    auto* run = app.add_subcommand("run", "single run at the first level");
    add_run_flags(run, run_flags);
    auto* study = app.add_subcommand("study", "refinement study with convergence rates");
    add_run_flags(study, study_flags);
    bool grid = false;
    study->add_flag("--grid", grid, "also run every (h, dt) pair");

    std::vector<std::string> suites;
    std::string verify_out;
    auto* verify = app.add_subcommand("verify", "self-verification suites");
    verify->add_option("suites", suites, "dims, projectors, consistency, patch, jacobian, bc (default: all)");
    verify->add_option("--out", verify_out, "JSON summary file");

    auto* mesh = app.add_subcommand("mesh", "mesh utilities");
    mesh->require_subcommand(1);
    std::string kind = "triangular", domain = "square", mesh_out, mesh_file;
    int res = 4;
    std::uint64_t seed = 1;
    auto* gen = mesh->add_subcommand("gen", "generate a mesh");
    gen->add_option("--mesh", kind, "triangular, distorted, concave, cvt, gamma-triangular");
    gen->add_option("--res", res, "resolution (h = 1/res)");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--domain", domain, "square or gamma");
    gen->add_option("--out", mesh_out, "output file (stdout when omitted)");
    auto* info = mesh->add_subcommand("info", "mesh statistics");
    info->add_option("file", mesh_file, "mesh file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (study->parsed()) return cmd_study(study_flags, grid);
        if (verify->parsed()) return cmd_verify(suites, verify_out);
        if (gen->parsed()) return cmd_mesh_gen(kind, res, seed, domain, mesh_out);
        if (info->parsed()) return cmd_mesh_info(mesh_file);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const StageError& e) {
        std::cerr << "error during " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
