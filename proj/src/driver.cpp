#include "polyvem/driver.hpp"

#include "polyvem/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace polyvem {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos == v.size() && std::isfinite(x)) {
            return x;
        }
    } catch (const std::exception&) {
    }
    // allow simple fractions such as 1/4
    const auto slash = v.find('/');
    if (slash != std::string::npos) {
        const double num = to_double(key, trim(v.substr(0, slash)));
        const double den = to_double(key, trim(v.substr(slash + 1)));
        if (den != 0.0) {
            return num / den;
        }
    }
    throw ConfigError("invalid number '" + v + "' for " + key);
}

long to_long(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos == v.size()) {
            return x;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("invalid integer '" + v + "' for " + key);
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("invalid boolean '" + v + "' for " + key);
}

std::vector<double> to_doubles(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    for (const auto& item : split(v, ',')) {
        out.push_back(to_double(key, item));
    }
    return out;
}

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& values)
{
    std::string out;
    for (const auto& v : values) {
        if (!out.empty()) {
            out += ',';
        }
        if constexpr (std::is_floating_point_v<T>) {
            out += num(v);
        } else {
            out += std::to_string(v);
        }
    }
    return out;
}

std::vector<int> doubling(int first, std::size_t count)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(first << i);
    }
    return out;
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& key_in, const std::string& value_in)
{
    const std::string key = trim(key_in);
    const std::string v = trim(value_in);
    if (key == "problem") {
        c.problem = v;
    } else if (key == "space") {
        c.space = v;
    } else if (key == "order") {
        c.order = static_cast<int>(to_long(key, v));
    } else if (key == "mesh") {
        c.mesh = v;
    } else if (key == "levels") {
        // either an explicit resolution list or a level count doubling from res0
        if (v.find(',') != std::string::npos) {
            c.resolutions.clear();
            for (const auto& item : split(v, ',')) {
                c.resolutions.push_back(static_cast<int>(to_long(key, item)));
            }
        } else {
            const long n = to_long(key, v);
            if (n < 1) {
                throw ConfigError("levels must be >= 1");
            }
            c.resolutions = doubling(c.resolutions.empty() ? 4 : c.resolutions.front(), static_cast<std::size_t>(n));
        }
    } else if (key == "res0") {
        const long r = to_long(key, v);
        if (r < 1) {
            throw ConfigError("res0 must be >= 1");
        }
        c.resolutions = doubling(static_cast<int>(r), std::max<std::size_t>(1, c.resolutions.size()));
    } else if (key == "dt") {
        c.dts = to_doubles(key, v);
    } else if (key == "diagonal") {
        c.diagonal = to_bool(key, v);
    } else if (key == "grid") {
        c.grid = to_bool(key, v);
    } else if (key == "bc") {
        c.bc = v;
    } else if (key == "tol") {
        c.tol = to_double(key, v);
    } else if (key == "max_iter") {
        c.max_iter = static_cast<int>(to_long(key, v));
    } else if (key == "initial_guess") {
        c.initial_guess = v;
    } else if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(to_long(key, v));
    } else if (key == "full_norm") {
        c.full_norm = to_bool(key, v);
    } else if (key == "T") {
        c.T_final = to_double(key, v);
    } else if (key == "threads") {
        c.threads = static_cast<int>(to_long(key, v));
    } else if (key == "out") {
        c.out = v;
    } else if (key == "format") {
        c.format = v;
    } else if (key == "custom_p0") {
        c.custom_p0 = to_doubles(key, v);
    } else if (key == "custom_p1") {
        c.custom_p1 = to_doubles(key, v);
    } else if (key == "alpha1") {
        c.alpha1 = to_double(key, v);
    } else if (key == "alpha2") {
        c.alpha2 = to_double(key, v);
    } else if (key == "nonlinearity") {
        c.nonlinearity = v;
    } else if (key == "custom_bound") {
        c.custom_bound = to_double(key, v);
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

RunConfig parse_config(const std::string& text, RunConfig base)
{
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        try {
            apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::string& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> effective_config(const RunConfig& c)
{
    const auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string("problem"); };
    std::vector<std::pair<std::string, std::string>> out{
        {"problem", c.problem},
        {"space", c.space},
        {"order", std::to_string(c.order)},
        {"mesh", c.mesh},
        {"levels", join(c.resolutions)},
        {"dt", join(c.dts)},
        {"diagonal", c.diagonal ? "true" : "false"},
        {"grid", c.grid ? "true" : "false"},
        {"bc", c.bc.empty() ? "problem" : c.bc},
        {"tol", num(c.tol)},
        {"max_iter", std::to_string(c.max_iter)},
        {"initial_guess", c.initial_guess},
        {"seed", std::to_string(c.seed)},
        {"full_norm", c.full_norm ? "true" : "false"},
        {"T", c.T_final > 0.0 ? num(c.T_final) : "problem"},
    };
    if (c.problem == "custom") {
        out.emplace_back("custom_p0", join(c.custom_p0));
        out.emplace_back("custom_p1", join(c.custom_p1));
        out.emplace_back("nonlinearity", c.nonlinearity);
        out.emplace_back("custom_bound", num(c.custom_bound));
    }
    out.emplace_back("alpha1", opt(c.alpha1));
    out.emplace_back("alpha2", opt(c.alpha2));
    return out;
}

void validate(const RunConfig& c)
{
    if (c.resolutions.empty()) {
        throw ConfigError("at least one refinement level is required");
    }
    for (int r : c.resolutions) {
        if (r < 1) {
            throw ConfigError("resolutions must be >= 1");
        }
    }
    if (c.dts.empty()) {
        throw ConfigError("at least one time step is required");
    }
    for (double dt : c.dts) {
        if (!(dt > 0.0)) {
            throw ConfigError("time steps must be positive");
        }
    }
    if (c.order < 2) {
        throw ConfigError("order must be >= 2");
    }
    if (!(c.tol > 0.0) || c.max_iter < 1) {
        throw ConfigError("newton tolerance must be positive and max_iter >= 1");
    }
    if (c.initial_guess != "zero-first" && c.initial_guess != "previous") {
        throw ConfigError("initial_guess must be zero-first or previous");
    }
    if (c.nonlinearity != "efk" && c.nonlinearity != "zero") {
        throw ConfigError("nonlinearity must be efk or zero");
    }
    if (c.T_final < 0.0) {
        throw ConfigError("T must be positive");
    }
    (void)parse_space(c.space);
    (void)parse_mesh_kind(c.mesh);
    if (!c.bc.empty()) {
        (void)parse_bc(c.bc);
    }
    if (!c.format.empty()) {
        (void)parse_report_format(c.format);
    }
    if (c.problem != "custom") {
        (void)make_problem(c.problem);
    } else if (c.custom_p0.empty() && c.custom_p1.empty()) {
        throw ConfigError("problem 'custom' needs polynomial coefficients (keys custom_p0, custom_p1)");
    }
}

Problem build_problem(const RunConfig& c)
{
    Problem p;
    if (c.problem == "custom") {
        const auto bc = c.bc.empty() ? BoundaryCondition::CP : parse_bc(c.bc);
        const auto f = c.nonlinearity == "zero" ? zero_nonlinearity() : efk_nonlinearity();
        p = make_polynomial_problem({c.custom_p0}, {c.custom_p1}, c.alpha1.value_or(1.0), c.alpha2.value_or(1.0), f,
                                    c.custom_bound, bc, c.T_final > 0.0 ? c.T_final : 1.0);
        if (c.nonlinearity == "zero") {
            p.spec.lipschitz = 0.0;
        }
        return p;
    }
    p = make_problem(c.problem);
    if (!c.bc.empty()) {
        p.spec.bc = parse_bc(c.bc);
    }
    if (c.T_final > 0.0) {
        p.spec.T_final = c.T_final;
    }
    if (c.alpha1) {
        p.spec.alpha1 = *c.alpha1;
    }
    if (c.alpha2) {
        p.spec.alpha2 = *c.alpha2;
    }
    if (!(p.spec.alpha1 > 0.0) || p.spec.alpha2 < 0.0) {
        throw ConfigError("coefficients must satisfy alpha1 > 0 and alpha2 >= 0");
    }
    return p;
}

RunReport run_single(const RunConfig& config, int resolution, double dt)
{
    validate(config);
    std::string stage = "setup";
    try {
        const Problem problem = build_problem(config);
        const auto kind = parse_mesh_kind(config.mesh);
        const DofLayout layout(parse_space(config.space), config.order);

        stage = "mesh";
        const PolygonalMesh mesh = generate({kind, resolution, config.seed}, problem.spec.domain);

        stage = "assemble";
        const Discretization disc = discretize(mesh, layout, problem.spec, config.threads);

        RunReport r;
        r.problem = problem.spec.name;
        r.space = to_string(layout.space());
        r.order = layout.order();
        r.mesh = config.mesh;
        r.resolution = resolution;
        r.h = mesh.nominal_h();
        r.free_dofs = disc.map.num_free;
        r.total_dofs = disc.map.total;
        r.cells = mesh.num_cells();
        r.diagnostics = mesh_diagnostics(mesh);
        r.full_norm = config.full_norm;

        stage = "advance";
        const TimeGrid grid = make_time_grid(problem.spec.T_final, dt);
        r.dt = grid.dt();
        r.steps = grid.N_steps;
        if (problem.spec.lipschitz > 0.0 && grid.dt() >= step_bound(problem.spec)) {
            r.warnings.push_back("time step " + num(grid.dt()) + " is not below the well-posedness bound 1/(2 L_f) = " +
                                 num(step_bound(problem.spec)));
        }
        NewtonConfig newton;
        newton.tol = config.tol;
        newton.max_iter = config.max_iter;
        newton.initial_guess =
            config.initial_guess == "previous" ? InitialGuess::PreviousStep : InitialGuess::ZeroFirstStep;

        const Eigen::VectorXd U0 = interpolate_initial(disc, problem.exact.at(0.0));
        std::vector<double> step_errors;
        long total_iterations = 0;
        advance(disc, problem, grid, newton, U0, 1, grid.N_steps, [&](const StepStats& s, const Eigen::VectorXd& U) {
            StepRecord rec;
            rec.step = s.step;
            rec.t = s.t;
            rec.iterations = s.iterations;
            rec.errors = broken_errors(disc, U, problem.exact.at(s.t));
            step_errors.push_back(config.full_norm ? rec.errors.full() : rec.errors.h2);
            r.newton_max = std::max(r.newton_max, s.iterations);
            total_iterations += s.iterations;
            r.records.push_back(rec);
        });

        stage = "postproc";
        r.e2 = accumulate_e2(step_errors, grid.dt());
        r.newton_avg = grid.N_steps > 0 ? static_cast<double>(total_iterations) / grid.N_steps : 0.0;
        return r;
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e.what());
    }
}

double level_dt(const RunConfig& config, int level)
{
    if (config.diagonal) {
        return config.dts.front() / std::pow(2.0, level);
    }
    if (config.dts.size() == config.resolutions.size()) {
        return config.dts[level];
    }
    return config.dts.front();
}

StudyReport run_study(const RunConfig& config)
{
    validate(config);
    StudyReport report;
    report.config = effective_config(config);
    std::map<std::pair<int, double>, double> e2_cache;
    std::vector<RateRow> rows;
    for (std::size_t i = 0; i < config.resolutions.size(); ++i) {
        const double dt = level_dt(config, static_cast<int>(i));
        report.runs.push_back(run_single(config, config.resolutions[i], dt));
        rows.push_back(summary_row(report.runs.back()));
        e2_cache[{config.resolutions[i], dt}] = report.runs.back().e2;
    }
    report.table = rate_table(std::move(rows));
    if (config.grid) {
        std::vector<double> dts;
        if (config.diagonal) {
            for (std::size_t j = 0; j < config.resolutions.size(); ++j) {
                dts.push_back(level_dt(config, static_cast<int>(j)));
            }
        } else {
            dts = config.dts;
        }
        report.grid_dt = dts;
        for (std::size_t i = 0; i < config.resolutions.size(); ++i) {
            report.grid_h.push_back(report.runs[i].h);
            std::vector<double> row;
            for (double dt : dts) {
                const auto key = std::make_pair(config.resolutions[i], dt);
                auto it = e2_cache.find(key);
                if (it == e2_cache.end()) {
                    it = e2_cache.emplace(key, run_single(config, key.first, dt).e2).first;
                }
                row.push_back(it->second);
            }
            report.grid_e2.push_back(std::move(row));
        }
    }
    return report;
}

StudyReport single_report(const RunConfig& config)
{
    validate(config);
    StudyReport report;
    report.config = effective_config(config);
    report.runs.push_back(run_single(config, config.resolutions.front(), level_dt(config, 0)));
    report.table = rate_table({summary_row(report.runs.back())});
    return report;
}

std::string plot_script(const std::string& csv_path)
{
    std::ostringstream s;
    s << "# Plots e2 against h from a polyvem study report.\n"
      << "import csv\n"
      << "import matplotlib\n"
      << "matplotlib.use(\"Agg\")\n"
      << "import matplotlib.pyplot as plt\n\n"
      << "path = \"" << csv_path << "\"\n"
      << "with open(path) as f:\n"
      << "    rows = list(csv.DictReader(line for line in f if not line.startswith(\"#\")))\n"
      << "h = [float(r[\"h\"]) for r in rows]\n"
      << "e2 = [float(r[\"e2\"]) for r in rows]\n"
      << "fig, ax = plt.subplots()\n"
      << "ax.loglog(h, e2, \"o-\", label=\"e2\")\n"
      << "if len(h) > 1:\n"
      << "    ax.loglog(h, [e2[0] * x / h[0] for x in h], \"k--\", label=\"slope 1\")\n"
      << "ax.set_xlabel(\"h\")\n"
      << "ax.set_ylabel(\"e2\")\n"
      << "ax.legend()\n"
      << "fig.savefig(path.rsplit(\".\", 1)[0] + \".png\", dpi=150)\n";
    return s.str();
}

}  // namespace polyvem
