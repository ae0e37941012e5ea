#pragma once

// Benchmark experiments: error tables, iteration tables, solver comparisons
// and time growth. Each experiment writes a CSV (config comment line, header
// row, one row per cell) plus a key=value record of every solve.

#include "dualtpd/config.hpp"
#include "dualtpd/fem.hpp"
#include "dualtpd/mesh.hpp"
#include "dualtpd/problems.hpp"
#include "dualtpd/solvers.hpp"
#include "dualtpd/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace dualtpd {

enum class Experiment { error_table, iteration_table, solver_compare, time_growth };

inline Experiment parse_experiment(const std::string& s)
{
    if (s == "error-table") {
        return Experiment::error_table;
    }
    if (s == "iteration-table") {
        return Experiment::iteration_table;
    }
    if (s == "solver-compare") {
        return Experiment::solver_compare;
    }
    if (s == "time-growth") {
        return Experiment::time_growth;
    }
    throw ConfigError("unknown experiment: " + s);
}

inline std::string to_string(Experiment e)
{
    switch (e) {
    case Experiment::error_table: return "error-table";
    case Experiment::iteration_table: return "iteration-table";
    case Experiment::solver_compare: return "solver-compare";
    case Experiment::time_growth: return "time-growth";
    }
    return "?";
}

inline const std::vector<std::string>& known_solvers()
{
    static const std::vector<std::string> names{"DualTPD-J", "DualTPD-M", "Newton", "DualPD", "PGD", "PGD-fixed"};
    return names;
}

/// Solver configuration from the flat config. Per-solver alpha overrides use
/// the key `alpha.<solver>`; `eps0_p_lt_2` replaces eps0 when p < 2.
inline SolverConfig solver_config_from(const KeyValueConfig& cfg, const std::string& solver, double p)
{
    SolverConfig sc;
    sc.alpha = cfg.get_double("alpha." + solver, cfg.get_double("alpha", 1.0));
    sc.preconditioner = solver == "DualTPD-M" ? SigmaPreconditioner::mass : SigmaPreconditioner::jacobian;
    const std::string pre = cfg.get_string("preconditioner." + solver, "");
    if (pre == "mass") {
        sc.preconditioner = SigmaPreconditioner::mass;
    } else if (pre == "jacobian") {
        sc.preconditioner = SigmaPreconditioner::jacobian;
    } else if (!pre.empty()) {
        throw ConfigError("unknown preconditioner: " + pre);
    }
    sc.lambda = cfg.get_double("lambda", 1e-4);
    sc.eps0 = cfg.get_double("eps0", 1e-16);
    if (p < 2.0 && cfg.has("eps0_p_lt_2")) {
        sc.eps0 = cfg.get_double("eps0_p_lt_2", sc.eps0);
    }
    sc.literal_middle_branch = cfg.get_bool("literal_middle_branch", false);
    sc.mg.tol = cfg.get_double("mg_tol", 1e-2);
    sc.mg.max_cycles = static_cast<int>(cfg.get_int("mg_max_cycles", 5));
    sc.mg.pre_smooth = static_cast<int>(cfg.get_int("pre_smooth", 2));
    sc.mg.post_smooth = static_cast<int>(cfg.get_int("post_smooth", 2));
    const std::string inner = cfg.get_string("inner", "multigrid");
    if (inner == "multigrid") {
        sc.inner = InnerSolver::multigrid;
    } else if (inner == "pcg") {
        sc.inner = InnerSolver::pcg;
    } else {
        throw ConfigError("unknown inner solver: " + inner);
    }
    sc.stop_tol = cfg.get_double("stop_tol", 1e-6);
    sc.max_outer = static_cast<int>(cfg.get_int("max_outer", 500));
    sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    sc.theta = cfg.get_double("theta", 0.0);
    sc.validate();
    return sc;
}

inline SolveResult run_solver(const std::string& name, const DiscreteProblem& prob, const SolverConfig& sc)
{
    if (name == "DualTPD-J" || name == "DualTPD-M") {
        return dual_tpd_solve(prob, sc);
    }
    if (name == "Newton") {
        return newton_solve(prob, sc);
    }
    if (name == "DualPD") {
        return dual_pd_solve(prob, sc);
    }
    if (name == "PGD") {
        return pgd_solve(prob, sc, PgdMode::line_search);
    }
    if (name == "PGD-fixed") {
        return pgd_solve(prob, sc, PgdMode::fixed_step);
    }
    throw ConfigError("unknown solver: " + name);
}

/// One (solver, p, h, init) run.
struct BenchCell {
    std::string solver;
    double p = 2.0;
    double alpha = 1.0;
    int n = 0;
    InitKind init = InitKind::zero;
    Index dofs = 0;
    SolveReport report;
    double err_u = NAN;
    double err_sigma = NAN;
    std::string status = "pending";

    [[nodiscard]] bool converged() const { return status == "ok"; }
};

namespace detail {

inline std::string csv_safe(std::string s)
{
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

inline std::vector<int> levels_from(const KeyValueConfig& cfg, std::vector<int> fallback)
{
    std::vector<int> out;
    for (double v : cfg.get_double_list("levels")) {
        if (v < 1.0 || v != std::floor(v)) {
            throw ConfigError("levels: entries must be positive integers");
        }
        out.push_back(static_cast<int>(v));
    }
    return out.empty() ? fallback : out;
}

inline std::vector<double> doubles_or(const KeyValueConfig& cfg, const std::string& key, std::vector<double> fallback)
{
    auto v = cfg.get_double_list(key);
    return v.empty() ? fallback : v;
}

inline std::vector<InitKind> inits_from(const KeyValueConfig& cfg, std::vector<std::string> fallback)
{
    auto names = cfg.get_list("init");
    if (names.empty()) {
        names = std::move(fallback);
    }
    std::vector<InitKind> out;
    for (const auto& s : names) {
        if (s == "zero") {
            out.push_back(InitKind::zero);
        } else if (s == "random") {
            out.push_back(InitKind::random);
        } else {
            throw ConfigError("unknown init: " + s);
        }
    }
    return out;
}

inline std::vector<std::string> solvers_from(const KeyValueConfig& cfg, std::vector<std::string> fallback)
{
    auto names = cfg.get_list("solvers");
    if (names.empty()) {
        names = std::move(fallback);
    }
    for (const auto& s : names) {
        if (std::find(known_solvers().begin(), known_solvers().end(), s) == known_solvers().end()) {
            throw ConfigError("unknown solver: " + s);
        }
    }
    return names;
}

inline ProblemSpec spec_for(Domain domain, double p)
{
    return domain == Domain::square ? square_manufactured(p) : disk_radial(p);
}

} // namespace detail

/// Runs one cell. Solver failures are recorded in `status`, never thrown.
inline BenchCell run_cell(const KeyValueConfig& cfg, Domain domain, const std::string& solver, double p, int n,
                          InitKind init)
{
    BenchCell cell;
    cell.solver = solver;
    cell.p = p;
    cell.n = n;
    cell.init = init;
    try {
        SolverConfig sc = solver_config_from(cfg, solver, p);
        sc.init = init;
        cell.alpha = sc.alpha;
        const ProblemSpec spec = detail::spec_for(domain, p);
        const DiscreteProblem prob = discretize(spec, n);
        cell.dofs = prob.num_dofs();
        SolveResult res = run_solver(solver, prob, sc);
        cell.report = std::move(res.report);
        if (spec.exact_u && all_finite(res.state.u)) {
            cell.err_u = l2_error_p1(*prob.p1, res.state.u, *spec.exact_u);
        }
        if (spec.exact_sigma && all_finite(res.state.sigma)) {
            cell.err_sigma = l2_error_p0(*prob.p0, res.state.sigma, *spec.exact_sigma);
        }
        cell.status = cell.report.converged ? "ok" : "not-converged";
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        cell.status = std::string("error: ") + e.what();
    }
    return cell;
}

/// Evaluates `jobs` in order, concurrently when `parallel` is set.
inline std::vector<BenchCell> run_cells(const std::vector<std::function<BenchCell()>>& jobs, bool parallel)
{
    std::vector<BenchCell> out;
    out.reserve(jobs.size());
    if (!parallel) {
        for (const auto& j : jobs) {
            out.push_back(j());
        }
        return out;
    }
    std::vector<std::future<BenchCell>> futs;
    futs.reserve(jobs.size());
    for (const auto& j : jobs) {
        futs.push_back(std::async(std::launch::async, j));
    }
    for (auto& f : futs) {
        out.push_back(f.get());
    }
    return out;
}

/// Least-squares slope of log(y) against log(x); NaN with fewer than two
/// usable points.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            pts.emplace_back(std::log(x[i]), std::log(y[i]));
        }
    }
    if (pts.size() < 2) {
        return NAN;
    }
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [a, b] : pts) {
        mx += a;
        my += b;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [a, b] : pts) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    return sxx > 0.0 ? sxy / sxx : NAN;
}

/// Observed convergence rate log(e0/e1)/log(h0/h1) between consecutive levels.
inline double observed_rate(double e0, double e1, int n0, int n1)
{
    if (!(e0 > 0.0 && e1 > 0.0)) {
        return NAN;
    }
    return std::log(e0 / e1) / std::log(static_cast<double>(n1) / n0);
}

/// Log-log polyline plot of (x, y) as a standalone SVG document.
inline std::string svg_loglog(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel)
{
    constexpr double w = 480.0;
    constexpr double h = 360.0;
    constexpr double margin = 60.0;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            pts.emplace_back(std::log10(x[i]), std::log10(y[i]));
        }
    }
    double x0 = 0.0;
    double x1 = 1.0;
    double y0 = 0.0;
    double y1 = 1.0;
    if (!pts.empty()) {
        x0 = x1 = pts.front().first;
        y0 = y1 = pts.front().second;
        for (const auto& [a, b] : pts) {
            x0 = std::min(x0, a);
            x1 = std::max(x1, a);
            y0 = std::min(y0, b);
            y1 = std::max(y1, b);
        }
    }
    if (x1 - x0 < 1e-12) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    auto px = [&](double a) { return margin + (a - x0) / (x1 - x0) * (w - 2 * margin); };
    auto py = [&](double b) { return h - margin - (b - y0) / (y1 - y0) * (h - 2 * margin); };

    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
       << ' ' << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin << "\" y2=\"" << h - margin
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << h - margin
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"" << h - 16 << "\" text-anchor=\"middle\" font-size=\"12\">log10 " << xlabel
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << h / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
       << h / 2 << ")\">log10 " << ylabel << "</text>\n";
    os << "<text x=\"" << margin << "\" y=\"" << h - margin + 16 << "\" font-size=\"10\">" << x0 << "</text>\n";
    os << "<text x=\"" << w - margin << "\" y=\"" << h - margin + 16 << "\" text-anchor=\"end\" font-size=\"10\">" << x1
       << "</text>\n";
    os << "<text x=\"" << margin - 4 << "\" y=\"" << h - margin << "\" text-anchor=\"end\" font-size=\"10\">" << y0
       << "</text>\n";
    os << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << y1
       << "</text>\n";
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        os << (i ? " " : "") << px(pts[i].first) << ',' << py(pts[i].second);
    }
    os << "\"/>\n";
    for (const auto& [a, b] : pts) {
        os << "<circle cx=\"" << px(a) << "\" cy=\"" << py(b) << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Everything an experiment produced; `csv` and `records` are file contents.
struct BenchOutput {
    std::string name;
    std::vector<BenchCell> cells;
    std::string csv;
    std::string records;
    std::string svg;       ///< time-growth only
    double slope = NAN;    ///< time-growth only

    [[nodiscard]] bool all_converged() const
    {
        return std::all_of(cells.begin(), cells.end(), [](const BenchCell& c) { return c.converged(); });
    }
};

namespace detail {

inline std::string init_name(InitKind k)
{
    return k == InitKind::zero ? "zero" : "random";
}

inline std::string records_of(const std::vector<BenchCell>& cells)
{
    std::ostringstream os;
    for (const auto& c : cells) {
        os << "[cell]\n"
           << "p=" << c.p << '\n'
           << "h=1/" << c.n << '\n'
           << "init=" << init_name(c.init) << '\n'
           << "alpha=" << c.alpha << '\n'
           << "status=" << c.status << '\n';
        if (c.report.solver.empty()) {
            os << "solver=" << c.solver << '\n';
        } else {
            os << to_key_value(c.report);
        }
        os << '\n';
    }
    return os.str();
}

inline std::string fmt(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

} // namespace detail

inline BenchOutput run_error_table(const KeyValueConfig& cfg)
{
    const Domain domain = parse_domain(cfg.get_string("domain", "square"));
    const double p = cfg.get_double("p", 4.0);
    const std::string solver = cfg.get_string("solver", "DualTPD-J");
    KeyValueConfig solve_cfg = cfg;
    if (!cfg.has("stop_tol")) {
        solve_cfg.set("stop_tol", "1e-10");
    }
    const auto levels = detail::levels_from(cfg, {16, 32, 64});
    std::vector<std::function<BenchCell()>> jobs;
    for (int n : levels) {
        jobs.emplace_back([=] { return run_cell(solve_cfg, domain, solver, p, n, InitKind::zero); });
    }
    BenchOutput out;
    out.name = "error-table";
    out.cells = run_cells(jobs, cfg.get_bool("parallel", false));

    std::ostringstream os;
    os << "# config: " << solve_cfg.to_line() << '\n';
    os << "h,dofs,err_u,err_sigma,rate_u,rate_sigma,iterations,converged,status\n";
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
        const auto& c = out.cells[i];
        double ru = NAN;
        double rs = NAN;
        if (i > 0) {
            const auto& prev = out.cells[i - 1];
            ru = observed_rate(prev.err_u, c.err_u, prev.n, c.n);
            rs = observed_rate(prev.err_sigma, c.err_sigma, prev.n, c.n);
        }
        os << "1/" << c.n << ',' << c.dofs << ',' << detail::fmt(c.err_u) << ',' << detail::fmt(c.err_sigma) << ','
           << detail::fmt(ru) << ',' << detail::fmt(rs) << ',' << c.report.iterations << ','
           << (c.converged() ? 1 : 0) << ',' << detail::csv_safe(c.status) << '\n';
    }
    out.csv = os.str();
    out.records = detail::records_of(out.cells);
    return out;
}

/// Shared by iteration-table and solver-compare: every (solver, p, h, init)
/// combination. Alpha may be a list paired with the p list.
inline BenchOutput run_grid(const KeyValueConfig& cfg, bool with_errors, std::vector<std::string> default_solvers,
                            std::vector<std::string> default_inits)
{
    const Domain domain = parse_domain(cfg.get_string("domain", "square"));
    const auto solvers = detail::solvers_from(cfg, std::move(default_solvers));
    const auto ps = detail::doubles_or(cfg, "p", {1.5});
    const auto alphas = cfg.get_double_list("alpha");
    if (alphas.size() > 1 && alphas.size() != ps.size()) {
        throw ConfigError("alpha: give one value or one per p");
    }
    const auto levels = detail::levels_from(cfg, {32, 64, 128});
    const auto inits = detail::inits_from(cfg, std::move(default_inits));

    std::vector<std::function<BenchCell()>> jobs;
    for (std::size_t ip = 0; ip < ps.size(); ++ip) {
        KeyValueConfig cell_cfg = cfg;
        if (alphas.size() > 1) {
            cell_cfg.set("alpha", detail::fmt(alphas[ip]));
        }
        for (const auto& s : solvers) {
            for (InitKind init : inits) {
                for (int n : levels) {
                    const double p = ps[ip];
                    jobs.emplace_back([=] { return run_cell(cell_cfg, domain, s, p, n, init); });
                }
            }
        }
    }
    BenchOutput out;
    out.cells = run_cells(jobs, cfg.get_bool("parallel", false));

    std::ostringstream os;
    os << "# config: " << cfg.to_line() << '\n';
    os << "solver,p,alpha,h,init,dofs,iterations,converged,avg_inner,seconds,final_rel_r";
    if (with_errors) {
        os << ",err_u,err_sigma";
    }
    os << ",status\n";
    for (const auto& c : out.cells) {
        os << c.solver << ',' << c.p << ',' << c.alpha << ",1/" << c.n << ',' << detail::init_name(c.init) << ','
           << c.dofs << ',' << c.report.iterations << ',' << (c.converged() ? 1 : 0) << ','
           << detail::fmt(c.report.avg_inner) << ',' << detail::fmt(c.report.seconds) << ','
           << detail::fmt(c.report.final_residual());
        if (with_errors) {
            os << ',' << detail::fmt(c.err_u) << ',' << detail::fmt(c.err_sigma);
        }
        os << ',' << detail::csv_safe(c.status) << '\n';
    }
    out.csv = os.str();
    out.records = detail::records_of(out.cells);
    return out;
}

inline BenchOutput run_iteration_table(const KeyValueConfig& cfg)
{
    BenchOutput out = run_grid(cfg, false, {"DualTPD-J", "DualTPD-M"}, {"zero"});
    out.name = "iteration-table";
    return out;
}

inline BenchOutput run_solver_compare(const KeyValueConfig& cfg)
{
    BenchOutput out = run_grid(cfg, true, {"DualTPD-J", "DualTPD-M", "PGD", "PGD-fixed"}, {"zero", "random"});
    out.name = "solver-compare";
    return out;
}

inline BenchOutput run_time_growth(const KeyValueConfig& cfg)
{
    const Domain domain = parse_domain(cfg.get_string("domain", "square"));
    const double p = cfg.get_double("p", 1.5);
    const std::string solver = cfg.get_string("solver", "DualTPD-J");
    const auto levels = detail::levels_from(cfg, {32, 64, 128, 256});
    std::vector<std::function<BenchCell()>> jobs;
    for (int n : levels) {
        jobs.emplace_back([=] { return run_cell(cfg, domain, solver, p, n, InitKind::zero); });
    }
    BenchOutput out;
    out.name = "time-growth";
    // Concurrent cells would distort the timings; always sequential.
    out.cells = run_cells(jobs, false);

    std::vector<double> xs;
    std::vector<double> ys;
    std::ostringstream os;
    os << "# config: " << cfg.to_line() << '\n';
    os << "h,dofs,seconds,iterations,converged\n";
    for (const auto& c : out.cells) {
        xs.push_back(static_cast<double>(c.dofs));
        ys.push_back(c.report.seconds);
        os << "1/" << c.n << ',' << c.dofs << ',' << detail::fmt(c.report.seconds) << ',' << c.report.iterations << ','
           << (c.converged() ? 1 : 0) << '\n';
    }
    out.slope = loglog_slope(xs, ys);
    out.csv = os.str();
    out.records = detail::records_of(out.cells) + "slope=" + detail::fmt(out.slope) + "\n";
    out.svg = svg_loglog(xs, ys, solver + " time growth, slope " + detail::fmt(out.slope), "DoF", "seconds");
    return out;
}

inline BenchOutput run_experiment(Experiment e, const KeyValueConfig& cfg)
{
    switch (e) {
    case Experiment::error_table: return run_error_table(cfg);
    case Experiment::iteration_table: return run_iteration_table(cfg);
    case Experiment::solver_compare: return run_solver_compare(cfg);
    case Experiment::time_growth: return run_time_growth(cfg);
    }
    throw ConfigError("unknown experiment");
}

/// Writes <name>.csv, <name>.txt and, for time-growth, <name>.svg into `dir`.
/// With `dump = true` also writes the finest-level mesh (OFF) and weak
/// gradient (MatrixMarket) of the first level.
inline std::vector<std::filesystem::path> write_outputs(const BenchOutput& out, const KeyValueConfig& cfg,
                                                        const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& file, const std::string& text) {
        const auto path = dir / file;
        std::ofstream f(path);
        if (!f) {
            throw std::runtime_error("cannot write " + path.string());
        }
        f << text;
        written.push_back(path);
    };
    put(out.name + ".csv", out.csv);
    put(out.name + ".txt", out.records);
    if (!out.svg.empty()) {
        put(out.name + ".svg", out.svg);
    }
    if (cfg.get_bool("dump", false) && !out.cells.empty()) {
        const Domain domain = parse_domain(cfg.get_string("domain", "square"));
        const DiscreteProblem prob = discretize(detail::spec_for(domain, out.cells.front().p), out.cells.front().n);
        std::ostringstream mesh;
        write_off(mesh, prob.mesh());
        put("mesh.off", mesh.str());
        std::ostringstream mat;
        write_matrix_market(mat, prob.d);
        put("weak_gradient.mtx", mat.str());
    }
    return written;
}

} // namespace dualtpd
