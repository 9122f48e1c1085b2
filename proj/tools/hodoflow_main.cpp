// hodoflow: construct, solve and verify constant-pressure flows on curved
// charts (cylinder, cone, 2-sphere, 3-sphere) via implicit hodograph systems,
// with a characteristics/finite-difference oracle for cross-checking.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hodoflow/io.hpp"
#include "hodoflow/parallel.hpp"

using namespace hodoflow;
using io::json;
using io::write_blowup_csv;
using io::write_field_csv;
using io::write_trajectory_csv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;    // boundary hit, result still written
constexpr int kExitVerifyFail = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json_arg(const std::string& s) {
    try {
        if (!s.empty() && s[0] == '@') {
            std::ifstream f(s.substr(1));
            if (!f) throw ConfigError("cannot open params file " + s.substr(1));
            return json::parse(f);
        }
        return json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("bad JSON in --params: ") + e.what());
    }
}

SurfaceChart make_chart(const std::string& name, const CLI::Option* alpha_opt, double alpha,
                        double R) {
    if (name == "cone") {
        if (alpha_opt->count() == 0) throw ConfigError("chart cone requires --alpha");
        return SurfaceChart::cone(alpha);
    }
    if (name == "cylinder") return SurfaceChart::cylinder(R);
    if (name == "sphere2") return SurfaceChart::sphere2(R);
    if (name == "sphere3") return SurfaceChart::sphere3(R);
    throw ConfigError("unknown chart \"" + name + "\" (cylinder|cone|sphere2|sphere3)");
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        size_t pos = 0;
        out.push_back(std::stod(tok, &pos));
    }
    return out;
}

// axis spec: name=min:max:count
GridAxis parse_axis(const std::string& spec) {
    const size_t eq = spec.find('=');
    const size_t c1 = spec.find(':', eq + 1);
    const size_t c2 = spec.find(':', c1 + 1);
    if (eq == std::string::npos || c1 == std::string::npos || c2 == std::string::npos)
        throw ConfigError("bad --grid spec \"" + spec + "\" (want name=min:max:count)");
    GridAxis ax;
    ax.name = spec.substr(0, eq);
    ax.lo = std::stod(spec.substr(eq + 1, c1 - eq - 1));
    ax.hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    ax.count = std::stoi(spec.substr(c2 + 1));
    if (ax.count < 2) throw ConfigError("grid axis \"" + ax.name + "\": count must be >= 2");
    if (!(ax.lo < ax.hi)) throw ConfigError("grid axis \"" + ax.name + "\": min must be < max");
    return ax;
}

GridSpec make_grid(const SurfaceChart& chart, const std::vector<std::string>& specs) {
    if (static_cast<int>(specs.size()) != chart.dim())
        throw ConfigError("need exactly " + std::to_string(chart.dim()) +
                          " --grid axes for chart " + chart.name());
    GridSpec grid;
    grid.axes.resize(chart.dim());
    std::vector<bool> seen(chart.dim(), false);
    for (const std::string& spec : specs) {
        GridAxis ax = parse_axis(spec);
        const auto& names = chart.coord_names();
        const auto it = std::find(names.begin(), names.end(), ax.name);
        if (it == names.end())
            throw ConfigError("grid axis \"" + ax.name + "\" is not a coordinate of chart " +
                              chart.name());
        const int d = static_cast<int>(it - names.begin());
        const CoordRange r = chart.coord_range(d);
        if (!r.periodic && !(ax.lo > r.lo && ax.hi < r.hi))
            throw ConfigError("grid axis \"" + ax.name + "\" leaves the open range of chart " +
                              chart.name());
        grid.axes[d] = ax;
        seen[d] = true;
    }
    for (int d = 0; d < chart.dim(); ++d)
        if (!seen[d])
            throw ConfigError("missing --grid axis for coordinate " + chart.coord_names()[d]);
    return grid;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open output file " + path);
    return f;
}

void write_out(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    if (path.empty()) {
        writer(std::cout);
    } else {
        std::ofstream f = open_out(path);
        writer(f);
    }
}

// merges a JSON config file into argv tokens, command-line flags win
std::vector<std::string> merge_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") config_path = args[i + 1];
    if (config_path.empty()) return args;

    std::ifstream f(config_path);
    if (!f) throw ConfigError("cannot open config file " + config_path);
    json cfg;
    try {
        cfg = json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("bad JSON in config file: ") + e.what());
    }

    auto given = [&](const std::string& flag) {
        return std::find(args.begin(), args.end(), flag) != args.end();
    };
    std::vector<std::string> inject;
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value.is_array()) {
            for (const auto& item : value) {
                inject.push_back(flag);
                inject.push_back(item.is_string() ? item.get<std::string>() : item.dump());
            }
        } else if (value.is_boolean()) {
            if (value.get<bool>()) inject.push_back(flag);
        } else {
            inject.push_back(flag);
            inject.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    // config tokens go right after the subcommand name
    std::vector<std::string> merged;
    size_t i = 0;
    if (!args.empty()) merged.push_back(args[i++]);
    merged.insert(merged.end(), inject.begin(), inject.end());
    merged.insert(merged.end(), args.begin() + i, args.end());
    return merged;
}

// ---------------------------------------------------------------------------

struct GeodesicOpts {
    std::string chart = "sphere2", init, out, config;
    double alpha = 0, R = 1.0, t_end = 1.0, tol = 1e-10, sample_dt = 0.0, t0 = 0.0;
};

int run_geodesic(const GeodesicOpts& o, const CLI::Option* alpha_opt) {
    const SurfaceChart chart = make_chart(o.chart, alpha_opt, o.alpha, o.R);
    const std::vector<double> init = parse_doubles(o.init);
    const int n = chart.dim();
    if (static_cast<int>(init.size()) != 2 * n)
        throw ConfigError("--init needs " + std::to_string(2 * n) + " comma-separated values (" +
                          std::to_string(n) + " coordinates, then " + std::to_string(n) +
                          " velocities)");
    if (!(o.tol > 0)) throw ConfigError("--tol must be positive");
    PhaseState s0;
    s0.t = o.t0;
    for (int i = 0; i < n; ++i) {
        s0.x[i] = init[i];
        s0.u[i] = init[n + i];
    }
    if (!chart.interior(std::span<const double>(s0.x.data(), n)))
        throw ConfigError("--init coordinates outside the open ranges of chart " + chart.name());

    const Trajectory traj = integrate_geodesic(chart, s0, o.t_end, o.tol, o.sample_dt);
    write_out(o.out, [&](std::ostream& os) { write_trajectory_csv(os, chart, traj); });
    if (traj.status == TrajectoryStatus::boundary_hit) {
        std::cerr << "boundary hit at t = " << io::fmt(traj.samples.back().t)
                  << "; trajectory written up to the boundary\n";
        return kExitPartial;
    }
    if (traj.status == TrajectoryStatus::step_underflow) {
        std::cerr << "step underflow at t = " << io::fmt(traj.samples.back().t) << "\n";
        return kExitPartial;
    }
    return kExitOk;
}

struct FieldOpts {
    std::string chart = "sphere2", family, params = "{}", out, format = "csv", config,
                seed_guess;
    std::vector<std::string> grid;
    double alpha = 0, R = 1.0, t = 0.0;
    int workers = 1;
};

FieldGrid eval_family_grid(const SolutionFamily& fam, const GridSpec& spec, double t,
                           int workers) {
    FieldGrid grid;
    grid.chart = fam.chart;
    grid.t = t;
    grid.stationary = fam.is_stationary();
    grid.axes = spec.axes;
    grid.provenance = std::string("family:") + family_name(fam.id);
    grid.allocate();
    const int n = fam.chart.dim();
    parallel_for(grid.size(), workers, [&](size_t flat) {
        double coords[3];
        grid.coords_of(flat, std::span<double>(coords, n));
        const FieldSample s = eval_field(fam, t, std::span<const double>(coords, n));
        grid.values[flat] = s.u;
        grid.mask[flat] = s.valid ? 1 : 0;
    });
    return grid;
}

// --family is either a closed-form family id or a hodograph system name
FieldGrid field_grid_from_opts(const FieldOpts& o, const CLI::Option* alpha_opt) {
    const SurfaceChart chart = make_chart(o.chart, alpha_opt, o.alpha, o.R);
    const GridSpec spec = make_grid(chart, o.grid);
    const json params = load_json_arg(o.params);
    if (const auto id = family_from_name(o.family)) {
        const SolutionFamily fam = io::family_from_json(*id, chart, params);
        return eval_family_grid(fam, spec, o.t, o.workers);
    }
    if (io::is_system_name(o.family)) {
        const HodographSystem sys = io::system_from_json(o.family, chart, params);
        std::array<double, 3> guess{};
        if (!o.seed_guess.empty()) {
            const std::vector<double> g = parse_doubles(o.seed_guess);
            if (static_cast<int>(g.size()) != sys.n)
                throw ConfigError("--seed-guess needs " + std::to_string(sys.n) + " values");
            for (int i = 0; i < sys.n; ++i) guess[i] = g[i];
        }
        return solve_field_grid(sys, spec, o.t, std::span<const double>(guess.data(), sys.n), {},
                                o.workers);
    }
    throw ConfigError("--family \"" + o.family +
                      "\" is neither a closed-form family nor a hodograph system");
}

int run_field(const FieldOpts& o, const CLI::Option* alpha_opt) {
    const FieldGrid grid = field_grid_from_opts(o, alpha_opt);
    if (o.format == "csv")
        write_out(o.out, [&](std::ostream& os) { write_field_csv(os, grid); });
    else if (o.format == "json")
        write_out(o.out, [&](std::ostream& os) { os << io::field_to_json(grid).dump(2) << "\n"; });
    else
        throw ConfigError("--format must be csv or json");
    size_t valid = 0;
    for (std::uint8_t m : grid.mask) valid += m;
    json summary;
    summary["nodes"] = grid.size();
    summary["valid"] = valid;
    summary["masked"] = grid.size() - valid;
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

struct BlowupOpts {
    std::string chart = "sphere2", family, params = "{}", out, config, seed_guess;
    std::vector<std::string> grid;
    double alpha = 0, R = 1.0, t = 0.0, refine_tol = 1e-8;
    int workers = 1;
};

int run_blowup(const BlowupOpts& o, const CLI::Option* alpha_opt) {
    const SurfaceChart chart = make_chart(o.chart, alpha_opt, o.alpha, o.R);
    const GridSpec spec = make_grid(chart, o.grid);
    const json params = load_json_arg(o.params);
    HodographSystem sys;
    if (const auto id = family_from_name(o.family))
        sys = family_hodograph_system(io::family_from_json(*id, chart, params));
    else if (io::is_system_name(o.family))
        sys = io::system_from_json(o.family, chart, params);
    else
        throw ConfigError("--family \"" + o.family +
                          "\" is neither a closed-form family nor a hodograph system");
    std::array<double, 3> guess{};
    if (!o.seed_guess.empty()) {
        const std::vector<double> g = parse_doubles(o.seed_guess);
        if (static_cast<int>(g.size()) != sys.n)
            throw ConfigError("--seed-guess needs " + std::to_string(sys.n) + " values");
        for (int i = 0; i < sys.n; ++i) guess[i] = g[i];
    }
    const BlowupLocus locus = trace_blowup(sys, spec, o.t,
                                           std::span<const double>(guess.data(), sys.n),
                                           o.refine_tol, {}, o.workers);
    write_out(o.out,
              [&](std::ostream& os) { write_blowup_csv(os, locus, chart.coord_names()); });
    return kExitOk;  // an empty locus is a normal result
}

struct VerifyOpts {
    std::string chart = "sphere2", family, params = "{}", out, config;
    std::vector<std::string> grid;
    double alpha = 0, R = 1.0, t = 0.0, fd_step = 1e-4, threshold = 1e-5;
    int workers = 1;
    bool stationary = false;
};

int run_verify(const VerifyOpts& o, const CLI::Option* alpha_opt) {
    const SurfaceChart chart = make_chart(o.chart, alpha_opt, o.alpha, o.R);
    const GridSpec spec = make_grid(chart, o.grid);
    const json params = load_json_arg(o.params);
    const auto id = family_from_name(o.family);
    if (!id) throw ConfigError("--family \"" + o.family + "\" is not a closed-form family");
    const SolutionFamily fam = io::family_from_json(*id, chart, params);
    if (!(o.fd_step > 0)) throw ConfigError("--fd-step must be positive");
    if (!(o.threshold > 0)) throw ConfigError("--threshold must be positive");

    bool stationary = fam.is_stationary();
    if (o.stationary && !stationary)
        std::cerr << "warning: --stationary requested but family " << o.family
                  << " is time-dependent; keeping the finite-difference d/dt\n";

    const int n = chart.dim();
    std::vector<std::array<double, 3>> points;
    points.reserve(spec.size());
    FieldGrid shape;
    shape.axes = spec.axes;
    for (size_t flat = 0; flat < spec.size(); ++flat) {
        std::array<double, 3> c{};
        shape.coords_of(flat, std::span<double>(c.data(), n));
        points.push_back(c);
    }
    const ResidualReport rep =
        euler_residual(chart, family_field(fam), stationary, o.t,
                       std::span<const std::array<double, 3>>(points.data(), points.size()),
                       o.fd_step, o.workers);
    write_out(o.out, [&](std::ostream& os) { os << io::residual_to_json(rep).dump(2) << "\n"; });
    return rep.max < o.threshold ? kExitOk : kExitVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "hodoflow: flows with vanishing pressure gradient on curved charts.\n"
        "Geodesic tracing, hodograph solving, closed-form fields, blow-up traces\n"
        "and finite-difference verification; CSV/JSON output for plotting."};
    app.require_subcommand(1);

    GeodesicOpts g;
    CLI::App* geo = app.add_subcommand("geodesic", "trace one characteristic (geodesic)");
    geo->add_option("--chart", g.chart, "cylinder|cone|sphere2|sphere3");
    CLI::Option* g_alpha = geo->add_option("--alpha", g.alpha, "cone opening parameter in (0,1)");
    geo->add_option("--R", g.R, "radius for cylinder/spheres");
    geo->add_option("--init", g.init, "coords,velocities (2n comma-separated values)")
        ->required();
    geo->add_option("--t0", g.t0, "initial time");
    geo->add_option("--t-end", g.t_end, "final time")->required();
    geo->add_option("--tol", g.tol, "integrator tolerance");
    geo->add_option("--sample-dt", g.sample_dt, "uniform output sampling step (0 = every step)");
    geo->add_option("--out", g.out, "output CSV path (default stdout)");
    geo->add_option("--config", g.config, "JSON config file mirroring the flags");

    FieldOpts f;
    CLI::App* fld = app.add_subcommand("field", "evaluate a family or solve a hodograph system "
                                                "on a grid");
    fld->add_option("--chart", f.chart, "cylinder|cone|sphere2|sphere3");
    CLI::Option* f_alpha = fld->add_option("--alpha", f.alpha, "cone opening parameter");
    fld->add_option("--R", f.R, "radius");
    fld->add_option("--family", f.family, "closed-form family or hodograph system name")
        ->required();
    fld->add_option("--params", f.params, "family/system parameters, JSON inline or @file");
    fld->add_option("--grid", f.grid, "axis spec name=min:max:count (repeat per axis)");
    fld->add_option("--t", f.t, "evaluation time");
    fld->add_option("--seed-guess", f.seed_guess, "starting Newton guess for hodograph systems");
    fld->add_option("--workers", f.workers, "worker threads");
    fld->add_option("--out", f.out, "output path (default stdout)");
    fld->add_option("--format", f.format, "csv|json");
    fld->add_option("--config", f.config, "JSON config file mirroring the flags");

    BlowupOpts b;
    CLI::App* blw = app.add_subcommand("blowup", "trace the det M = 0 locus of a hodograph "
                                                 "system");
    blw->add_option("--chart", b.chart, "cylinder|cone|sphere2|sphere3");
    CLI::Option* b_alpha = blw->add_option("--alpha", b.alpha, "cone opening parameter");
    blw->add_option("--R", b.R, "radius");
    blw->add_option("--family", b.family, "closed-form family or hodograph system name")
        ->required();
    blw->add_option("--params", b.params, "parameters, JSON inline or @file");
    blw->add_option("--grid", b.grid, "axis spec name=min:max:count (repeat per axis)");
    blw->add_option("--t", b.t, "evaluation time");
    blw->add_option("--refine-tol", b.refine_tol, "|det M| target for crossing refinement");
    blw->add_option("--seed-guess", b.seed_guess, "starting Newton guess");
    blw->add_option("--workers", b.workers, "worker threads");
    blw->add_option("--out", b.out, "output CSV path (default stdout)");
    blw->add_option("--config", b.config, "JSON config file mirroring the flags");

    VerifyOpts v;
    CLI::App* ver = app.add_subcommand("verify", "finite-difference residual of a closed-form "
                                                 "field on a grid");
    ver->add_option("--chart", v.chart, "cylinder|cone|sphere2|sphere3");
    CLI::Option* v_alpha = ver->add_option("--alpha", v.alpha, "cone opening parameter");
    ver->add_option("--R", v.R, "radius");
    ver->add_option("--family", v.family, "closed-form family name")->required();
    ver->add_option("--params", v.params, "family parameters, JSON inline or @file");
    ver->add_option("--grid", v.grid, "axis spec name=min:max:count (repeat per axis)");
    ver->add_option("--t", v.t, "evaluation time");
    ver->add_option("--fd-step", v.fd_step, "central-difference step");
    ver->add_option("--threshold", v.threshold, "max residual for exit code 0");
    ver->add_flag("--stationary", v.stationary, "declare the field stationary (d/dt = 0)");
    ver->add_option("--workers", v.workers, "worker threads");
    ver->add_option("--out", v.out, "report path (default stdout)");
    ver->add_option("--config", v.config, "JSON config file mirroring the flags");

    for (CLI::App* sub : {geo, fld, blw, ver})
        for (CLI::Option* opt : sub->get_options())
            if (opt->get_expected_min() == 1 && opt->get_name() != "--grid")
                opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    try {
        const std::vector<std::string> merged = merge_config_args(argc, argv);
        std::vector<const char*> cargv = {argv[0]};
        for (const std::string& a : merged) cargv.push_back(a.c_str());
        app.parse(static_cast<int>(cargv.size()), cargv.data());

        if (*geo) return run_geodesic(g, g_alpha);
        if (*fld) return run_field(f, f_alpha);
        if (*blw) return run_blowup(b, b_alpha);
        if (*ver) return run_verify(v, v_alpha);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitConfig : kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
