#include "hodoflow/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace hodoflow::io {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

static const char* vel_name(int dim, int i) {
    static const char* two[] = {"u", "v"};
    static const char* three[] = {"u1", "u2", "u3"};
    return dim == 2 ? two[i] : three[i];
}

void write_trajectory_csv(std::ostream& os, const SurfaceChart& chart, const Trajectory& traj) {
    const int n = chart.dim();
    os << "t";
    for (int i = 0; i < n; ++i) os << "," << chart.coord_names()[i];
    for (int i = 0; i < n; ++i) os << "," << vel_name(n, i);
    for (const std::string& name : integral_names(chart)) os << "," << name;
    os << "\n";
    for (const PhaseState& s : traj.samples) {
        os << fmt(s.t);
        for (int i = 0; i < n; ++i) os << "," << fmt(s.x[i]);
        for (int i = 0; i < n; ++i) os << "," << fmt(s.u[i]);
        const IntegralSet I = integrals_at(chart, s, traj.sigma0);
        for (const IntegralValue& v : I.values) os << "," << (v.defined ? fmt(v.value) : "nan");
        os << "\n";
    }
}

void write_field_csv(std::ostream& os, const FieldGrid& grid) {
    const int n = static_cast<int>(grid.axes.size());
    for (int i = 0; i < n; ++i) os << (i ? "," : "") << grid.axes[i].name;
    for (int i = 0; i < n; ++i) os << "," << vel_name(n, i);
    os << ",valid\n";
    double coords[3];
    for (size_t flat = 0; flat < grid.size(); ++flat) {
        grid.coords_of(flat, std::span<double>(coords, n));
        for (int i = 0; i < n; ++i) os << (i ? "," : "") << fmt(coords[i]);
        for (int i = 0; i < n; ++i) os << "," << fmt(grid.values[flat][i]);
        os << "," << (grid.mask[flat] ? 1 : 0) << "\n";
    }
}

FieldGrid read_field_csv(std::istream& is, const SurfaceChart& chart,
                         const std::vector<GridAxis>& axes) {
    FieldGrid grid;
    grid.chart = chart;
    grid.axes = axes;
    grid.allocate();
    const int n = static_cast<int>(axes.size());
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("field csv: missing header");
    double coords[3];
    for (size_t flat = 0; flat < grid.size(); ++flat) {
        if (!std::getline(is, line))
            throw std::invalid_argument("field csv: fewer rows than grid nodes");
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ss, tok, ',')) row.push_back(std::strtod(tok.c_str(), nullptr));
        if (static_cast<int>(row.size()) != 2 * n + 1)
            throw std::invalid_argument("field csv: bad column count");
        grid.coords_of(flat, std::span<double>(coords, n));
        for (int i = 0; i < n; ++i)
            if (std::abs(row[i] - coords[i]) > 1e-12 * std::max(1.0, std::abs(coords[i])))
                throw std::invalid_argument("field csv: node coordinates do not match the axes");
        for (int i = 0; i < n; ++i) grid.values[flat][i] = row[n + i];
        grid.mask[flat] = row[2 * n] != 0.0 ? 1 : 0;
    }
    return grid;
}

json field_to_json(const FieldGrid& grid) {
    const int n = static_cast<int>(grid.axes.size());
    json j;
    j["chart"] = chart_to_json(grid.chart);
    j["t"] = grid.t;
    j["stationary"] = grid.stationary;
    j["provenance"] = grid.provenance;
    j["axes"] = json::array();
    for (const GridAxis& a : grid.axes)
        j["axes"].push_back({{"name", a.name}, {"min", a.lo}, {"max", a.hi}, {"count", a.count}});
    json values = json::array(), valid = json::array();
    for (size_t flat = 0; flat < grid.size(); ++flat) {
        json row = json::array();
        for (int i = 0; i < n; ++i) row.push_back(grid.values[flat][i]);
        values.push_back(std::move(row));
        valid.push_back(grid.mask[flat] ? 1 : 0);
    }
    j["values"] = std::move(values);
    j["valid"] = std::move(valid);
    return j;
}

void write_blowup_csv(std::ostream& os, const BlowupLocus& locus,
                      const std::vector<std::string>& coord_names) {
    const int n = static_cast<int>(locus.grid.axes.size());
    os << "segment";
    for (int i = 0; i < n; ++i) os << "," << coord_names[i];
    os << ",det_m\n";
    if (n == 2 && !locus.polylines.empty()) {
        // crossing coordinates are identifiable in the crossing list; det at the
        // refined point is reported with it
        size_t seg = 0;
        for (const auto& line : locus.polylines) {
            for (const auto& p : line) {
                double det = 0.0;
                for (const auto& cr : locus.crossings)
                    if (cr.coords[0] == p[0] && cr.coords[1] == p[1]) {
                        det = cr.det_m;
                        break;
                    }
                os << seg << "," << fmt(p[0]) << "," << fmt(p[1]) << "," << fmt(det) << "\n";
            }
            ++seg;
        }
        return;
    }
    for (const auto& cr : locus.crossings) {
        os << -1;
        for (int i = 0; i < n; ++i) os << "," << fmt(cr.coords[i]);
        os << "," << fmt(cr.det_m) << "\n";
    }
}

json residual_to_json(const ResidualReport& rep) {
    json j;
    j["max"] = rep.max;
    j["mean"] = rep.mean;
    j["n_nodes"] = rep.n_nodes;
    j["n_excluded"] = rep.n_excluded;
    j["fd_step"] = rep.fd_step;
    return j;
}

SurfaceChart chart_from_json(const json& j) {
    if (!j.contains("chart")) throw std::invalid_argument("chart config: missing \"chart\" key");
    const std::string kind = j.at("chart").get<std::string>();
    if (kind == "cylinder") return SurfaceChart::cylinder(j.value("R", 1.0));
    if (kind == "cone") {
        if (!j.contains("alpha"))
            throw std::invalid_argument("chart config: cone requires \"alpha\"");
        return SurfaceChart::cone(j.at("alpha").get<double>());
    }
    if (kind == "sphere2") return SurfaceChart::sphere2(j.value("R", 1.0));
    if (kind == "sphere3") return SurfaceChart::sphere3(j.value("R", 1.0));
    throw std::invalid_argument("chart config: unknown chart \"" + kind + "\"");
}

json chart_to_json(const SurfaceChart& chart) {
    json j;
    j["chart"] = chart.name();
    if (chart.kind == ChartKind::cone)
        j["alpha"] = chart.alpha;
    else
        j["R"] = chart.radius;
    return j;
}

namespace {

std::array<double, 3> array3(const json& j, const char* key) {
    std::array<double, 3> out{};
    if (!j.contains(key)) return out;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3)
        throw std::invalid_argument(std::string("family params: \"") + key +
                                    "\" must be an array of 3 numbers");
    for (int i = 0; i < 3; ++i) out[i] = a[i].get<double>();
    return out;
}

}  // namespace

SolutionFamily family_from_json(FamilyId id, const SurfaceChart& chart, const json& p) {
    const int sheet = p.value("sheet", 1);
    SolutionFamily f;
    switch (id) {
        case FamilyId::cone_stationary:
            f = SolutionFamily::cone_stationary(chart.alpha, p.value("a1", 0.0),
                                                p.value("a2", 0.0), sheet);
            break;
        case FamilyId::cone_linear:
            f = SolutionFamily::cone_linear(chart.alpha, p.value("a1", 0.0), p.value("b1", 0.0),
                                            p.value("a2", 0.0), sheet);
            break;
        case FamilyId::s2_simplest:
            f = SolutionFamily::s2_simplest(chart.radius, p.value("F1", 0.0), p.value("F2", 0.0),
                                            sheet);
            break;
        case FamilyId::s2_stat_linear:
            f = SolutionFamily::s2_stationary_linear(chart.radius, p.value("a1", 0.0),
                                                     p.value("a2", 0.0), p.value("b1", 0.0),
                                                     p.value("b2", 0.0));
            break;
        case FamilyId::s2_stat_quadratic:
            f = SolutionFamily::s2_stationary_quadratic(
                chart.radius, p.value("a1", 0.0), p.value("a2", 0.0), p.value("b1", 0.0),
                p.value("b2", 0.0), p.value("c1", 0.0), p.value("c2", 0.0), sheet);
            break;
        case FamilyId::s2_stat_power:
            f = SolutionFamily::s2_stationary_power(chart.radius, p.value("a", 0.0),
                                                    p.value("b", 0.0), p.value("d", 1.0),
                                                    p.value("m", 1.0));
            break;
        case FamilyId::s2_stat_log:
            f = SolutionFamily::s2_stationary_log(chart.radius, p.value("a", 0.0),
                                                  p.value("b", 0.0));
            break;
        case FamilyId::s3_stat_linear:
            f = SolutionFamily::s3_stationary_linear(chart.radius, array3(p, "a"), array3(p, "b"),
                                                     array3(p, "c"), array3(p, "d"));
            break;
    }
    f.legacy_variant = p.value("legacy_variant", false);
    return f;
}

ScalarFn scalar_fn_from_json(const json& j) {
    const std::string type = j.value("type", "constant");
    if (type == "constant") return ScalarFn::constant(j.value("value", 0.0));
    if (type == "linear") return ScalarFn::linear(j.value("a", 0.0), j.value("b", 0.0));
    if (type == "quadratic")
        return ScalarFn::quadratic(j.value("a", 0.0), j.value("b", 0.0), j.value("c", 0.0));
    if (type == "power_product")
        return ScalarFn::power_product(j.value("coef", 1.0), j.value("d", 1.0), j.value("m", 1.0));
    if (type == "log_product") return ScalarFn::log_product(j.value("coef", 1.0));
    if (type == "tabulated")
        return ScalarFn::tabulated(j.at("x").get<std::vector<double>>(),
                                   j.at("y").get<std::vector<double>>());
    throw std::invalid_argument("scalar function config: unknown type \"" + type + "\"");
}

namespace {

Fn2 fn2_from_json(const json& j) {
    const std::string type = j.value("type", "constant");
    if (type == "constant") {
        const double v = j.value("value", 0.0);
        return [v](double, double) { return v; };
    }
    if (type == "linear") {
        const double c0 = j.value("c0", 0.0), c1 = j.value("c1", 0.0), c2 = j.value("c2", 0.0);
        return [c0, c1, c2](double x1, double x2) { return c0 + c1 * x1 + c2 * x2; };
    }
    throw std::invalid_argument("two-argument function config: unknown type \"" + type + "\"");
}

Fn3 fn3_from_json(const json& j) {
    const std::string type = j.value("type", "constant");
    if (type == "constant") {
        const double v = j.value("value", 0.0);
        return [v](double, double, double) { return v; };
    }
    if (type == "linear") {
        const double c0 = j.value("c0", 0.0), c1 = j.value("c1", 0.0), c2 = j.value("c2", 0.0),
                     c3 = j.value("c3", 0.0);
        return [c0, c1, c2, c3](double x1, double x2, double x3) {
            return c0 + c1 * x1 + c2 * x2 + c3 * x3;
        };
    }
    throw std::invalid_argument("three-argument function config: unknown type \"" + type + "\"");
}

}  // namespace

bool is_system_name(const std::string& name) {
    return name == "cone" || name == "cone_alt" || name == "s2_timedep" ||
           name == "s2_stationary" || name == "s3_stationary";
}

HodographSystem system_from_json(const std::string& name, const SurfaceChart& chart,
                                 const json& p) {
    if (name == "cone") return make_cone_system(chart, fn2_from_json(p.at("F1")),
                                                fn2_from_json(p.at("F2")));
    if (name == "cone_alt")
        return make_cone_alt_system(chart, fn2_from_json(p.at("F1")), fn2_from_json(p.at("F2")));
    if (name == "s2_timedep")
        return make_s2_system(chart, fn2_from_json(p.at("F1")), fn2_from_json(p.at("F2")),
                              p.value("sigma", 1));
    if (name == "s2_stationary")
        return make_s2_stationary_system(chart, scalar_fn_from_json(p.at("F1")),
                                         scalar_fn_from_json(p.at("F2")));
    if (name == "s3_stationary")
        return make_s3_stationary_system(chart, fn3_from_json(p.at("F1")),
                                         fn3_from_json(p.at("F2")), fn3_from_json(p.at("F3")));
    throw std::invalid_argument("hodograph system config: unknown system \"" + name + "\"");
}

}  // namespace hodoflow::io
