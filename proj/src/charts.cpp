#include "hodoflow/charts.hpp"

#include <cmath>
#include <sstream>

#include "hodoflow/linalg.hpp"

namespace hodoflow {

namespace {

const std::vector<std::string> kCylinderNames = {"z", "phi"};
const std::vector<std::string> kConeNames = {"r", "phi"};
const std::vector<std::string> kSphere2Names = {"theta", "phi"};
const std::vector<std::string> kSphere3Names = {"phi1", "phi2", "phi3"};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

SurfaceChart SurfaceChart::cylinder(double R) {
    if (!(R > 0.0)) throw std::invalid_argument("cylinder: R must be positive");
    return {ChartKind::cylinder, 0.0, R};
}

SurfaceChart SurfaceChart::cone(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("cone: alpha must lie in (0,1)");
    return {ChartKind::cone, alpha, 1.0};
}

SurfaceChart SurfaceChart::sphere2(double R) {
    if (!(R > 0.0)) throw std::invalid_argument("sphere2: R must be positive");
    return {ChartKind::sphere2, 0.0, R};
}

SurfaceChart SurfaceChart::sphere3(double R) {
    if (!(R > 0.0)) throw std::invalid_argument("sphere3: R must be positive");
    return {ChartKind::sphere3, 0.0, R};
}

int SurfaceChart::dim() const { return kind == ChartKind::sphere3 ? 3 : 2; }

int SurfaceChart::embed_dim() const { return kind == ChartKind::sphere3 ? 4 : 3; }

const std::vector<std::string>& SurfaceChart::coord_names() const {
    switch (kind) {
        case ChartKind::cylinder: return kCylinderNames;
        case ChartKind::cone: return kConeNames;
        case ChartKind::sphere2: return kSphere2Names;
        case ChartKind::sphere3: return kSphere3Names;
    }
    return kCylinderNames;
}

CoordRange SurfaceChart::coord_range(int i) const {
    switch (kind) {
        case ChartKind::cylinder:
            return i == 0 ? CoordRange{-kInf, kInf, false} : CoordRange{0.0, 2.0 * kPi, true};
        case ChartKind::cone:
            return i == 0 ? CoordRange{0.0, kInf, false} : CoordRange{0.0, 2.0 * kPi, true};
        case ChartKind::sphere2:
            return i == 0 ? CoordRange{0.0, kPi, false} : CoordRange{0.0, 2.0 * kPi, true};
        case ChartKind::sphere3:
            return i < 2 ? CoordRange{0.0, kPi, false} : CoordRange{0.0, 2.0 * kPi, true};
    }
    return {};
}

std::string SurfaceChart::name() const {
    switch (kind) {
        case ChartKind::cylinder: return "cylinder";
        case ChartKind::cone: return "cone";
        case ChartKind::sphere2: return "sphere2";
        case ChartKind::sphere3: return "sphere3";
    }
    return "?";
}

bool SurfaceChart::interior(std::span<const double> coords, double margin) const {
    if (static_cast<int>(coords.size()) < dim()) return false;
    for (int i = 0; i < dim(); ++i) {
        const double x = coords[i];
        if (!std::isfinite(x)) return false;
        const CoordRange r = coord_range(i);
        if (r.periodic) continue;
        if (!(x > r.lo + margin && x < r.hi - margin)) return false;
    }
    return true;
}

void SurfaceChart::require_interior(std::span<const double> coords, const char* where,
                                    double margin) const {
    if (interior(coords, margin)) return;
    std::ostringstream msg;
    msg << where << ": coordinates (";
    for (size_t i = 0; i < coords.size(); ++i) msg << (i ? "," : "") << coords[i];
    msg << ") outside the open ranges of chart " << name();
    if (margin > 0.0) msg << " (margin " << margin << ")";
    throw CoordsOutOfRange(msg.str());
}

double ChristoffelSymbols::max_abs() const {
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) m = std::max(m, std::abs(gamma[i][j][k]));
    return m;
}

MetricTensor metric_at(const SurfaceChart& chart, std::span<const double> coords) {
    chart.require_interior(coords, "metric_at");
    MetricTensor g;
    g.n = chart.dim();
    const double R2 = chart.radius * chart.radius;
    switch (chart.kind) {
        case ChartKind::cylinder:
            g.g[0][0] = 1.0;
            g.g[1][1] = R2;
            break;
        case ChartKind::cone:
            g.g[0][0] = 1.0;
            g.g[1][1] = chart.alpha * coords[0] * coords[0];
            break;
        case ChartKind::sphere2: {
            const double s = std::sin(coords[0]);
            g.g[0][0] = R2;
            g.g[1][1] = R2 * s * s;
            break;
        }
        case ChartKind::sphere3: {
            const double s1 = std::sin(coords[0]);
            const double s2 = std::sin(coords[1]);
            g.g[0][0] = R2;
            g.g[1][1] = R2 * s1 * s1;
            g.g[2][2] = R2 * s1 * s1 * s2 * s2;
            break;
        }
    }
    return g;
}

ChristoffelSymbols christoffel_at(const SurfaceChart& chart, std::span<const double> coords) {
    chart.require_interior(coords, "christoffel_at");
    ChristoffelSymbols G;
    G.n = chart.dim();
    switch (chart.kind) {
        case ChartKind::cylinder:
            break;  // flat
        case ChartKind::cone: {
            const double r = coords[0];
            G.gamma[0][1][1] = -chart.alpha * r;
            G.gamma[1][0][1] = G.gamma[1][1][0] = 1.0 / r;
            break;
        }
        case ChartKind::sphere2: {
            const double s = std::sin(coords[0]);
            const double c = std::cos(coords[0]);
            G.gamma[0][1][1] = -s * c;
            G.gamma[1][0][1] = G.gamma[1][1][0] = c / s;
            break;
        }
        case ChartKind::sphere3: {
            const double s1 = std::sin(coords[0]);
            const double c1 = std::cos(coords[0]);
            const double s2 = std::sin(coords[1]);
            const double c2 = std::cos(coords[1]);
            G.gamma[0][1][1] = -s1 * c1;
            G.gamma[0][2][2] = -s1 * c1 * s2 * s2;
            G.gamma[1][0][1] = G.gamma[1][1][0] = c1 / s1;
            G.gamma[1][2][2] = -s2 * c2;
            G.gamma[2][0][2] = G.gamma[2][2][0] = c1 / s1;
            G.gamma[2][1][2] = G.gamma[2][2][1] = c2 / s2;
            break;
        }
    }
    return G;
}

ChristoffelSymbols christoffel_fd(const SurfaceChart& chart, std::span<const double> coords,
                                  double h) {
    if (!(h > 0.0)) throw std::invalid_argument("christoffel_fd: h must be positive");
    chart.require_interior(coords, "christoffel_fd", 2.0 * h);
    const int n = chart.dim();

    // dg[l][i][j] = d g_ij / d x^l by central differences
    double dg[3][3][3] = {};
    std::array<double, 3> xp{}, xm{};
    for (int i = 0; i < n; ++i) xp[i] = xm[i] = coords[i];
    for (int l = 0; l < n; ++l) {
        xp[l] = coords[l] + h;
        xm[l] = coords[l] - h;
        const MetricTensor gp = metric_at(chart, std::span<const double>(xp.data(), n));
        const MetricTensor gm = metric_at(chart, std::span<const double>(xm.data(), n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dg[l][i][j] = (gp(i, j) - gm(i, j)) / (2.0 * h);
        xp[l] = xm[l] = coords[l];
    }

    const MetricTensor g0 = metric_at(chart, coords);
    double gmat[3][3] = {};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gmat[i][j] = g0(i, j);
    double ginv[3][3];
    if (!linalg::invert(gmat, ginv, n))
        throw CoordsOutOfRange("christoffel_fd: metric not invertible at the point");

    ChristoffelSymbols G;
    G.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double acc = 0.0;
                for (int l = 0; l < n; ++l)
                    acc += ginv[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]);
                G.gamma[i][j][k] = 0.5 * acc;
            }
    return G;
}

std::array<double, 4> embed(const SurfaceChart& chart, std::span<const double> coords) {
    // closed-range check (poles and tip allowed)
    for (int i = 0; i < chart.dim(); ++i) {
        const CoordRange r = chart.coord_range(i);
        const double x = coords[i];
        if (!std::isfinite(x) || (!r.periodic && !(x >= r.lo && x <= r.hi)))
            throw CoordsOutOfRange("embed: coordinate outside closed range");
    }
    std::array<double, 4> p{};
    const double R = chart.radius;
    switch (chart.kind) {
        case ChartKind::cylinder:
            p[0] = R * std::cos(coords[1]);
            p[1] = R * std::sin(coords[1]);
            p[2] = coords[0];
            break;
        case ChartKind::cone: {
            const double s0 = std::sqrt(chart.alpha);
            const double c0 = std::sqrt(1.0 - chart.alpha);
            p[0] = s0 * coords[0] * std::cos(coords[1]);
            p[1] = s0 * coords[0] * std::sin(coords[1]);
            p[2] = c0 * coords[0];
            break;
        }
        case ChartKind::sphere2:
            p[0] = R * std::sin(coords[0]) * std::cos(coords[1]);
            p[1] = R * std::sin(coords[0]) * std::sin(coords[1]);
            p[2] = R * std::cos(coords[0]);
            break;
        case ChartKind::sphere3: {
            const double s1 = std::sin(coords[0]), c1 = std::cos(coords[0]);
            const double s2 = std::sin(coords[1]), c2 = std::cos(coords[1]);
            const double s3 = std::sin(coords[2]), c3 = std::cos(coords[2]);
            p[0] = R * c1;
            p[1] = R * s1 * c2;
            p[2] = R * s1 * s2 * c3;
            p[3] = R * s1 * s2 * s3;
            break;
        }
    }
    return p;
}

}  // namespace hodoflow
