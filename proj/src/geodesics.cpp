#include "hodoflow/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hodoflow/integral_kernels.hpp"
#include "hodoflow/linalg.hpp"

namespace hodoflow {

namespace {

int sign_or_plus(double x) { return x < 0.0 ? -1 : 1; }

const std::vector<std::string> kCylinderIntegrals = {"u", "v", "z_minus_ut", "phi_minus_vt"};
const std::vector<std::string> kConeIntegrals = {"H", "L3", "I3", "I4"};
const std::vector<std::string> kSphere2Integrals = {"H", "L1", "L2", "L3", "I1", "I2"};
const std::vector<std::string> kSphere3Integrals = {"H", "L1", "L2", "L3", "L4", "L5", "L6"};

const std::vector<std::string> kCylinderTimeDep = {"z_minus_ut", "phi_minus_vt"};
const std::vector<std::string> kConeTimeDep = {"I3", "I4"};
const std::vector<std::string> kSphere2TimeDep = {"I1", "I2"};
const std::vector<std::string> kNone = {};

}  // namespace

PhaseDerivative geodesic_rhs(const SurfaceChart& chart, const PhaseState& state) {
    const int n = chart.dim();
    const ChristoffelSymbols G =
        christoffel_at(chart, std::span<const double>(state.x.data(), n));
    PhaseDerivative d;
    for (int i = 0; i < n; ++i) d.dx[i] = state.u[i];
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l)
            for (int m = 0; m < n; ++m) acc += G(i, l, m) * state.u[l] * state.u[m];
        d.du[i] = -acc;
    }
    return d;
}

double IntegralSet::get(std::string_view name) const {
    const IntegralValue* v = find(name);
    if (!v) throw std::out_of_range("IntegralSet: no integral named " + std::string(name));
    if (!v->defined)
        throw std::runtime_error("IntegralSet: integral " + std::string(name) +
                                 " undefined at this state");
    return v->value;
}

bool IntegralSet::defined(std::string_view name) const {
    const IntegralValue* v = find(name);
    return v && v->defined;
}

const IntegralValue* IntegralSet::find(std::string_view name) const {
    for (const IntegralValue& v : values)
        if (v.name == name) return &v;
    return nullptr;
}

const std::vector<std::string>& integral_names(const SurfaceChart& chart) {
    switch (chart.kind) {
        case ChartKind::cylinder: return kCylinderIntegrals;
        case ChartKind::cone: return kConeIntegrals;
        case ChartKind::sphere2: return kSphere2Integrals;
        case ChartKind::sphere3: return kSphere3Integrals;
    }
    return kNone;
}

const std::vector<std::string>& time_dependent_integral_names(const SurfaceChart& chart) {
    switch (chart.kind) {
        case ChartKind::cylinder: return kCylinderTimeDep;
        case ChartKind::cone: return kConeTimeDep;
        case ChartKind::sphere2: return kSphere2TimeDep;
        case ChartKind::sphere3: return kNone;
    }
    return kNone;
}

IntegralSet integrals_at(const SurfaceChart& chart, const PhaseState& state, int sigma) {
    const int n = chart.dim();
    chart.require_interior(std::span<const double>(state.x.data(), n), "integrals_at");
    if (sigma == 0) sigma = sign_or_plus(state.u[0]);
    IntegralSet out;
    const double t = state.t;

    switch (chart.kind) {
        case ChartKind::cylinder: {
            const double z = state.x[0], phi = state.x[1];
            const double u = state.u[0], v = state.u[1];
            out.values = {{"u", u, true},
                          {"v", v, true},
                          {"z_minus_ut", z - u * t, true},
                          {"phi_minus_vt", phi - v * t, true}};
            break;
        }
        case ChartKind::cone: {
            const auto I = kernels::cone_integrals(chart.alpha, t, state.x[0], state.x[1],
                                                   state.u[0], state.u[1]);
            out.values = {{"H", I.H, true},
                          {"L3", I.L3, true},
                          {"I3", I.I3, true},
                          {"I4", I.I4, I.i4_defined}};
            break;
        }
        case ChartKind::sphere2: {
            const auto I = kernels::s2_integrals(chart.radius, sigma, t, state.x[0], state.x[1],
                                                 state.u[0], state.u[1]);
            out.values = {{"H", I.H, true},   {"L1", I.L1, true},
                          {"L2", I.L2, true}, {"L3", I.L3, true},
                          {"I1", I.I1, I.i_defined}, {"I2", I.I2, I.i_defined}};
            break;
        }
        case ChartKind::sphere3: {
            double P[3][3], Q[3][3];
            s3_momentum_matrices(std::span<const double>(state.x.data(), 3), P, Q);
            const double R2 = chart.radius * chart.radius;
            double L[6] = {};
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) {
                    L[i] += R2 * P[i][k] * state.u[k];
                    L[3 + i] += R2 * Q[i][k] * state.u[k];
                }
            const MetricTensor g = metric_at(chart, std::span<const double>(state.x.data(), 3));
            double H = 0.0;
            for (int i = 0; i < 3; ++i) H += g(i, i) * state.u[i] * state.u[i];
            out.values = {{"H", H, true},   {"L1", L[0], true}, {"L2", L[1], true},
                          {"L3", L[2], true}, {"L4", L[3], true}, {"L5", L[4], true},
                          {"L6", L[5], true}};
            break;
        }
    }
    return out;
}

void s3_momentum_matrices(std::span<const double> coords, double P[3][3], double Q[3][3]) {
    const double s1 = std::sin(coords[0]), c1 = std::cos(coords[0]);
    const double s2 = std::sin(coords[1]), c2 = std::cos(coords[1]);
    const double s3 = std::sin(coords[2]), c3 = std::cos(coords[2]);
    P[0][0] = -s2 * c3;
    P[0][1] = -c1 * s1 * c2 * c3;
    P[0][2] = s1 * c1 * s2 * s3;
    P[1][0] = c2;
    P[1][1] = -s1 * c1 * s2;
    P[1][2] = 0.0;
    P[2][0] = 0.0;
    P[2][1] = s1 * s1 * c3;
    P[2][2] = -s1 * s1 * s2 * c2 * s3;
    Q[0][0] = s2 * s3;
    Q[0][1] = s1 * c1 * c2 * s3;
    Q[0][2] = s1 * c1 * s2 * c3;
    Q[1][0] = 0.0;
    Q[1][1] = s1 * s1 * s3;
    Q[1][2] = s1 * s1 * s2 * c2 * c3;
    Q[2][0] = 0.0;
    Q[2][1] = 0.0;
    Q[2][2] = s1 * s1 * s2 * s2;
}

std::vector<std::pair<std::string, double>> relation_checks(const SurfaceChart& chart,
                                                            const PhaseState& state) {
    const int n = chart.dim();
    chart.require_interior(std::span<const double>(state.x.data(), n), "relation_checks");
    std::vector<std::pair<std::string, double>> out;
    if (chart.kind == ChartKind::sphere2) {
        const IntegralSet I = integrals_at(chart, state);
        const double L1 = I.get("L1"), L2 = I.get("L2"), L3 = I.get("L3"), H = I.get("H");
        const double theta = state.x[0], phi = state.x[1];
        out.emplace_back("great_circle_combination",
                         std::cos(phi) * L1 + std::sin(phi) * L2 +
                             std::cos(theta) / std::sin(theta) * L3);
        out.emplace_back("energy_momentum",
                         chart.radius * chart.radius * H - (L1 * L1 + L2 * L2 + L3 * L3));
    } else if (chart.kind == ChartKind::sphere3) {
        const IntegralSet I = integrals_at(chart, state);
        double L[6], H = I.get("H");
        for (int i = 0; i < 6; ++i) L[i] = I.get("L" + std::to_string(i + 1));
        const double p1 = state.x[0], p2 = state.x[1], p3 = state.x[2];
        out.emplace_back("rank2_combination",
                         std::cos(p2) * L[0] + std::sin(p2) * std::cos(p3) * L[1] +
                             std::cos(p1) / std::sin(p1) * L[2]);
        double P[3][3], Q[3][3];
        s3_momentum_matrices(std::span<const double>(state.x.data(), 3), P, Q);
        out.emplace_back("det_p", linalg::det(P, 3));
        const double s1 = std::sin(p1), s2 = std::sin(p2), s3 = std::sin(p3);
        out.emplace_back("det_q", linalg::det(Q, 3) - std::pow(s1, 4) * std::pow(s2, 3) * s3 * s3);
        double y[3];
        const double L456[3] = {L[3], L[4], L[5]};
        if (linalg::solve(Q, L456, y, 3)) {
            for (int i = 0; i < 3; ++i) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += P[i][k] * y[k];
                out.emplace_back("pq_momentum_" + std::to_string(i + 1), L[i] - acc);
            }
        }
        double L2sum = 0.0;
        for (double Li : L) L2sum += Li * Li;
        out.emplace_back("energy_momentum", chart.radius * chart.radius * H - L2sum);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with FSAL and cubic Hermite dense output.

namespace {

struct OdeSystem {
    const SurfaceChart& chart;
    int n;
    // throws CoordsOutOfRange outside the open chart
    void operator()(double t, const double* y, double* dy) const {
        PhaseState s;
        s.t = t;
        for (int i = 0; i < n; ++i) {
            s.x[i] = y[i];
            s.u[i] = y[n + i];
        }
        const PhaseDerivative d = geodesic_rhs(chart, s);
        for (int i = 0; i < n; ++i) {
            dy[i] = d.dx[i];
            dy[n + i] = d.du[i];
        }
    }
};

PhaseState unpack(const SurfaceChart& chart, double t, const double* y) {
    PhaseState s;
    s.t = t;
    const int n = chart.dim();
    for (int i = 0; i < n; ++i) {
        s.x[i] = y[i];
        s.u[i] = y[n + i];
    }
    return s;
}

void hermite(int m, double theta, double h, const double* y0, const double* f0,
             const double* y1, const double* f1, double* out) {
    const double t2 = theta * theta, t3 = t2 * theta;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + theta;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    for (int i = 0; i < m; ++i)
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
}

}  // namespace

Trajectory integrate_geodesic(const SurfaceChart& chart, const PhaseState& initial, double t_end,
                              double tol, double sample_dt) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_geodesic: tol must be positive");
    const int n = chart.dim();
    chart.require_interior(std::span<const double>(initial.x.data(), n), "integrate_geodesic");

    Trajectory traj;
    traj.sigma0 = sign_or_plus(initial.u[0]);
    traj.samples.push_back(initial);
    if (initial.t == t_end) return traj;

    const int m = 2 * n;
    const OdeSystem f{chart, n};
    double y[6], k1[6], k2[6], k3[6], k4[6], k5[6], k6[6], k7[6], ytmp[6], ynew[6];
    for (int i = 0; i < n; ++i) {
        y[i] = initial.x[i];
        y[n + i] = initial.u[i];
    }
    double t = initial.t;
    f(t, y, k1);

    const double dir = (t_end > t) ? 1.0 : -1.0;
    const double hmin = 1e-14 * std::max(1.0, std::abs(t_end));
    double h = dir * std::min(0.05, 0.1 * std::abs(t_end - t));
    double next_sample = (sample_dt > 0.0) ? initial.t + dir * sample_dt
                                           : std::numeric_limits<double>::quiet_NaN();

    // RK5(4)7M tableau
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    while (true) {
        // dense output keeps the Hermite interpolation error under control by
        // never stepping farther than the sampling interval
        if (sample_dt > 0.0 && std::abs(h) > sample_dt) h = dir * sample_dt;
        bool last = false;
        if ((t + h - t_end) * dir >= 0.0) {
            h = t_end - t;
            last = true;
        }

        bool out_of_range = false;
        double errnorm = std::numeric_limits<double>::infinity();
        try {
            for (int i = 0; i < m; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
            f(t + h / 5, ytmp, k2);
            for (int i = 0; i < m; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            f(t + 3 * h / 10, ytmp, k3);
            for (int i = 0; i < m; ++i)
                ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            f(t + 4 * h / 5, ytmp, k4);
            for (int i = 0; i < m; ++i)
                ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            f(t + 8 * h / 9, ytmp, k5);
            for (int i = 0; i < m; ++i)
                ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                      a65 * k5[i]);
            f(t + h, ytmp, k6);
            for (int i = 0; i < m; ++i)
                ynew[i] = y[i] +
                          h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            f(t + h, ynew, k7);

            double acc = 0.0;
            for (int i = 0; i < m; ++i) {
                const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                        e6 * k6[i] + e7 * k7[i]);
                const double scale = tol + tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                acc += (err / scale) * (err / scale);
            }
            errnorm = std::sqrt(acc / m);
        } catch (const CoordsOutOfRange&) {
            out_of_range = true;
        }

        if (!out_of_range && errnorm <= 1.0) {
            if (sample_dt > 0.0) {
                while ((next_sample - (t + h)) * dir < 0.0) {
                    const double theta = (next_sample - t) / h;
                    double ys[6];
                    hermite(m, theta, h, y, k1, ynew, k7, ys);
                    traj.samples.push_back(unpack(chart, next_sample, ys));
                    next_sample += dir * sample_dt;
                }
            }
            t += h;
            for (int i = 0; i < m; ++i) {
                y[i] = ynew[i];
                k1[i] = k7[i];
            }
            ++traj.accepted_steps;
            if (sample_dt <= 0.0 || last) traj.samples.push_back(unpack(chart, t, y));
            if (last) break;
            const double fac = std::clamp(0.9 * std::pow(errnorm, -0.2), 0.2, 5.0);
            h *= std::max(fac, 1e-2);
        } else {
            ++traj.rejected_steps;
            if (out_of_range)
                h *= 0.5;
            else
                h *= std::clamp(0.9 * std::pow(errnorm, -0.2), 0.1, 0.5);
            if (std::abs(h) < hmin) {
                // repeated range failures mean the path is at the chart boundary
                traj.status =
                    out_of_range ? TrajectoryStatus::boundary_hit : TrajectoryStatus::step_underflow;
                if (sample_dt > 0.0 && traj.samples.back().t != t)
                    traj.samples.push_back(unpack(chart, t, y));
                break;
            }
        }
    }
    return traj;
}

PhaseState advance_geodesic(const SurfaceChart& chart, const PhaseState& initial, double t_end,
                            double tol, TrajectoryStatus& status) {
    const Trajectory traj =
        integrate_geodesic(chart, initial, t_end, tol, std::numeric_limits<double>::max());
    status = traj.status;
    return traj.samples.back();
}

}  // namespace hodoflow
