#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hodoflow/charts.hpp"

namespace hodoflow {

// A point of the characteristic flow: (t, x^i, u^i) with u^i = dx^i/dt.
struct PhaseState {
    double t = 0.0;
    std::array<double, 3> x{};
    std::array<double, 3> u{};
};

struct PhaseDerivative {
    std::array<double, 3> dx{};
    std::array<double, 3> du{};
};

// Characteristic ODE right-hand side: dx = u, du^i = -Gamma^i_{lm} u^l u^m.
// Built from christoffel_at for every chart; there is no per-chart ODE text.
PhaseDerivative geodesic_rhs(const SurfaceChart& chart, const PhaseState& state);

struct IntegralValue {
    std::string name;
    double value = 0.0;
    bool defined = true;
};

struct IntegralSet {
    std::vector<IntegralValue> values;
    double get(std::string_view name) const;
    bool defined(std::string_view name) const;
    const IntegralValue* find(std::string_view name) const;
};

// Integral names in CSV column order for each chart.
const std::vector<std::string>& integral_names(const SurfaceChart& chart);
// Names of the explicitly time-dependent integrals of the chart.
const std::vector<std::string>& time_dependent_integral_names(const SurfaceChart& chart);

// Evaluates every listed integral of the chart at a phase point.
// sigma fixes the branch of the time-dependent sphere2 integrals; sigma == 0
// means "use the sign of the radial velocity at this state". Integrals whose
// formula divides by zero at the state come back with defined == false.
IntegralSet integrals_at(const SurfaceChart& chart, const PhaseState& state, int sigma = 0);

// Pointwise identities among the integrals (all residuals vanish identically):
// sphere2: the great-circle combination and |L|^2 = R^2 H;
// sphere3: the rank-two combination, det P, det Q - sin^4(phi1)sin^3(phi2)sin^2(phi3),
//          L_i - (P Q^{-1} L_{4..6})_i and |L|^2 = R^2 H.
std::vector<std::pair<std::string, double>> relation_checks(const SurfaceChart& chart,
                                                            const PhaseState& state);

// Momentum coefficient matrices of sphere3 (R-independent): L_i = R^2 (P u)_i,
// L_{3+i} = R^2 (Q u)_i.
void s3_momentum_matrices(std::span<const double> coords, double P[3][3], double Q[3][3]);

enum class TrajectoryStatus { ok, boundary_hit, step_underflow };

struct Trajectory {
    std::vector<PhaseState> samples;  // strictly increasing t
    TrajectoryStatus status = TrajectoryStatus::ok;
    long accepted_steps = 0;
    long rejected_steps = 0;
    int sigma0 = 1;  // sign of the radial velocity at the initial state
    // per-integral max |I(t) - I(0)|, filled by oracle::conservation_report
    std::vector<std::pair<std::string, double>> drift;
};

// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) with absolute+relative
// local error control at `tol`. If sample_dt > 0, samples are emitted on the
// uniform grid t0 + k*sample_dt via cubic Hermite interpolation of the accepted
// steps (the endpoint is always included); otherwise every accepted step is a
// sample. Integration stops with status boundary_hit when the path leaves the
// open chart; step_underflow is reported if the controller drives the step
// below 1e-14 * max(1, |t_end|) away from a boundary.
Trajectory integrate_geodesic(const SurfaceChart& chart, const PhaseState& initial, double t_end,
                              double tol, double sample_dt = 0.0);

// Endpoint-only variant used by the characteristics oracle.
PhaseState advance_geodesic(const SurfaceChart& chart, const PhaseState& initial, double t_end,
                            double tol, TrajectoryStatus& status);

}  // namespace hodoflow
