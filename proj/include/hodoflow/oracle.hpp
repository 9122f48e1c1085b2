#pragma once

#include <optional>

#include "hodoflow/families.hpp"
#include "hodoflow/geodesics.hpp"
#include "hodoflow/grid.hpp"

namespace hodoflow {

struct InsufficientDomain : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResidualReport {
    double max = 0.0;
    double mean = 0.0;
    size_t n_nodes = 0;     // nodes entering the summary
    size_t n_excluded = 0;  // masked / stencil-clipped nodes
    double fd_step = 0.0;
};

// Residual of the flow equation du^i/dt + u^k du^i/dx^k + Gamma^i_{lm} u^l u^m
// at one point, all derivatives by central differences of the callable field.
// nullopt when the stencil leaves the field's validity domain. Fields declared
// stationary get an exact zero time derivative instead of FD noise.
std::optional<std::array<double, 3>> euler_residual_at(const SurfaceChart& chart,
                                                       const FieldFn& field, bool stationary,
                                                       double t, std::span<const double> coords,
                                                       double fd_step);

// Aggregates |residual|_inf over a point set.
ResidualReport euler_residual(const SurfaceChart& chart, const FieldFn& field, bool stationary,
                              double t, std::span<const std::array<double, 3>> points,
                              double fd_step, int workers = 1);

// Grid-stencil variant: spatial derivatives from the grid's own spacing, the
// summary taken only over masked-in nodes whose full stencil is masked-in.
// Time derivative needs `time_source` unless the grid is stationary. Throws
// InsufficientDomain when no node survives the mask erosion.
ResidualReport euler_residual(const FieldGrid& grid, const FieldFn* time_source, double fd_step_t);

struct ConservationReport {
    struct Entry {
        std::string name;
        double max_drift = 0.0;
        int segments = 1;
        bool evaluated = true;  // false if the integral was undefined along the path
    };
    std::vector<Entry> entries;
    double max_drift(std::string_view name) const;
    void apply_to(Trajectory& traj) const;
};

// Per-integral max |I(t) - I(0)| along the trajectory. Time-dependent integrals
// are monitored per sigma-segment (between sign changes of the radial velocity)
// with the sigma convention re-anchored per segment, arctan-quantum unwrapping,
// and a |u| < 0.05 max|u| buffer around the turning points excluded from the
// drift statistic.
ConservationReport conservation_report(const SurfaceChart& chart, const Trajectory& traj);

struct EvolveResult {
    FieldGrid grid;
    size_t n_multivalued = 0;                // gradient-catastrophe signal
    size_t n_uncovered = 0;                  // no characteristic landed nearby
    std::vector<size_t> multivalued_nodes;   // flat indices into grid
};

// Forward-maps the initial grid along characteristics to t_target and scatters
// the transported velocities onto the target grid by moving-least-squares
// interpolation (quadratic basis, radius 2.5x grid spacing). Cells whose
// forward image flips orientation mark crossed characteristics; target nodes
// fed by them are masked and reported as multivalued. Deterministic for any
// worker count.
EvolveResult evolve_characteristics(const FieldGrid& initial, double t_target, double tol,
                                    int workers = 1,
                                    const std::vector<GridAxis>* target_axes = nullptr);

}  // namespace hodoflow
