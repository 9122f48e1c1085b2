#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hodoflow/charts.hpp"
#include "hodoflow/grid.hpp"
#include "hodoflow/scalar_fn.hpp"

namespace hodoflow {

using Fn2 = std::function<double(double, double)>;
using Fn3 = std::function<double(double, double, double)>;

// Implicit system S_i(t, x, v) = 0 whose resolution for the velocities v yields
// a flow field. residual() writes the n residuals and returns false when the
// query point is outside the system's domain. M = dS/dv is the velocity
// Jacobian; det M -> 0 marks derivative blow-up.
struct HodographSystem {
    SurfaceChart chart;
    std::string name;
    int n = 2;
    int sigma = +1;       // sheet tag for square-root/arc-function branches
    bool stationary = false;
    std::function<bool(double t, std::span<const double> coords, std::span<const double> vel,
                       std::span<double> out)>
        residual;
    // optional analytic velocity Jacobian; FD is used when absent
    std::function<void(double t, std::span<const double> coords, std::span<const double> vel,
                       double M[3][3])>
        jacobian;
    // stationary sphere2 systems expose the equivalent scalar reduction:
    // a single residual in v plus the explicit u(v)
    std::function<double(std::span<const double> coords, double v)> reduced_residual_v;
    std::function<double(std::span<const double> coords, double v)> reduced_u_of_v;
};

// r^2 - 2rut + (u^2 + a r^2 v^2) t^2 = F1(H, L3) and the azimuthal relation = F2(H, L3).
HodographSystem make_cone_system(const SurfaceChart& cone, Fn2 F1, Fn2 F2);

// u^2 + a r^2 v^2 = phi1(I3, I4), a r^2 v = phi2(I3, I4).
HodographSystem make_cone_alt_system(const SurfaceChart& cone, Fn2 phi1, Fn2 phi2);

// Time-dependent sphere2 system: I1(t, theta, u, v; sigma) = F1(L1, L2),
// v sin^2(theta) = F2(L1, L2). sigma selects the sheet.
HodographSystem make_s2_system(const SurfaceChart& sphere2, Fn2 F1, Fn2 F2, int sigma);

// Stationary sphere2 system in momentum form:
//   R^2 (sin t cos t cos p * v + sin p * u) = F1(R^2 sin^2 t * v)
//   R^2 (sin t cos t sin p * v - cos p * u) = F2(R^2 sin^2 t * v)
// Analytic Jacobian provided; fields generated by fixed F scale exactly as 1/R^2.
HodographSystem make_s2_stationary_system(const SurfaceChart& sphere2, ScalarFn F1, ScalarFn F2);

// Stationary sphere3 system: L_{3+i} = F_i(L1, L2, L3).
HodographSystem make_s3_stationary_system(const SurfaceChart& sphere3, Fn3 F1, Fn3 F2, Fn3 F3);

struct SolveOptions {
    int max_iter = 40;
    double tol = 1e-12;       // convergence on ||S||_inf
    double damping = 1.0;     // initial line-search step in (0,1]
    double jac_tol = 1e-13;   // |det M| below this reports singular_jacobian
};

enum class SolveStatus { converged, no_convergence, singular_jacobian, out_of_domain };

struct SolveResult {
    SolveStatus status = SolveStatus::no_convergence;
    std::array<double, 3> velocities{};
    int iterations = 0;
    double residual_norm = std::numeric_limits<double>::infinity();
    double det_m = 0.0;
    std::vector<double> residual_history;  // ||S||_inf per iterate
    bool ok() const { return status == SolveStatus::converged; }
};

// Damped Newton with backtracking line search (halving, up to 30 times).
// singular_jacobian is a first-class result: det M = 0 is the blow-up signal,
// and the offending iterate is returned with it.
SolveResult solve_velocities(const HodographSystem& sys, double t, std::span<const double> coords,
                             std::span<const double> guess, const SolveOptions& opts = {});

// Velocity Jacobian at a point (analytic when the system provides one, central
// differences otherwise) and its determinant.
void m_matrix(const HodographSystem& sys, double t, std::span<const double> coords,
              std::span<const double> velocities, double M[3][3]);
double det_m(const HodographSystem& sys, double t, std::span<const double> coords,
             std::span<const double> velocities);

struct BlowupLocus {
    GridSpec grid;
    double t = 0.0;
    std::vector<std::int8_t> sign;                   // det M sign per node; 0 = masked
    std::vector<double> det_values;                  // det M per node (masked: NaN)
    std::vector<std::array<double, 3>> velocities;   // solved velocities per node
    struct Crossing {
        std::array<double, 3> coords{};
        double det_m = 0.0;
    };
    std::vector<Crossing> crossings;                 // bisection-refined edge crossings
    std::vector<std::vector<std::array<double, 2>>> polylines;  // assembled for 2D charts
    bool empty() const { return crossings.empty(); }
};

// Solves the system over the grid (row-parallel continuation: the first column
// is swept sequentially, then each row continues from its column-0 solution),
// marks det M signs, refines sign-change edges by bisection until
// |det M| < refine_tol, and assembles the crossing polyline (marching squares)
// for 2D charts. Cells where the solve fails are masked. An empty locus is a
// normal outcome, not an error.
BlowupLocus trace_blowup(const HodographSystem& sys, const GridSpec& grid, double t,
                         std::span<const double> seed_guess, double refine_tol,
                         const SolveOptions& opts = {}, int workers = 1);

// Solves the system over the grid with the same row-parallel continuation scan
// and returns the velocities as a FieldGrid (failed nodes masked out).
FieldGrid solve_field_grid(const HodographSystem& sys, const GridSpec& grid, double t,
                           std::span<const double> seed_guess, const SolveOptions& opts = {},
                           int workers = 1);

}  // namespace hodoflow
