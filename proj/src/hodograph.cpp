#include "hodoflow/hodograph.hpp"

#include <cmath>
#include <optional>
#include <unordered_map>

#include "hodoflow/integral_kernels.hpp"
#include "hodoflow/geodesics.hpp"
#include "hodoflow/linalg.hpp"
#include "hodoflow/parallel.hpp"

namespace hodoflow {

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool eval_residual(const HodographSystem& sys, double t, std::span<const double> coords,
                   std::span<const double> vel, std::span<double> out) {
    if (!sys.residual(t, coords, vel, out)) return false;
    return all_finite(out.first(sys.n));
}

double fd_step_for(double v) { return std::max(1e-7, 1e-7 * std::abs(v)); }

// Central-difference velocity Jacobian; falls back to one-sided differences at
// domain edges. Returns false if a column cannot be formed at all.
bool fd_jacobian(const HodographSystem& sys, double t, std::span<const double> coords,
                 std::span<const double> vel, double M[3][3]) {
    const int n = sys.n;
    double vp[3], vm[3], Sp[3], Sm[3], S0[3];
    bool have_center = false;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) vp[i] = vm[i] = vel[i];
        // snap the perturbation to representable points
        vp[j] = vel[j] + fd_step_for(vel[j]);
        vm[j] = vel[j] - fd_step_for(vel[j]);
        const double h = 0.5 * (vp[j] - vm[j]);
        const bool okp = eval_residual(sys, t, coords, std::span<const double>(vp, n), Sp);
        const bool okm = eval_residual(sys, t, coords, std::span<const double>(vm, n), Sm);
        if (okp && okm) {
            for (int i = 0; i < n; ++i) M[i][j] = (Sp[i] - Sm[i]) / (2.0 * h);
        } else if (okp || okm) {
            if (!have_center) {
                if (!eval_residual(sys, t, coords, vel, S0)) return false;
                have_center = true;
            }
            if (okp)
                for (int i = 0; i < n; ++i) M[i][j] = (Sp[i] - S0[i]) / h;
            else
                for (int i = 0; i < n; ++i) M[i][j] = (S0[i] - Sm[i]) / h;
        } else {
            return false;
        }
    }
    return true;
}

}  // namespace

void m_matrix(const HodographSystem& sys, double t, std::span<const double> coords,
              std::span<const double> velocities, double M[3][3]) {
    if (sys.jacobian) {
        sys.jacobian(t, coords, velocities, M);
        return;
    }
    if (!fd_jacobian(sys, t, coords, velocities, M))
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) M[i][j] = std::numeric_limits<double>::quiet_NaN();
}

double det_m(const HodographSystem& sys, double t, std::span<const double> coords,
             std::span<const double> velocities) {
    double M[3][3];
    m_matrix(sys, t, coords, velocities, M);
    return linalg::det(M, sys.n);
}

SolveResult solve_velocities(const HodographSystem& sys, double t, std::span<const double> coords,
                             std::span<const double> guess, const SolveOptions& opts) {
    const int n = sys.n;
    SolveResult res;
    std::array<double, 3> v{};
    for (int i = 0; i < n; ++i) v[i] = guess[i];
    res.velocities = v;

    double S[3], Stry[3];
    if (!eval_residual(sys, t, coords, std::span<const double>(v.data(), n), S)) {
        res.status = SolveStatus::out_of_domain;
        return res;
    }
    double fnorm = norm_inf(std::span<const double>(S, n));
    res.residual_history.push_back(fnorm);

    while (true) {
        if (fnorm < opts.tol) {
            res.status = SolveStatus::converged;
            res.residual_norm = fnorm;
            res.velocities = v;
            res.det_m = det_m(sys, t, coords, std::span<const double>(v.data(), n));
            return res;
        }
        if (res.iterations >= opts.max_iter) break;

        double M[3][3];
        bool have_jac;
        if (sys.jacobian) {
            sys.jacobian(t, coords, std::span<const double>(v.data(), n), M);
            have_jac = true;
        } else {
            have_jac = fd_jacobian(sys, t, coords, std::span<const double>(v.data(), n), M);
        }
        if (!have_jac) break;

        const double det = linalg::det(M, n);
        if (std::abs(det) < opts.jac_tol) {
            res.status = SolveStatus::singular_jacobian;
            res.residual_norm = fnorm;
            res.velocities = v;
            res.det_m = det;
            return res;
        }
        double delta[3];
        if (!linalg::solve(M, S, delta, n)) break;

        double lambda = opts.damping;
        bool advanced = false;
        for (int bt = 0; bt <= 30 && !advanced; ++bt) {
            std::array<double, 3> vt = v;
            for (int i = 0; i < n; ++i) vt[i] = v[i] - lambda * delta[i];
            if (eval_residual(sys, t, coords, std::span<const double>(vt.data(), n), Stry)) {
                const double ft = norm_inf(std::span<const double>(Stry, n));
                if (ft < fnorm) {
                    v = vt;
                    fnorm = ft;
                    for (int i = 0; i < n; ++i) S[i] = Stry[i];
                    advanced = true;
                }
            }
            lambda *= 0.5;
        }
        ++res.iterations;
        res.residual_history.push_back(fnorm);
        if (!advanced) break;
    }

    res.status = fnorm < opts.tol ? SolveStatus::converged : SolveStatus::no_convergence;
    res.residual_norm = fnorm;
    res.velocities = v;
    if (res.status == SolveStatus::converged)
        res.det_m = det_m(sys, t, coords, std::span<const double>(v.data(), n));
    return res;
}

// ---------------------------------------------------------------------------
// System builders

HodographSystem make_cone_system(const SurfaceChart& cone, Fn2 F1, Fn2 F2) {
    if (cone.kind != ChartKind::cone) throw std::invalid_argument("make_cone_system: chart");
    HodographSystem sys;
    sys.chart = cone;
    sys.name = "cone";
    sys.n = 2;
    const double alpha = cone.alpha;
    sys.residual = [alpha, F1, F2](double t, std::span<const double> x,
                                   std::span<const double> v, std::span<double> out) {
        if (!(x[0] > 0.0)) return false;
        const auto I = kernels::cone_integrals(alpha, t, x[0], x[1], v[0], v[1]);
        if (!I.i4_defined) return false;
        out[0] = I.I3 - F1(I.H, I.L3);
        out[1] = I.I4 - F2(I.H, I.L3);
        return true;
    };
    return sys;
}

HodographSystem make_cone_alt_system(const SurfaceChart& cone, Fn2 phi1, Fn2 phi2) {
    if (cone.kind != ChartKind::cone) throw std::invalid_argument("make_cone_alt_system: chart");
    HodographSystem sys;
    sys.chart = cone;
    sys.name = "cone_alt";
    sys.n = 2;
    const double alpha = cone.alpha;
    sys.residual = [alpha, phi1, phi2](double t, std::span<const double> x,
                                       std::span<const double> v, std::span<double> out) {
        if (!(x[0] > 0.0)) return false;
        const auto I = kernels::cone_integrals(alpha, t, x[0], x[1], v[0], v[1]);
        // I4 is NaN on the v = 0 slice; fine as long as phi1/phi2 ignore it
        const double i4 = I.i4_defined ? I.I4 : std::numeric_limits<double>::quiet_NaN();
        out[0] = I.H - phi1(I.I3, i4);
        out[1] = I.L3 - phi2(I.I3, i4);
        return true;
    };
    return sys;
}

HodographSystem make_s2_system(const SurfaceChart& sphere2, Fn2 F1, Fn2 F2, int sigma) {
    if (sphere2.kind != ChartKind::sphere2) throw std::invalid_argument("make_s2_system: chart");
    HodographSystem sys;
    sys.chart = sphere2;
    sys.name = "s2_timedep";
    sys.n = 2;
    sys.sigma = sigma;
    const double R = sphere2.radius;
    sys.residual = [R, sigma, F1, F2](double t, std::span<const double> x,
                                      std::span<const double> v, std::span<double> out) {
        const auto I = kernels::s2_integrals(R, sigma, t, x[0], x[1], v[0], v[1]);
        if (!I.i_defined) return false;
        const double s = std::sin(x[0]);
        out[0] = I.I1 - F1(I.L1, I.L2);
        out[1] = v[1] * s * s - F2(I.L1, I.L2);
        return true;
    };
    return sys;
}

HodographSystem make_s2_stationary_system(const SurfaceChart& sphere2, ScalarFn F1, ScalarFn F2) {
    if (sphere2.kind != ChartKind::sphere2)
        throw std::invalid_argument("make_s2_stationary_system: chart");
    HodographSystem sys;
    sys.chart = sphere2;
    sys.name = "s2_stationary";
    sys.n = 2;
    sys.stationary = true;
    const double R2 = sphere2.radius * sphere2.radius;
    sys.residual = [R2, F1, F2](double, std::span<const double> x, std::span<const double> v,
                                std::span<double> out) {
        const double s = std::sin(x[0]), c = std::cos(x[0]);
        const double cp = std::cos(x[1]), sp = std::sin(x[1]);
        const double xi = R2 * s * s * v[1];
        if (!F1.in_domain(xi) || !F2.in_domain(xi)) return false;
        out[0] = R2 * (s * c * cp * v[1] + sp * v[0]) - F1(xi);
        out[1] = R2 * (s * c * sp * v[1] - cp * v[0]) - F2(xi);
        return true;
    };
    sys.jacobian = [R2, F1, F2](double, std::span<const double> x, std::span<const double> v,
                                double M[3][3]) {
        const double s = std::sin(x[0]), c = std::cos(x[0]);
        const double cp = std::cos(x[1]), sp = std::sin(x[1]);
        const double xi = R2 * s * s * v[1];
        M[0][0] = R2 * sp;
        M[0][1] = R2 * s * (c * cp - s * F1.deriv(xi) * R2);
        M[1][0] = -R2 * cp;
        M[1][1] = R2 * s * (c * sp - s * F2.deriv(xi) * R2);
    };
    sys.reduced_residual_v = [R2, F1, F2](std::span<const double> x, double v) {
        const double s = std::sin(x[0]), c = std::cos(x[0]);
        const double xi = R2 * s * s * v;
        return R2 * s * c * v - std::cos(x[1]) * F1(xi) - std::sin(x[1]) * F2(xi);
    };
    sys.reduced_u_of_v = [R2, F1, F2](std::span<const double> x, double v) {
        const double s = std::sin(x[0]);
        const double xi = R2 * s * s * v;
        return (std::sin(x[1]) * F1(xi) - std::cos(x[1]) * F2(xi)) / R2;
    };
    return sys;
}

HodographSystem make_s3_stationary_system(const SurfaceChart& sphere3, Fn3 F1, Fn3 F2, Fn3 F3) {
    if (sphere3.kind != ChartKind::sphere3)
        throw std::invalid_argument("make_s3_stationary_system: chart");
    HodographSystem sys;
    sys.chart = sphere3;
    sys.name = "s3_stationary";
    sys.n = 3;
    sys.stationary = true;
    const double R2 = sphere3.radius * sphere3.radius;
    sys.residual = [R2, F1, F2, F3](double, std::span<const double> x, std::span<const double> v,
                                    std::span<double> out) {
        double P[3][3], Q[3][3];
        s3_momentum_matrices(x, P, Q);
        double L[3] = {}, L3p[3] = {};
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) {
                L[i] += R2 * P[i][k] * v[k];
                L3p[i] += R2 * Q[i][k] * v[k];
            }
        out[0] = L3p[0] - F1(L[0], L[1], L[2]);
        out[1] = L3p[1] - F2(L[0], L[1], L[2]);
        out[2] = L3p[2] - F3(L[0], L[1], L[2]);
        return true;
    };
    return sys;
}

// ---------------------------------------------------------------------------
// Grid scan with row continuation, blow-up tracing

namespace {

struct GridScan {
    std::vector<std::array<double, 3>> vel;
    std::vector<std::uint8_t> solved;
    std::vector<double> det;
};

// The first node of each row line (rows = all leading axes, continuation runs
// along the last axis) is seeded from the previous row's first solution; that
// spine is swept sequentially, rows then fan out in parallel.
GridScan scan_grid(const HodographSystem& sys, const GridSpec& grid, double t,
                   std::span<const double> seed_guess, const SolveOptions& opts, int workers) {
    const size_t N = grid.size();
    const int nd = static_cast<int>(grid.axes.size());
    const int nlast = grid.axes.back().count;
    const size_t rows = N / static_cast<size_t>(nlast);

    GridScan scan;
    scan.vel.assign(N, {});
    scan.solved.assign(N, 0);
    scan.det.assign(N, std::numeric_limits<double>::quiet_NaN());

    FieldGrid shape;  // index helper only
    shape.axes = grid.axes;

    std::vector<std::array<double, 3>> row_first(rows);
    std::array<double, 3> g{};
    for (int i = 0; i < sys.n; ++i) g[i] = seed_guess[i];
    double coords[3];
    for (size_t r = 0; r < rows; ++r) {
        const size_t flat = r * static_cast<size_t>(nlast);
        shape.coords_of(flat, std::span<double>(coords, nd));
        const SolveResult res =
            solve_velocities(sys, t, std::span<const double>(coords, nd),
                             std::span<const double>(g.data(), sys.n), opts);
        row_first[r] = res.ok() ? res.velocities : g;
        if (res.ok()) g = res.velocities;
    }

    parallel_for(rows, workers, [&](size_t r) {
        double c[3];
        std::array<double, 3> guess = row_first[r];
        for (int j = 0; j < nlast; ++j) {
            const size_t flat = r * static_cast<size_t>(nlast) + static_cast<size_t>(j);
            shape.coords_of(flat, std::span<double>(c, nd));
            const SolveResult res =
                solve_velocities(sys, t, std::span<const double>(c, nd),
                                 std::span<const double>(guess.data(), sys.n), opts);
            if (res.ok()) {
                scan.vel[flat] = res.velocities;
                scan.solved[flat] = 1;
                scan.det[flat] = res.det_m;
                guess = res.velocities;
            }
        }
    });
    return scan;
}

}  // namespace

FieldGrid solve_field_grid(const HodographSystem& sys, const GridSpec& grid, double t,
                           std::span<const double> seed_guess, const SolveOptions& opts,
                           int workers) {
    if (static_cast<int>(grid.axes.size()) != sys.n)
        throw std::invalid_argument("solve_field_grid: grid dimension != system dimension");
    const GridScan scan = scan_grid(sys, grid, t, seed_guess, opts, workers);
    FieldGrid out;
    out.chart = sys.chart;
    out.t = t;
    out.stationary = sys.stationary;
    out.axes = grid.axes;
    out.values = scan.vel;
    out.mask = scan.solved;
    out.provenance = "hodograph:" + sys.name;
    return out;
}

BlowupLocus trace_blowup(const HodographSystem& sys, const GridSpec& grid, double t,
                         std::span<const double> seed_guess, double refine_tol,
                         const SolveOptions& opts, int workers) {
    if (static_cast<int>(grid.axes.size()) != sys.n)
        throw std::invalid_argument("trace_blowup: grid dimension != system dimension");
    const int nd = sys.n;
    const size_t N = grid.size();

    BlowupLocus locus;
    locus.grid = grid;
    locus.t = t;

    const GridScan scan = scan_grid(sys, grid, t, seed_guess, opts, workers);
    locus.velocities = scan.vel;
    locus.det_values = scan.det;
    locus.sign.assign(N, 0);
    for (size_t i = 0; i < N; ++i)
        if (scan.solved[i]) locus.sign[i] = scan.det[i] >= 0.0 ? 1 : -1;

    FieldGrid shape;
    shape.axes = grid.axes;

    // strides per axis
    size_t stride[3] = {1, 1, 1};
    for (int d = nd - 2; d >= 0; --d)
        stride[d] = stride[d + 1] * static_cast<size_t>(grid.axes[d + 1].count);

    // refine an edge crossing between two solved nodes of opposite det sign
    auto refine_edge = [&](size_t a, size_t b) -> std::optional<BlowupLocus::Crossing> {
        double ca[3], cb[3];
        shape.coords_of(a, std::span<double>(ca, nd));
        shape.coords_of(b, std::span<double>(cb, nd));
        double det_lo = scan.det[a];
        std::array<double, 3> v_lo = scan.vel[a], v_hi = scan.vel[b];
        double s_lo = 0.0, s_hi = 1.0;
        double best[3];
        double best_det = std::numeric_limits<double>::quiet_NaN();
        for (int it = 0; it < 60; ++it) {
            const double s = 0.5 * (s_lo + s_hi);
            double c[3];
            for (int d = 0; d < nd; ++d) c[d] = ca[d] + s * (cb[d] - ca[d]);
            std::array<double, 3> g;
            for (int d = 0; d < nd; ++d) g[d] = v_lo[d] + s * (v_hi[d] - v_lo[d]);
            SolveResult res = solve_velocities(sys, t, std::span<const double>(c, nd),
                                               std::span<const double>(g.data(), nd), opts);
            double det;
            if (res.ok()) {
                det = res.det_m;
            } else if (res.status == SolveStatus::singular_jacobian) {
                det = res.det_m;  // iterate pinned on the locus
            } else {
                return std::nullopt;
            }
            for (int d = 0; d < nd; ++d) best[d] = c[d];
            best_det = det;
            if (std::abs(det) < refine_tol) break;
            if ((det >= 0.0) == (det_lo >= 0.0)) {
                s_lo = s;
                if (res.ok()) v_lo = res.velocities;
                det_lo = det;
            } else {
                s_hi = s;
                if (res.ok()) v_hi = res.velocities;
            }
        }
        if (!(std::abs(best_det) < refine_tol)) return std::nullopt;
        BlowupLocus::Crossing cr;
        for (int d = 0; d < nd; ++d) cr.coords[d] = best[d];
        cr.det_m = best_det;
        return cr;
    };

    // edge key -> crossing index (edge identified by lower node and axis)
    std::unordered_map<size_t, size_t> edge_crossing;
    int idx[3];
    for (size_t flat = 0; flat < N; ++flat) {
        if (!scan.solved[flat]) continue;
        shape.unflatten(flat, std::span<int>(idx, nd));
        for (int d = 0; d < nd; ++d) {
            if (idx[d] + 1 >= grid.axes[d].count) continue;
            const size_t nb = flat + stride[d];
            if (!scan.solved[nb] || locus.sign[flat] == locus.sign[nb]) continue;
            if (auto cr = refine_edge(flat, nb)) {
                edge_crossing[flat * 3 + static_cast<size_t>(d)] = locus.crossings.size();
                locus.crossings.push_back(*cr);
            }
        }
    }

    if (nd != 2 || locus.crossings.empty()) return locus;

    // marching-squares segments between edge crossings
    const int n1 = grid.axes[1].count;
    std::vector<std::pair<size_t, size_t>> segments;
    auto edge_at = [&](size_t node, int axis) -> std::optional<size_t> {
        const auto it = edge_crossing.find(node * 3 + static_cast<size_t>(axis));
        if (it == edge_crossing.end()) return std::nullopt;
        return it->second;
    };
    for (int i = 0; i + 1 < grid.axes[0].count; ++i)
        for (int j = 0; j + 1 < n1; ++j) {
            const size_t a = static_cast<size_t>(i) * n1 + j;      // (i, j)
            const size_t b = a + 1;                                // (i, j+1)
            const size_t c = a + static_cast<size_t>(n1);          // (i+1, j)
            if (!scan.solved[a] || !scan.solved[b] || !scan.solved[c] ||
                !scan.solved[c + 1])
                continue;
            const auto S = edge_at(a, 1), N_ = edge_at(c, 1);
            const auto W = edge_at(a, 0), E = edge_at(b, 0);
            std::vector<size_t> cut;
            for (const auto& e : {S, E, N_, W})
                if (e) cut.push_back(*e);
            if (cut.size() == 2) {
                segments.emplace_back(cut[0], cut[1]);
            } else if (cut.size() == 4 && S && E && N_ && W) {
                // saddle: split by det sign at the cell centre
                double cc[2] = {0.5 * (grid.axes[0].node(i) + grid.axes[0].node(i + 1)),
                                0.5 * (grid.axes[1].node(j) + grid.axes[1].node(j + 1))};
                std::array<double, 3> g{};
                for (int d = 0; d < 2; ++d)
                    g[d] = 0.25 * (scan.vel[a][d] + scan.vel[b][d] + scan.vel[c][d] +
                                   scan.vel[c + 1][d]);
                const SolveResult res = solve_velocities(
                    sys, t, std::span<const double>(cc, 2),
                    std::span<const double>(g.data(), 2), opts);
                const bool centre_like_a =
                    res.ok() && ((res.det_m >= 0.0) == (locus.sign[a] > 0));
                if (centre_like_a) {
                    segments.emplace_back(*S, *E);
                    segments.emplace_back(*N_, *W);
                } else {
                    segments.emplace_back(*S, *W);
                    segments.emplace_back(*N_, *E);
                }
            }
        }

    // chain segments into polylines
    std::unordered_map<size_t, std::vector<std::pair<size_t, size_t>>> adj;  // node -> (seg, other)
    for (size_t s = 0; s < segments.size(); ++s) {
        adj[segments[s].first].push_back({s, segments[s].second});
        adj[segments[s].second].push_back({s, segments[s].first});
    }
    std::vector<bool> used(segments.size(), false);
    auto walk = [&](size_t start) {
        std::vector<std::array<double, 2>> line;
        size_t cur = start;
        line.push_back({locus.crossings[cur].coords[0], locus.crossings[cur].coords[1]});
        while (true) {
            bool moved = false;
            for (const auto& [seg, other] : adj[cur]) {
                if (used[seg]) continue;
                used[seg] = true;
                cur = other;
                line.push_back({locus.crossings[cur].coords[0], locus.crossings[cur].coords[1]});
                moved = true;
                break;
            }
            if (!moved) break;
        }
        return line;
    };
    for (const auto& [node, edges] : adj)
        if (edges.size() == 1 && !used[edges[0].first]) locus.polylines.push_back(walk(node));
    for (size_t s = 0; s < segments.size(); ++s)
        if (!used[s]) locus.polylines.push_back(walk(segments[s].first));

    return locus;
}

}  // namespace hodoflow
