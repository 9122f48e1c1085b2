#include "hodoflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hodoflow/parallel.hpp"

namespace hodoflow {

namespace {

double norm_inf(std::span<const double> v, int n) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(v[i]));
    return m;
}

// dense solve for the small MLS normal systems (q <= 10); rejects
// near-singular pivots so degenerate point configurations fall through to a
// lower-order basis instead of extrapolating wildly
bool gauss_solve(std::vector<double>& A, std::vector<double>& b, int q) {
    double scale = 0.0;
    for (double a : A) scale = std::max(scale, std::abs(a));
    if (scale == 0.0) return false;
    const double pivot_floor = 1e-10 * scale;
    for (int col = 0; col < q; ++col) {
        int piv = col;
        for (int r = col + 1; r < q; ++r)
            if (std::abs(A[r * q + col]) > std::abs(A[piv * q + col])) piv = r;
        if (std::abs(A[piv * q + col]) < pivot_floor) return false;
        if (piv != col) {
            for (int c = 0; c < q; ++c) std::swap(A[piv * q + c], A[col * q + c]);
            std::swap(b[piv], b[col]);
        }
        for (int r = col + 1; r < q; ++r) {
            const double f = A[r * q + col] / A[col * q + col];
            for (int c = col; c < q; ++c) A[r * q + c] -= f * A[col * q + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = q - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < q; ++c) acc -= A[r * q + c] * b[c];
        if (A[r * q + r] == 0.0) return false;
        b[r] = acc / A[r * q + r];
    }
    return true;
}

}  // namespace

std::optional<std::array<double, 3>> euler_residual_at(const SurfaceChart& chart,
                                                       const FieldFn& field, bool stationary,
                                                       double t, std::span<const double> coords,
                                                       double fd_step) {
    const int n = chart.dim();
    if (!chart.interior(coords, 0.0)) return std::nullopt;
    const FieldSample c0 = field(t, coords);
    if (!c0.valid) return std::nullopt;

    double dudx[3][3];  // dudx[k][i] = du^i/dx^k
    std::array<double, 3> xp{}, xm{};
    for (int i = 0; i < n; ++i) xp[i] = xm[i] = coords[i];
    for (int k = 0; k < n; ++k) {
        xp[k] = coords[k] + fd_step;
        xm[k] = coords[k] - fd_step;
        if (!chart.interior(std::span<const double>(xp.data(), n)) ||
            !chart.interior(std::span<const double>(xm.data(), n)))
            return std::nullopt;
        const FieldSample sp = field(t, std::span<const double>(xp.data(), n));
        const FieldSample sm = field(t, std::span<const double>(xm.data(), n));
        if (!sp.valid || !sm.valid) return std::nullopt;
        for (int i = 0; i < n; ++i) dudx[k][i] = (sp.u[i] - sm.u[i]) / (2.0 * fd_step);
        xp[k] = xm[k] = coords[k];
    }

    std::array<double, 3> dudt{};
    if (!stationary) {
        const FieldSample tp = field(t + fd_step, coords);
        const FieldSample tm = field(t - fd_step, coords);
        if (!tp.valid || !tm.valid) return std::nullopt;
        for (int i = 0; i < n; ++i) dudt[i] = (tp.u[i] - tm.u[i]) / (2.0 * fd_step);
    }

    const ChristoffelSymbols G = christoffel_at(chart, coords);
    std::array<double, 3> res{};
    for (int i = 0; i < n; ++i) {
        double acc = dudt[i];
        for (int k = 0; k < n; ++k) acc += c0.u[k] * dudx[k][i];
        for (int l = 0; l < n; ++l)
            for (int mm = 0; mm < n; ++mm) acc += G(i, l, mm) * c0.u[l] * c0.u[mm];
        res[i] = acc;
    }
    return res;
}

ResidualReport euler_residual(const SurfaceChart& chart, const FieldFn& field, bool stationary,
                              double t, std::span<const std::array<double, 3>> points,
                              double fd_step, int workers) {
    ResidualReport rep;
    rep.fd_step = fd_step;
    std::vector<double> per_point(points.size(), -1.0);
    parallel_for(points.size(), workers, [&](size_t i) {
        const auto res = euler_residual_at(
            chart, field, stationary, t,
            std::span<const double>(points[i].data(), chart.dim()), fd_step);
        if (res) per_point[i] = norm_inf(std::span<const double>(res->data(), 3), chart.dim());
    });
    double sum = 0.0;
    for (double r : per_point) {
        if (r < 0.0) {
            ++rep.n_excluded;
            continue;
        }
        ++rep.n_nodes;
        sum += r;
        rep.max = std::max(rep.max, r);
    }
    rep.mean = rep.n_nodes ? sum / rep.n_nodes : 0.0;
    return rep;
}

ResidualReport euler_residual(const FieldGrid& grid, const FieldFn* time_source,
                              double fd_step_t) {
    const int nd = static_cast<int>(grid.axes.size());
    if (!grid.stationary && !time_source)
        throw std::invalid_argument(
            "euler_residual: time-dependent grid needs a time source for d/dt");

    size_t stride[3] = {1, 1, 1};
    for (int d = nd - 2; d >= 0; --d)
        stride[d] = stride[d + 1] * static_cast<size_t>(grid.axes[d + 1].count);

    ResidualReport rep;
    for (int d = 0; d < nd; ++d) rep.fd_step = std::max(rep.fd_step, grid.axes[d].step());

    double sum = 0.0;
    int idx[3];
    const size_t N = grid.size();
    for (size_t flat = 0; flat < N; ++flat) {
        grid.unflatten(flat, std::span<int>(idx, nd));
        bool usable = grid.mask[flat] != 0;
        for (int d = 0; d < nd && usable; ++d)
            usable = idx[d] > 0 && idx[d] + 1 < grid.axes[d].count &&
                     grid.mask[flat - stride[d]] && grid.mask[flat + stride[d]];
        if (!usable) {
            ++rep.n_excluded;
            continue;
        }
        double coords[3];
        grid.coords_of(flat, std::span<double>(coords, nd));
        const ChristoffelSymbols G =
            christoffel_at(grid.chart, std::span<const double>(coords, nd));

        std::array<double, 3> dudt{};
        if (!grid.stationary) {
            const FieldSample tp = (*time_source)(grid.t + fd_step_t,
                                                  std::span<const double>(coords, nd));
            const FieldSample tm = (*time_source)(grid.t - fd_step_t,
                                                  std::span<const double>(coords, nd));
            if (!tp.valid || !tm.valid) {
                ++rep.n_excluded;
                continue;
            }
            for (int i = 0; i < nd; ++i) dudt[i] = (tp.u[i] - tm.u[i]) / (2.0 * fd_step_t);
        }

        const std::array<double, 3>& u0 = grid.values[flat];
        double rmax = 0.0;
        for (int i = 0; i < nd; ++i) {
            double acc = dudt[i];
            for (int k = 0; k < nd; ++k) {
                const double duk = (grid.values[flat + stride[k]][i] -
                                    grid.values[flat - stride[k]][i]) /
                                   (2.0 * grid.axes[k].step());
                acc += u0[k] * duk;
            }
            for (int l = 0; l < nd; ++l)
                for (int mm = 0; mm < nd; ++mm) acc += G(i, l, mm) * u0[l] * u0[mm];
            rmax = std::max(rmax, std::abs(acc));
        }
        ++rep.n_nodes;
        sum += rmax;
        rep.max = std::max(rep.max, rmax);
    }
    if (rep.n_nodes == 0)
        throw InsufficientDomain("euler_residual: stencil leaves the validity mask everywhere");
    rep.mean = sum / rep.n_nodes;
    return rep;
}

// ---------------------------------------------------------------------------
// Conservation monitoring

double ConservationReport::max_drift(std::string_view name) const {
    for (const Entry& e : entries)
        if (e.name == name) return e.max_drift;
    throw std::out_of_range("ConservationReport: no integral named " + std::string(name));
}

void ConservationReport::apply_to(Trajectory& traj) const {
    traj.drift.clear();
    for (const Entry& e : entries) traj.drift.emplace_back(e.name, e.max_drift);
}

ConservationReport conservation_report(const SurfaceChart& chart, const Trajectory& traj) {
    if (traj.samples.empty()) throw std::invalid_argument("conservation_report: empty trajectory");
    const std::vector<std::string>& names = integral_names(chart);
    const std::vector<std::string>& tdep = time_dependent_integral_names(chart);
    const size_t S = traj.samples.size();

    // sigma-segments split at radial-velocity sign changes; zero samples attach
    // to the running segment
    std::vector<int> seg(S, 0);
    int prev_sign = 0, nseg = 0;
    for (size_t k = 0; k < S; ++k) {
        const double u0 = traj.samples[k].u[0];
        const int s = u0 > 0.0 ? 1 : (u0 < 0.0 ? -1 : 0);
        if (s != 0) {
            if (prev_sign != 0 && s != prev_sign) ++nseg;
            prev_sign = s;
        }
        seg[k] = nseg;
    }
    ++nseg;

    std::vector<int> seg_sigma(nseg, 1);
    std::vector<double> seg_umax(nseg, 0.0);
    double umax = 0.0;
    for (size_t k = 0; k < S; ++k) {
        const double au = std::abs(traj.samples[k].u[0]);
        umax = std::max(umax, au);
        if (au > seg_umax[seg[k]]) {
            seg_umax[seg[k]] = au;
            seg_sigma[seg[k]] = traj.samples[k].u[0] < 0.0 ? -1 : 1;
        }
    }
    const double turn_buffer = 0.05 * umax;

    // one integral evaluation per sample, sigma taken from the sample's segment
    std::vector<IntegralSet> evals(S);
    for (size_t k = 0; k < S; ++k)
        evals[k] = integrals_at(chart, traj.samples[k], seg_sigma[seg[k]]);

    ConservationReport rep;
    for (const std::string& name : names) {
        const bool segmented = std::find(tdep.begin(), tdep.end(), name) != tdep.end();
        double quantum = 0.0;
        if (name == "I2") quantum = kPi;
        if (name == "I4" && chart.kind == ChartKind::cone) quantum = kPi / std::sqrt(chart.alpha);

        ConservationReport::Entry entry;
        entry.name = name;
        entry.segments = segmented ? nseg : 1;

        bool any = false;
        if (!segmented) {
            double ref = 0.0;
            for (size_t k = 0; k < S; ++k) {
                const IntegralValue* v = evals[k].find(name);
                if (!v || !v->defined) continue;
                if (!any) {
                    ref = v->value;
                    any = true;
                    continue;
                }
                entry.max_drift = std::max(entry.max_drift, std::abs(v->value - ref));
            }
        } else {
            int cur = -1;
            bool have_ref = false;
            double ref = 0.0, prev = 0.0;
            for (size_t k = 0; k < S; ++k) {
                if (seg[k] != cur) {
                    cur = seg[k];
                    have_ref = false;
                }
                if (std::abs(traj.samples[k].u[0]) < turn_buffer) continue;
                const IntegralValue* v = evals[k].find(name);
                if (!v || !v->defined) continue;
                double val = v->value;
                if (have_ref && quantum > 0.0)
                    val -= std::round((val - prev) / quantum) * quantum;
                if (!have_ref) {
                    ref = prev = val;
                    have_ref = true;
                    any = true;
                    continue;
                }
                prev = val;
                entry.max_drift = std::max(entry.max_drift, std::abs(val - ref));
            }
        }
        entry.evaluated = any;
        rep.entries.push_back(std::move(entry));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Characteristics oracle

namespace {

struct MappedSeed {
    std::array<double, 3> x{};  // position at t_target (azimuths unwrapped)
    std::array<double, 3> u{};
    bool ok = false;
    bool tainted = false;  // belongs to an orientation-flipped cell
};

double wrap_delta(double d, bool periodic) {
    return periodic ? std::remainder(d, 2.0 * kPi) : d;
}

}  // namespace

EvolveResult evolve_characteristics(const FieldGrid& initial, double t_target, double tol,
                                    int workers, const std::vector<GridAxis>* target_axes_in) {
    const SurfaceChart& chart = initial.chart;
    const int nd = chart.dim();
    if (static_cast<int>(initial.axes.size()) != nd)
        throw std::invalid_argument("evolve_characteristics: grid dimension mismatch");

    const size_t NS = initial.size();
    std::vector<MappedSeed> seeds(NS);
    parallel_for(NS, workers, [&](size_t i) {
        if (!initial.mask[i]) return;
        PhaseState s0;
        s0.t = initial.t;
        double c[3];
        initial.coords_of(i, std::span<double>(c, nd));
        for (int d = 0; d < nd; ++d) {
            s0.x[d] = c[d];
            s0.u[d] = initial.values[i][d];
        }
        TrajectoryStatus status;
        const PhaseState end = advance_geodesic(chart, s0, t_target, tol, status);
        if (status != TrajectoryStatus::ok) return;
        seeds[i].x = end.x;
        seeds[i].u = end.u;
        seeds[i].ok = true;
    });

    // orientation of each forward-mapped seed cell vs its initial orientation
    size_t stride[3] = {1, 1, 1};
    for (int d = nd - 2; d >= 0; --d)
        stride[d] = stride[d + 1] * static_cast<size_t>(initial.axes[d + 1].count);
    auto node_coord = [&](size_t flat, double* c) {
        initial.coords_of(flat, std::span<double>(c, nd));
    };

    std::vector<std::uint8_t> seed_taint(NS, 0);
    int idx[3];
    for (size_t flat = 0; flat < NS; ++flat) {
        initial.unflatten(flat, std::span<int>(idx, nd));
        bool is_cell = true;
        for (int d = 0; d < nd; ++d) is_cell = is_cell && idx[d] + 1 < initial.axes[d].count;
        if (!is_cell) continue;

        bool all_ok = true;
        size_t corner[8];
        const int ncorner = 1 << nd;
        for (int cbits = 0; cbits < ncorner; ++cbits) {
            size_t f = flat;
            for (int d = 0; d < nd; ++d)
                if (cbits & (1 << d)) f += stride[d];
            corner[cbits] = f;
            all_ok = all_ok && seeds[f].ok;
        }
        if (!all_ok) continue;

        bool folded;
        if (nd == 2) {
            // quad (00) -> (01) -> (11) -> (10), shoelace sign vs initial
            const size_t q[4] = {corner[0], corner[2], corner[3], corner[1]};
            double a_init = 0.0, a_fin = 0.0;
            double ci[4][2], cf[4][2];
            for (int k = 0; k < 4; ++k) {
                double c[3];
                node_coord(q[k], c);
                ci[k][0] = c[0];
                ci[k][1] = c[1];
                cf[k][0] = seeds[q[k]].x[0];
                cf[k][1] = seeds[q[k]].x[1];
            }
            for (int k = 0; k < 4; ++k) {
                const int k2 = (k + 1) % 4;
                a_init += ci[k][0] * ci[k2][1] - ci[k2][0] * ci[k][1];
                a_fin += cf[k][0] * cf[k2][1] - cf[k2][0] * cf[k][1];
            }
            folded = a_init * a_fin <= 0.0;
        } else {
            double vi[3][3], vf[3][3], c0i[3];
            node_coord(corner[0], c0i);
            for (int d = 0; d < 3; ++d) {
                double cd[3];
                node_coord(corner[1 << d], cd);
                for (int e = 0; e < 3; ++e) {
                    vi[e][d] = cd[e] - c0i[e];
                    vf[e][d] = seeds[corner[1 << d]].x[e] - seeds[corner[0]].x[e];
                }
            }
            auto det3 = [](double M[3][3]) {
                return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                       M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                       M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
            };
            folded = det3(vi) * det3(vf) <= 0.0;
        }
        if (folded)
            for (int cbits = 0; cbits < ncorner; ++cbits) seed_taint[corner[cbits]] = 1;
    }

    // target grid and gather radius
    EvolveResult out;
    out.grid.chart = chart;
    out.grid.t = t_target;
    out.grid.stationary = initial.stationary;
    out.grid.axes = target_axes_in ? *target_axes_in : initial.axes;
    out.grid.provenance = "characteristics:" + initial.provenance;
    out.grid.allocate();

    double radius = 0.0;
    for (const GridAxis& a : out.grid.axes) radius = std::max(radius, a.step());
    radius *= 2.5;

    // hash bins over mapped positions, periodic axes wrapped into [0, 2pi)
    bool periodic[3] = {};
    for (int d = 0; d < nd; ++d) periodic[d] = chart.coord_range(d).periodic;
    double lo[3] = {}, hi[3] = {};
    bool have_any = false;
    for (size_t i = 0; i < NS; ++i) {
        if (!seeds[i].ok) continue;
        for (int d = 0; d < nd; ++d) {
            double x = seeds[i].x[d];
            if (periodic[d]) x = x - 2.0 * kPi * std::floor(x / (2.0 * kPi));
            if (!have_any) {
                lo[d] = hi[d] = x;
            } else {
                lo[d] = std::min(lo[d], x);
                hi[d] = std::max(hi[d], x);
            }
        }
        have_any = true;
    }
    int nbins[3] = {1, 1, 1};
    for (int d = 0; d < nd; ++d) {
        if (periodic[d]) {
            lo[d] = 0.0;
            hi[d] = 2.0 * kPi;
        }
        nbins[d] = std::max(1, static_cast<int>(std::ceil((hi[d] - lo[d]) / radius)));
    }
    auto bin_of = [&](const double* x) {
        size_t key = 0;
        for (int d = 0; d < nd; ++d) {
            double xd = x[d];
            if (periodic[d]) xd = xd - 2.0 * kPi * std::floor(xd / (2.0 * kPi));
            int b = static_cast<int>((xd - lo[d]) / radius);
            b = std::clamp(b, 0, nbins[d] - 1);
            key = key * static_cast<size_t>(nbins[d]) + static_cast<size_t>(b);
        }
        return key;
    };
    std::unordered_map<size_t, std::vector<size_t>> bins;
    for (size_t i = 0; i < NS; ++i)
        if (seeds[i].ok) bins[bin_of(seeds[i].x.data())].push_back(i);

    const int q_quad = 1 + nd + nd * (nd + 1) / 2;
    const int q_lin = 1 + nd;

    const size_t NT = out.grid.size();
    std::vector<std::uint8_t> multival(NT, 0);
    parallel_for(NT, workers, [&](size_t node) {
        double xt[3];
        out.grid.coords_of(node, std::span<double>(xt, nd));

        // base bin of the target, neighbours within +-1 per axis
        int base[3];
        for (int d = 0; d < nd; ++d) {
            double xd = xt[d];
            if (periodic[d]) xd = xd - 2.0 * kPi * std::floor(xd / (2.0 * kPi));
            base[d] = std::clamp(static_cast<int>((xd - lo[d]) / radius), 0, nbins[d] - 1);
        }
        std::vector<size_t> near;
        int off[3] = {};
        const int noff = nd == 2 ? 9 : 27;
        for (int k = 0; k < noff; ++k) {
            int kk = k;
            bool in_range = true;
            size_t key = 0;
            for (int d = 0; d < nd; ++d) {
                off[d] = kk % 3 - 1;
                kk /= 3;
                int b = base[d] + off[d];
                if (periodic[d])
                    b = (b % nbins[d] + nbins[d]) % nbins[d];
                else if (b < 0 || b >= nbins[d])
                    in_range = false;
                key = key * static_cast<size_t>(nbins[d]) + static_cast<size_t>(b);
            }
            if (!in_range) continue;
            const auto it = bins.find(key);
            if (it == bins.end()) continue;
            for (size_t s : it->second) {
                double d2 = 0.0;
                for (int d = 0; d < nd; ++d) {
                    const double dd = wrap_delta(seeds[s].x[d] - xt[d], periodic[d]);
                    d2 += dd * dd;
                }
                if (d2 <= radius * radius) near.push_back(s);
            }
        }
        std::sort(near.begin(), near.end());
        near.erase(std::unique(near.begin(), near.end()), near.end());

        if (near.empty()) return;  // uncovered, counted later
        for (size_t s : near)
            if (seed_taint[s]) {
                multival[node] = 1;
                return;
            }

        // data envelope for the fit sanity gate
        double u_lo[3], u_hi[3];
        for (int d = 0; d < nd; ++d) {
            u_lo[d] = std::numeric_limits<double>::infinity();
            u_hi[d] = -std::numeric_limits<double>::infinity();
        }
        for (size_t s : near)
            for (int d = 0; d < nd; ++d) {
                u_lo[d] = std::min(u_lo[d], seeds[s].u[d]);
                u_hi[d] = std::max(u_hi[d], seeds[s].u[d]);
            }

        // weighted least squares, quadratic basis in local coords scaled by radius
        auto fit = [&](int q) -> bool {
            std::vector<double> A(static_cast<size_t>(q) * q, 0.0);
            std::vector<double> rhs[3];
            for (int d = 0; d < nd; ++d) rhs[d].assign(q, 0.0);
            double basis[10];
            for (size_t s : near) {
                double dl[3] = {};
                double d2 = 0.0;
                for (int d = 0; d < nd; ++d) {
                    dl[d] = wrap_delta(seeds[s].x[d] - xt[d], periodic[d]) / radius;
                    d2 += dl[d] * dl[d];
                }
                const double dist = std::sqrt(d2);
                const double wq = 1.0 - dist;
                const double w = wq * wq * wq * wq * (4.0 * dist + 1.0);
                int bcount = 0;
                basis[bcount++] = 1.0;
                for (int d = 0; d < nd; ++d) basis[bcount++] = dl[d];
                if (q > q_lin) {
                    for (int d = 0; d < nd; ++d)
                        for (int e = d; e < nd; ++e) basis[bcount++] = dl[d] * dl[e];
                }
                for (int r = 0; r < q; ++r) {
                    for (int c = 0; c < q; ++c) A[r * q + c] += w * basis[r] * basis[c];
                    for (int d = 0; d < nd; ++d) rhs[d][r] += w * basis[r] * seeds[s].u[d];
                }
            }
            std::array<double, 3> result{};
            for (int d = 0; d < nd; ++d) {
                std::vector<double> Ac = A, bc = rhs[d];
                if (!gauss_solve(Ac, bc, q)) return false;
                result[d] = bc[0];  // basis value at the node itself
                if (!std::isfinite(result[d])) return false;
                // an interpolant must not leave the local data envelope by more
                // than the data spread; if it does the configuration is degenerate
                const double pad = u_hi[d] - u_lo[d] + 1e-12;
                if (result[d] < u_lo[d] - pad || result[d] > u_hi[d] + pad) return false;
            }
            out.grid.values[node] = result;
            return true;
        };

        bool done = false;
        if (near.size() >= static_cast<size_t>(2 * q_quad)) done = fit(q_quad);
        if (!done && near.size() >= static_cast<size_t>(q_lin + 2)) done = fit(q_lin);
        // dense but geometrically degenerate neighbourhoods fall back to the
        // weighted mean; genuinely thin ones stay uncovered
        if (!done && near.size() >= static_cast<size_t>(2 * q_quad)) done = fit(1);
        out.grid.mask[node] = done ? 1 : 0;
    });

    for (size_t node = 0; node < NT; ++node) {
        if (multival[node]) {
            out.grid.mask[node] = 0;
            out.multivalued_nodes.push_back(node);
            ++out.n_multivalued;
        } else if (!out.grid.mask[node]) {
            ++out.n_uncovered;
        }
    }
    return out;
}

}  // namespace hodoflow
