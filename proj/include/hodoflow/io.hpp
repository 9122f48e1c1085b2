#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "hodoflow/families.hpp"
#include "hodoflow/geodesics.hpp"
#include "hodoflow/grid.hpp"
#include "hodoflow/hodograph.hpp"
#include "hodoflow/oracle.hpp"

namespace hodoflow::io {

using json = nlohmann::ordered_json;

// Round-trip exact, locale-independent float formatting (%.17g).
std::string fmt(double x);

// t, coords..., velocities..., one column per integral (IntegralSet order;
// undefined entries print as nan). Velocities are named u,v (2D) or u1,u2,u3.
void write_trajectory_csv(std::ostream& os, const SurfaceChart& chart, const Trajectory& traj);

// coords..., velocity components..., valid
void write_field_csv(std::ostream& os, const FieldGrid& grid);
// Reads the schema back onto the given chart/axes (row order and node
// coordinates are validated); the writer/reader pair round-trips exactly.
FieldGrid read_field_csv(std::istream& is, const SurfaceChart& chart,
                         const std::vector<GridAxis>& axes);
json field_to_json(const FieldGrid& grid);

// segment, coords..., det_m (2D polylines; 3D crossings carry segment -1)
void write_blowup_csv(std::ostream& os, const BlowupLocus& locus,
                      const std::vector<std::string>& coord_names);

json residual_to_json(const ResidualReport& rep);

// {"chart": "cone", "alpha": 0.25} / {"chart": "sphere2", "R": 1.0} / ...
SurfaceChart chart_from_json(const json& j);
json chart_to_json(const SurfaceChart& chart);

// Family parameters, e.g. {"a1": 1.0, "b1": 0.5, "sheet": -1}.
SolutionFamily family_from_json(FamilyId id, const SurfaceChart& chart, const json& params);

// One-variable parameter functions:
// {"type": "linear", "a": 1.0, "b": 0.5} | constant | quadratic |
// power_product {coef,d,m} | log_product {coef} | tabulated {x:[...], y:[...]}
ScalarFn scalar_fn_from_json(const json& j);

// Hodograph system configuration. `name` is one of cone, cone_alt, s2_timedep,
// s2_stationary, s3_stationary; two/three-argument F's accept
// {"type": "constant", "value": v} or {"type": "linear", "c0":, "c1":, "c2":[, "c3":]}.
HodographSystem system_from_json(const std::string& name, const SurfaceChart& chart,
                                 const json& params);

bool is_system_name(const std::string& name);

}  // namespace hodoflow::io
