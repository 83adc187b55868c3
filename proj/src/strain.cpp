#include "flowtrack/strain.hpp"

#include <algorithm>
#include <cmath>

namespace flowtrack {
namespace {
constexpr double kPi = 3.14159265358979323846;
}

void LvAxes::validate() const {
  if (std::abs(norm(long_axis) - 1.0) > 1e-9)
    throw Error("long_axis must be a unit vector");
}

Mat3 lagrangian_strain(const Mat3& g) {
  for (const auto& row : g)
    for (double v : row)
      if (!std::isfinite(v)) throw Error("displacement gradient not finite");
  Mat3 e{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double quad = 0.0;
      for (int k = 0; k < 3; ++k) quad += g[k][a] * g[k][b];
      e[a][b] = 0.5 * (g[a][b] + g[b][a] + quad);
    }
  return e;
}

LvDirections lv_directions(const LvAxes& axes, const Point3& position) {
  axes.validate();
  const Point3 v = position - axes.apex_base_origin;
  const Point3 off_axis = v - dot(v, axes.long_axis) * axes.long_axis;
  const double r = norm(off_axis);
  if (r < 1e-9) throw OnAxis("position lies on the long axis");
  LvDirections d;
  d.longitudinal = axes.long_axis;
  d.radial = (1.0 / r) * off_axis;
  d.circumferential = cross(d.longitudinal, d.radial);
  return d;
}

std::vector<StrainSample> strain_field(const RbfModel& model,
                                       const LvAxes& axes,
                                       const std::vector<Point3>& queries,
                                       std::vector<Violation>* skipped) {
  axes.validate();
  std::vector<StrainSample> out;
  out.reserve(queries.size());
  for (const Point3& x : queries) {
    LvDirections dirs;
    try {
      dirs = lv_directions(axes, x);
    } catch (const OnAxis& err) {
      if (skipped) skipped->push_back({err.what(), std::nullopt});
      continue;
    }
    StrainSample s;
    s.position = x;
    s.strain = lagrangian_strain(evaluate_jacobian(model, x));
    auto project = [&](const Point3& d) {
      const double dv[3] = {d.x, d.y, d.z};
      double val = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) val += dv[a] * s.strain[a][b] * dv[b];
      return val;
    };
    s.radial = project(dirs.radial);
    s.circumferential = project(dirs.circumferential);
    s.longitudinal = project(dirs.longitudinal);
    out.push_back(s);
  }
  return out;
}

int lv_sector(const LvAxes& axes, const Point3& anterior,
              const Point3& position, double z_lo, double z_hi) {
  axes.validate();
  if (!(z_hi > z_lo)) throw Error("lv_sector needs z_hi > z_lo");
  const Point3 ant_off =
      anterior - dot(anterior, axes.long_axis) * axes.long_axis;
  const double ant_n = norm(ant_off);
  if (ant_n < 1e-9) throw Error("anterior direction parallel to long axis");
  const Point3 u = (1.0 / ant_n) * ant_off;
  const Point3 v = cross(axes.long_axis, u);

  const Point3 rel = position - axes.apex_base_origin;
  const double s = dot(rel, axes.long_axis);
  double frac = (s - z_lo) / (z_hi - z_lo);
  int ring = std::clamp(static_cast<int>(frac * 3.0), 0, 2);

  const Point3 off = rel - s * axes.long_axis;
  double theta = std::atan2(dot(off, v), dot(off, u));
  if (theta < 0.0) theta += 2.0 * kPi;

  // ring 2 (highest axial coordinate) is basal.
  const int sectors = ring == 0 ? 4 : 6;
  int wedge = std::min(static_cast<int>(theta / (2.0 * kPi) * sectors),
                       sectors - 1);
  if (ring == 2) return wedge;            // basal: 0-5
  if (ring == 1) return 6 + wedge;        // mid: 6-11
  return 12 + wedge;                      // apical: 12-15
}

}  // namespace flowtrack
