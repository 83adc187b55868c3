#include "flowtrack/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowtrack {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Deterministic right-handed orthonormal basis {u, v} perpendicular to axis
// (u x v = axis). For the canonical z axis this yields u = x, v = y, so
// theta = 0 points along +x.
void axis_basis(const Point3& axis, Point3& u, Point3& v) {
  Point3 helper = std::abs(axis.x) <= std::abs(axis.y) &&
                          std::abs(axis.x) <= std::abs(axis.z)
                      ? Point3{1.0, 0.0, 0.0}
                  : std::abs(axis.y) <= std::abs(axis.z)
                      ? Point3{0.0, 1.0, 0.0}
                      : Point3{0.0, 0.0, 1.0};
  v = cross(axis, helper);
  double n = norm(v);
  v = (1.0 / n) * v;
  u = cross(v, axis);
}

double point_to_ray_distance(const Point3& p, const Point3& anchor,
                             const Point3& dir) {
  Point3 w = p - anchor;
  double s = dot(w, dir);
  if (s <= 0.0) return norm(w);
  return norm(w - s * dir);
}

}  // namespace

void CylindricalSamplingSpec::validate() const {
  if (z_fr < 2) throw Error("z_fr must be >= 2");
  if (theta_fr < 3) throw Error("theta_fr must be >= 3");
  if (std::abs(norm(long_axis) - 1.0) > 1e-9)
    throw Error("long_axis must be a unit vector");
}

std::vector<Point3> sample_surface(const std::vector<Point3>& surface,
                                   const CylindricalSamplingSpec& spec) {
  spec.validate();
  if (surface.empty()) throw EmptySlice("surface point set is empty");

  Point3 u, v;
  axis_basis(spec.long_axis, u, v);

  std::vector<double> axial(surface.size());
  double a_min = std::numeric_limits<double>::infinity();
  double a_max = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < surface.size(); ++i) {
    axial[i] = dot(surface[i] - spec.axis_origin, spec.long_axis);
    a_min = std::min(a_min, axial[i]);
    a_max = std::max(a_max, axial[i]);
  }

  const double h = (a_max - a_min) / spec.z_fr;
  std::vector<Point3> out;
  out.reserve(static_cast<size_t>(spec.z_fr) * spec.theta_fr);

  std::vector<size_t> band;
  for (int k = 0; k < spec.z_fr; ++k) {
    const double lo = a_min + k * h;
    const double hi = a_min + (k + 1) * h;
    band.clear();
    for (size_t i = 0; i < surface.size(); ++i) {
      bool in = axial[i] >= lo &&
                (axial[i] < hi || (k == spec.z_fr - 1 && axial[i] <= hi));
      if (in) band.push_back(i);
    }
    if (band.empty())
      throw EmptySlice("no surface points in axial band " + std::to_string(k));

    const double mid = 0.5 * (lo + hi);
    Point3 anchor = spec.axis_origin + mid * spec.long_axis;
    for (int m = 0; m < spec.theta_fr; ++m) {
      const double theta = 2.0 * kPi * m / spec.theta_fr;
      Point3 dir = std::cos(theta) * u + std::sin(theta) * v;
      size_t best = band[0];
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t i : band) {
        double d = point_to_ray_distance(surface[i], anchor, dir);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      out.push_back(surface[best]);
    }
  }
  return out;
}

std::vector<Point3> sample_shell(const RadialShell& radius, double z_lo,
                                 double z_hi,
                                 const CylindricalSamplingSpec& spec) {
  spec.validate();
  if (!(z_hi > z_lo)) throw Error("sample_shell: z range is empty");

  Point3 u, v;
  axis_basis(spec.long_axis, u, v);

  std::vector<Point3> out;
  out.reserve(static_cast<size_t>(spec.z_fr) * spec.theta_fr);
  const double h = (z_hi - z_lo) / spec.z_fr;
  for (int k = 0; k < spec.z_fr; ++k) {
    const double z = z_lo + (k + 0.5) * h;
    for (int m = 0; m < spec.theta_fr; ++m) {
      const double theta = 2.0 * kPi * m / spec.theta_fr;
      const double r = radius(theta, z);
      if (!std::isfinite(r) || r <= 0.0)
        throw EmptySlice("shell undefined in axial band " + std::to_string(k));
      out.push_back(spec.axis_origin + z * spec.long_axis +
                    (r * std::cos(theta)) * u + (r * std::sin(theta)) * v);
    }
  }
  return out;
}

CylindricalSamplingSpec in_vivo_spec(int z_slices_available) {
  if (z_slices_available < 1) throw Error("z_slices_available must be >= 1");
  CylindricalSamplingSpec spec;
  spec.z_fr = std::max(25, z_slices_available);
  spec.theta_fr = static_cast<int>(std::llround(spec.z_fr / 1.3));
  return spec;
}

}  // namespace flowtrack
