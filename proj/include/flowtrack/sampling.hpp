#pragma once

#include <functional>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

// Uniform cylindrical sampling grid: z_fr axial bands along long_axis,
// theta_fr rays per band, uniform in angle.
struct CylindricalSamplingSpec {
  int z_fr = 40;
  int theta_fr = 30;
  Point3 long_axis{0.0, 0.0, 1.0};
  Point3 axis_origin{0.0, 0.0, 0.0};

  void validate() const;
  friend bool operator==(const CylindricalSamplingSpec&,
                         const CylindricalSamplingSpec&) = default;
};

// Sample a surface given as a point cloud. The axial extent of the cloud is
// split into z_fr equal bands; within each band the point nearest to each of
// the theta_fr ideal rays (anchored at the band's mid axial coordinate) is
// picked, ties broken by smaller index. Returns exactly z_fr * theta_fr
// points. Throws EmptySlice when a band contains no surface points.
std::vector<Point3> sample_surface(const std::vector<Point3>& surface,
                                   const CylindricalSamplingSpec& spec);

// Sample an implicit shell given as a radial function r(theta, z) about
// long_axis, over axial range [z_lo, z_hi]. Band centers are sampled exactly.
// radius must return a finite value > 0; a non-finite or non-positive radius
// marks the band as missing the surface (EmptySlice).
using RadialShell = std::function<double(double theta, double z)>;
std::vector<Point3> sample_shell(const RadialShell& radius, double z_lo,
                                 double z_hi,
                                 const CylindricalSamplingSpec& spec);

// Sampling densities used for clinical sequences where the axial coverage
// varies: z_fr = max(25, slices available), theta_fr = round(z_fr / 1.3).
CylindricalSamplingSpec in_vivo_spec(int z_slices_available);

}  // namespace flowtrack
