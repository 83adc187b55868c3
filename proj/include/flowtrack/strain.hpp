#pragma once

#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/rbf.hpp"

namespace flowtrack {

// Left-ventricle coordinate frame: the long axis (unit vector) through a
// reference origin on that axis.
struct LvAxes {
  Point3 long_axis{0.0, 0.0, 1.0};
  Point3 apex_base_origin{0.0, 0.0, 0.0};
  void validate() const;
  friend bool operator==(const LvAxes&, const LvAxes&) = default;
};

struct LvDirections {
  Point3 radial, circumferential, longitudinal;
};

struct StrainSample {
  Point3 position;
  Mat3 strain;  // Green-Lagrange tensor, symmetric
  double radial = 0.0, circumferential = 0.0, longitudinal = 0.0;
};

// Green-Lagrange tensor from a displacement Jacobian:
// E = 1/2 (grad u + grad u' + grad u' grad u). Zero for rigid translations,
// exact for affine deformations.
Mat3 lagrangian_strain(const Mat3& grad_u);

// Orthonormal right-handed frame at a position: longitudinal = long axis,
// radial = normalized off-axis component of the position, circumferential =
// longitudinal x radial. Throws OnAxis within 1e-9 mm of the axis.
LvDirections lv_directions(const LvAxes& axes, const Point3& position);

// Strain tensor and directional projections d' E d at each query, using the
// field's analytic Jacobians. Queries on the axis are skipped; when `skipped`
// is given they are reported there.
std::vector<StrainSample> strain_field(const RbfModel& model,
                                       const LvAxes& axes,
                                       const std::vector<Point3>& queries,
                                       std::vector<Violation>* skipped =
                                           nullptr);

// Sector id for curve export: longitudinal thirds x angular sectors with 6
// basal, 6 mid, and 4 apical sectors (ids 0-5, 6-11, 12-15). The third with
// the highest axial coordinate is basal; angles are measured from the
// anterior direction (projected off-axis). z_lo/z_hi bound the axial extent.
int lv_sector(const LvAxes& axes, const Point3& anterior,
              const Point3& position, double z_lo, double z_hi);

}  // namespace flowtrack
