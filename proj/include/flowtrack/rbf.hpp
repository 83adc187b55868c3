#pragma once

#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

// Dense displacement field as a sum of compactly supported radial basis
// functions: U(x) = sum_k c_k phi(|x - p_k| / R) with the Wendland C2 kernel
// phi(q) = (1-q)^4 (4q+1) on [0,1], zero beyond. C2 smoothness gives
// continuous analytic Jacobians, which strain needs.
struct RbfModel {
  std::vector<Point3> centers;
  std::vector<Point3> coefficients;
  double support_radius = 1.0;
};

struct RegularizationWeights {
  double lambda_sparse = 1e-3;  // L1 on the coefficient vectors
  double lambda_div = 1e-2;     // squared divergence at collocation points
  double lambda_grad = 1e-3;    // squared Frobenius norm of the Jacobian

  friend bool operator==(const RegularizationWeights&,
                         const RegularizationWeights&) = default;
};

struct RbfSample {
  Point3 position;
  Point3 displacement;
};

// Wendland C2 kernel and its derivative over q = r / R.
double wendland_c2(double q);
double wendland_c2_deriv(double q);

// Least-squares fit with L1 sparsity, divergence, and gradient penalties:
//   J = sum_i |U(x_i) - d_i|^2 + ls * sum_k |c_k|_1
//     + ld * sum_g (div U(x_g))^2 + lg * sum_g |grad U(x_g)|_F^2
// over the collocation grid points x_g. Solved by a normal-equations start
// plus coordinate descent with soft thresholding; stops when the objective
// decrease falls below 1e-8 * (1 + |J|). Throws DegenerateSystem when every
// basis function vanishes at every sample.
RbfModel fit_rbf(const std::vector<RbfSample>& samples,
                 const std::vector<Point3>& centers, double support_radius,
                 const RegularizationWeights& reg,
                 const std::vector<Point3>& collocation_grid);

// Convenience fit: centers are the sample positions, support radius and
// collocation grid from the defaults below.
RbfModel fit_rbf(const std::vector<RbfSample>& samples,
                 const RegularizationWeights& reg);

Point3 evaluate_field(const RbfModel& model, const Point3& query);
// d U_row / d x_col; analytic, matches central differences of the field.
Mat3 evaluate_jacobian(const RbfModel& model, const Point3& query);
double evaluate_divergence(const RbfModel& model, const Point3& query);

// Twice the median nearest-neighbor spacing among the centers (1.0 for a
// single center).
double default_support_radius(const std::vector<Point3>& centers);

// Uniform grid over the bounding box of the positions, at most max_points
// points.
std::vector<Point3> default_collocation_grid(
    const std::vector<Point3>& positions, int max_points = 10000);

}  // namespace flowtrack
