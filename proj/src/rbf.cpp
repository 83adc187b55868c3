#include "flowtrack/rbf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace flowtrack {
namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct LocalGradient {
  int k;
  Point3 g;  // grad of phi_k at the grid point
};

}  // namespace

double wendland_c2(double q) {
  if (q >= 1.0) return 0.0;
  double u = 1.0 - q;
  double u2 = u * u;
  return u2 * u2 * (4.0 * q + 1.0);
}

double wendland_c2_deriv(double q) {
  if (q >= 1.0) return 0.0;
  double u = 1.0 - q;
  return -20.0 * q * u * u * u;
}

Point3 evaluate_field(const RbfModel& model, const Point3& query) {
  const double R = model.support_radius;
  Point3 u{0.0, 0.0, 0.0};
  for (size_t k = 0; k < model.centers.size(); ++k) {
    double r2 = squared_norm(query - model.centers[k]);
    if (r2 >= R * R) continue;
    double phi = wendland_c2(std::sqrt(r2) / R);
    u = u + phi * model.coefficients[k];
  }
  return u;
}

Mat3 evaluate_jacobian(const RbfModel& model, const Point3& query) {
  const double R = model.support_radius;
  Mat3 jac{};
  for (size_t k = 0; k < model.centers.size(); ++k) {
    Point3 dx = query - model.centers[k];
    double r2 = squared_norm(dx);
    if (r2 >= R * R) continue;
    double q = std::sqrt(r2) / R;
    // d phi / d x_b = phi'(q) (x_b - p_b) / (R r) = [phi'(q)/q] (x_b-p_b)/R^2;
    // phi'(q)/q = -20 (1-q)^3 stays finite at the center.
    double u = 1.0 - q;
    double factor = -20.0 * u * u * u / (R * R);
    const Point3& c = model.coefficients[k];
    const double row[3] = {c.x, c.y, c.z};
    const double col[3] = {factor * dx.x, factor * dx.y, factor * dx.z};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) jac[a][b] += row[a] * col[b];
  }
  return jac;
}

double evaluate_divergence(const RbfModel& model, const Point3& query) {
  Mat3 j = evaluate_jacobian(model, query);
  return j[0][0] + j[1][1] + j[2][2];
}

double default_support_radius(const std::vector<Point3>& centers) {
  const size_t n = centers.size();
  if (n < 2) return 1.0;
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      nn[i] = std::min(nn[i], squared_norm(centers[j] - centers[i]));
    }
  for (double& d : nn) d = std::sqrt(d);
  std::sort(nn.begin(), nn.end());
  double median = n % 2 == 1 ? nn[n / 2] : 0.5 * (nn[n / 2 - 1] + nn[n / 2]);
  double r = 2.0 * median;
  return r > 0.0 ? r : 1.0;
}

std::vector<Point3> default_collocation_grid(
    const std::vector<Point3>& positions, int max_points) {
  if (positions.empty()) throw Error("collocation grid needs positions");
  Point3 lo = positions[0], hi = positions[0];
  for (const Point3& p : positions) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const double ext[3] = {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
  int n[3];
  int base = std::max(1, static_cast<int>(std::cbrt(
                             static_cast<double>(max_points))));
  for (int a = 0; a < 3; ++a) n[a] = ext[a] > 1e-12 ? base : 1;

  std::vector<Point3> grid;
  grid.reserve(static_cast<size_t>(n[0]) * n[1] * n[2]);
  const double lov[3] = {lo.x, lo.y, lo.z};
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const int idx[3] = {i, j, k};
        double c[3];
        for (int a = 0; a < 3; ++a)
          c[a] = lov[a] + (idx[a] + 0.5) * ext[a] / n[a];
        grid.push_back({c[0], c[1], c[2]});
      }
  return grid;
}

RbfModel fit_rbf(const std::vector<RbfSample>& samples,
                 const std::vector<Point3>& centers, double support_radius,
                 const RegularizationWeights& reg,
                 const std::vector<Point3>& collocation_grid) {
  if (samples.empty()) throw Error("fit_rbf needs at least one sample");
  if (centers.empty()) throw Error("fit_rbf needs at least one center");
  if (!(support_radius > 0.0)) throw Error("support_radius must be > 0");
  if (reg.lambda_sparse < 0.0 || reg.lambda_div < 0.0 || reg.lambda_grad < 0.0)
    throw Error("regularization weights must be >= 0");

  const int N = static_cast<int>(samples.size());
  const int K = static_cast<int>(centers.size());
  const double R = support_radius;

  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(N, K);
  bool any_support = false;
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < K; ++k) {
      double r2 = squared_norm(samples[i].position - centers[k]);
      if (r2 >= R * R) continue;
      phi(i, k) = wendland_c2(std::sqrt(r2) / R);
      if (phi(i, k) != 0.0) any_support = true;
    }
  if (!any_support)
    throw DegenerateSystem(
        "every basis function vanishes at every sample; widen the support");

  const int dim = 3 * K;
  Eigen::MatrixXd a_mat = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd grad_pen = Eigen::MatrixXd::Zero(K, K);

  if ((reg.lambda_div > 0.0 || reg.lambda_grad > 0.0) &&
      !collocation_grid.empty()) {
    std::vector<LocalGradient> local;
    for (const Point3& g : collocation_grid) {
      local.clear();
      for (int k = 0; k < K; ++k) {
        Point3 dx = g - centers[k];
        double r2 = squared_norm(dx);
        if (r2 >= R * R) continue;
        double q = std::sqrt(r2) / R;
        double u = 1.0 - q;
        double factor = -20.0 * u * u * u / (R * R);
        local.push_back({k, factor * dx});
      }
      for (const LocalGradient& a : local)
        for (const LocalGradient& b : local) {
          if (reg.lambda_grad > 0.0)
            grad_pen(a.k, b.k) += dot(a.g, b.g);
          if (reg.lambda_div > 0.0) {
            const double ga[3] = {a.g.x, a.g.y, a.g.z};
            const double gb[3] = {b.g.x, b.g.y, b.g.z};
            for (int r = 0; r < 3; ++r)
              for (int c = 0; c < 3; ++c)
                a_mat(r * K + a.k, c * K + b.k) +=
                    reg.lambda_div * ga[r] * gb[c];
          }
        }
    }
  }

  Eigen::MatrixXd m_mat = phi.transpose() * phi;
  if (reg.lambda_grad > 0.0) m_mat += reg.lambda_grad * grad_pen;
  for (int a = 0; a < 3; ++a)
    a_mat.block(a * K, a * K, K, K) += m_mat;

  Eigen::VectorXd b_vec(dim);
  Eigen::VectorXd d_axis(N);
  double data_const = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int i = 0; i < N; ++i) {
      const Point3& d = samples[i].displacement;
      d_axis(i) = a == 0 ? d.x : a == 1 ? d.y : d.z;
    }
    b_vec.segment(a * K, K) = phi.transpose() * d_axis;
    data_const += d_axis.squaredNorm();
  }

  // Tiny ridge keeps the normal matrix factorizable when centers fall
  // outside every support; it perturbs interpolation far below tolerance.
  const double ridge = 1e-12 * (1.0 + a_mat.trace() / dim);
  a_mat.diagonal().array() += ridge;

  Eigen::LDLT<Eigen::MatrixXd> factor(a_mat);
  Eigen::VectorXd c = factor.solve(b_vec);
  if (!c.allFinite()) c = Eigen::VectorXd::Zero(dim);

  // Sign-fixing refinement: at a KKT point with sign pattern s the optimum
  // solves A c = b - (lambda/2) s, so iterate that linear solve until the
  // pattern stabilizes. Coordinate descent below then starts at (or very
  // near) the optimum instead of crawling across a stiff coupled system.
  if (reg.lambda_sparse > 0.0 && c.allFinite()) {
    auto signs = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd s(dim);
      for (int j = 0; j < dim; ++j)
        s(j) = v(j) > 0.0 ? 1.0 : v(j) < 0.0 ? -1.0 : 0.0;
      return s;
    };
    Eigen::VectorXd s = signs(c);
    for (int iter = 0; iter < 16; ++iter) {
      Eigen::VectorXd next =
          factor.solve(b_vec - (reg.lambda_sparse / 2.0) * s);
      if (!next.allFinite()) break;
      Eigen::VectorXd s_next = signs(next);
      c = next;
      if (s_next == s) break;
      s = s_next;
    }
  }

  // Coordinate descent with soft thresholding for the L1 term; q tracks A c
  // incrementally and is refreshed periodically so float drift cannot mask
  // the objective decrease. A stationarity test (no meaningful coordinate
  // update over a full sweep) also ends the loop, since near the optimum the
  // drifted objective may fluctuate above the decrease tolerance.
  Eigen::VectorXd q = a_mat * c;
  auto objective = [&]() {
    return c.dot(q) - 2.0 * b_vec.dot(c) + data_const +
           reg.lambda_sparse * c.lpNorm<1>();
  };
  double j_prev = objective();
  const int max_sweeps = 5000;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_step = 0.0;
    for (int jv = 0; jv < dim; ++jv) {
      double ajj = a_mat(jv, jv);
      double r = b_vec(jv) - (q(jv) - ajj * c(jv));
      double next = soft_threshold(r, reg.lambda_sparse / 2.0) / ajj;
      double delta = next - c(jv);
      if (delta != 0.0) {
        q += delta * a_mat.col(jv);
        c(jv) = next;
        max_step = std::max(max_step, std::abs(delta));
      }
    }
    if (max_step <= 1e-14 * (1.0 + c.lpNorm<Eigen::Infinity>())) break;
    if ((sweep + 1) % 32 == 0) q = a_mat * c;
    double j_now = objective();
    if (std::abs(j_prev - j_now) <= 1e-8 * (1.0 + std::abs(j_now))) break;
    j_prev = j_now;
  }
  if (sweep == max_sweeps)
    throw SolverFailure(
        "RBF coordinate descent did not converge; the system is likely "
        "ill-conditioned (very wide support radius relative to the center "
        "spacing). Reduce the support radius or lambda_sparse.");

  RbfModel model;
  model.centers = centers;
  model.support_radius = R;
  model.coefficients.resize(K);
  for (int k = 0; k < K; ++k)
    model.coefficients[k] = {c(k), c(K + k), c(2 * K + k)};
  return model;
}

RbfModel fit_rbf(const std::vector<RbfSample>& samples,
                 const RegularizationWeights& reg) {
  std::vector<Point3> centers;
  centers.reserve(samples.size());
  for (const RbfSample& s : samples) centers.push_back(s.position);
  std::vector<Point3> grid = default_collocation_grid(centers);
  return fit_rbf(samples, centers, default_support_radius(centers), reg, grid);
}

}  // namespace flowtrack
