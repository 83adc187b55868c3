#include "flowtrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "flowtrack/sampling.hpp"
#include "flowtrack/solver.hpp"

namespace flowtrack {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Periodic contraction + twist about the z axis through `center`.
struct ShellMotion {
  Point3 center;
  double amplitude;  // A
  double twist;      // B
  int frames;        // T

  double rho(double t) const {
    double s = std::sin(kPi * t / frames);
    return 1.0 - amplitude * s * s;
  }
  double theta(double t) const {
    return twist * std::sin(2.0 * kPi * t / frames);
  }
  Point3 apply(const Point3& base, double t) const {
    Point3 v = base - center;
    double r = rho(t), th = theta(t);
    double c = std::cos(th), s = std::sin(th);
    return {center.x + r * (c * v.x - s * v.y),
            center.y + r * (s * v.x + c * v.y), center.z + v.z};
  }
  Point3 invert(const Point3& x, double t) const {
    Point3 v = x - center;
    double r = rho(t), th = -theta(t);
    double c = std::cos(th), s = std::sin(th);
    return {center.x + (c * v.x - s * v.y) / r,
            center.y + (s * v.x + c * v.y) / r, center.z + v.z};
  }
};

// Band-limited random texture: a sum of random-phase cosines.
struct CosineTexture {
  struct Wave {
    Point3 k;
    double phase;
    double amplitude;
  };
  std::vector<Wave> waves;

  static CosineTexture make(std::mt19937& rng, int count) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> amp(0.5, 1.0);
    std::uniform_real_distribution<double> wavelength(8.0, 30.0);
    CosineTexture tex;
    tex.waves.reserve(count);
    for (int m = 0; m < count; ++m) {
      // Uniform direction on the sphere.
      double z = 2.0 * unit(rng) - 1.0;
      double a = 2.0 * kPi * unit(rng);
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Point3 dir{r * std::cos(a), r * std::sin(a), z};
      double k = 2.0 * kPi / wavelength(rng);
      tex.waves.push_back({k * dir, phase(rng), amp(rng)});
    }
    return tex;
  }
  double operator()(const Point3& x) const {
    double v = 0.0;
    for (const Wave& w : waves)
      v += w.amplitude * std::cos(dot(w.k, x) + w.phase);
    return v;
  }
};

TrackingErrorReport summarize(const std::vector<std::vector<double>>& by_frame,
                              int es_frame) {
  const int T = static_cast<int>(by_frame.size());
  std::vector<double> overall;
  for (int t = 2; t <= T; ++t)
    overall.insert(overall.end(), by_frame[t - 1].begin(),
                   by_frame[t - 1].end());
  auto stats = [](std::vector<double> v, double* med, double* iqr) {
    if (v.empty()) {
      *med = 0.0;
      *iqr = 0.0;
      return;
    }
    *med = quantile(v, 0.5);
    *iqr = quantile(v, 0.75) - quantile(v, 0.25);
  };
  TrackingErrorReport r;
  stats(overall, &r.overall_median, &r.overall_iqr);
  stats(by_frame[es_frame - 1], &r.es_median, &r.es_iqr);
  stats(by_frame[T - 1], &r.ed_median, &r.ed_iqr);
  return r;
}

// Ground-truth trajectory whose start coincides with the walk's first point.
int match_start(const Point3& start, const GroundTruth& truth) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < truth.trajectory_count(); ++j) {
    double d = squared_norm(truth.positions[j][0] - start);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (best < 0 || std::sqrt(best_d) > 1e-6)
    throw UnmatchedTrajectory(
        "no ground-truth start within 1e-6 of a tracked frame-1 point");
  return best;
}

}  // namespace

std::pair<FrameSequence, GroundTruth> gen_toy_1d(const Toy1dSpec& spec) {
  if (spec.points_per_frame < 2) throw Error("points_per_frame must be >= 2");
  if (spec.frames < 3) throw Error("frames must be >= 3");
  if (spec.noise < 0.0) throw Error("noise must be >= 0");

  const int P = spec.points_per_frame;
  const int T = spec.frames;
  GroundTruth truth;
  truth.positions.assign(P, std::vector<Point3>(T));
  truth.es_frame = std::max(2, T / 2);
  for (int j = 0; j < P; ++j) {
    double base = 2.0 * j;
    for (int t = 1; t <= T; ++t) {
      double x = base;
      if (spec.crossing) {
        // The two lowest tracks drift toward each other and swap order.
        double step = 3.0 / (T - 1) * (t - 1);
        if (j == 0) x = base + step;
        if (j == 1) x = base - step;
      }
      truth.positions[j][t - 1] = {x, 0.0, 0.0};
    }
  }

  std::mt19937 rng(spec.seed);
  std::normal_distribution<double> jitter(0.0, spec.noise);
  FrameSequence seq;
  seq.periodic = false;
  seq.frames.assign(T, {});
  for (int t = 1; t <= T; ++t) {
    seq.frames[t - 1].reserve(P);
    for (int j = 0; j < P; ++j) {
      Point3 p = truth.positions[j][t - 1];
      if (t > 1 && spec.noise > 0.0) p.x += jitter(rng);
      seq.frames[t - 1].push_back(p);
    }
  }
  return {std::move(seq), std::move(truth)};
}

ShellPhantom gen_cyclic_shells(const ShellPhantomSpec& spec) {
  if (spec.frames < 4) throw Error("frames must be >= 4");
  if (spec.contraction_amplitude < 0.0 || spec.contraction_amplitude >= 0.5)
    throw Error("contraction_amplitude must be in [0, 0.5)");
  if (spec.twist_amplitude < 0.0 || spec.twist_amplitude >= 0.5)
    throw Error("twist_amplitude must be in [0, 0.5)");
  if (spec.noise_sigma < 0.0) throw Error("noise_sigma must be >= 0");

  CylindricalSamplingSpec sampling;
  sampling.z_fr = spec.z_fr;
  sampling.theta_fr = spec.theta_fr;
  sampling.long_axis = {0.0, 0.0, 1.0};
  sampling.axis_origin = spec.center;

  // Ellipsoidal shells: cross-section radius of an ellipsoid with semi-axes
  // (a, b, c), truncated away from the poles.
  auto shell = [](double a, double b, double c) {
    return [=](double theta, double z) {
      double f = 1.0 - (z / c) * (z / c);
      if (f <= 0.0) return -1.0;
      double as = a * std::sqrt(f), bs = b * std::sqrt(f);
      double ct = std::cos(theta), st = std::sin(theta);
      return as * bs / std::sqrt(bs * bs * ct * ct + as * as * st * st);
    };
  };
  std::vector<Point3> base =
      sample_shell(shell(12.0, 10.0, 25.0), -15.0, 15.0, sampling);
  std::vector<Point3> outer =
      sample_shell(shell(18.0, 15.0, 30.0), -18.0, 18.0, sampling);
  base.insert(base.end(), outer.begin(), outer.end());

  const int T = spec.frames;
  ShellMotion motion{spec.center, spec.contraction_amplitude,
                     spec.twist_amplitude, T};

  ShellPhantom out;
  const int P = static_cast<int>(base.size());
  out.truth.positions.assign(P, std::vector<Point3>(T));
  for (int j = 0; j < P; ++j)
    for (int t = 1; t <= T; ++t)
      out.truth.positions[j][t - 1] = motion.apply(base[j], t);

  // End systole: frame of minimum mean off-axis radius.
  {
    double best = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= T; ++t) {
      double mean = 0.0;
      for (int j = 0; j < P; ++j) {
        Point3 v = out.truth.positions[j][t - 1] - spec.center;
        mean += std::hypot(v.x, v.y);
      }
      mean /= P;
      if (mean < best) {
        best = mean;
        out.truth.es_frame = t;
      }
    }
  }

  std::mt19937 rng(spec.seed);
  std::normal_distribution<double> jitter(0.0, spec.noise_sigma);
  out.sequence.periodic = true;
  out.sequence.frames.assign(T, {});
  for (int t = 1; t <= T; ++t) {
    out.sequence.frames[t - 1].reserve(P);
    for (int j = 0; j < P; ++j) {
      Point3 p = out.truth.positions[j][t - 1];
      if (t > 1 && spec.noise_sigma > 0.0) {
        p.x += jitter(rng);
        p.y += jitter(rng);
        p.z += jitter(rng);
      }
      out.sequence.frames[t - 1].push_back(p);
    }
  }

  if (spec.volumes) {
    CosineTexture texture = CosineTexture::make(rng, 50);
    const int nv = 80;
    const double spacing = 1.0;
    out.volumes.reserve(T);
    for (int t = 1; t <= T; ++t) {
      VolumeImage img;
      img.nx = img.ny = img.nz = nv;
      img.sx = img.sy = img.sz = spacing;
      img.voxels.resize(static_cast<size_t>(nv) * nv * nv);
      size_t idx = 0;
      for (int k = 0; k < nv; ++k)
        for (int j = 0; j < nv; ++j)
          for (int i = 0; i < nv; ++i) {
            Point3 x{i * spacing, j * spacing, k * spacing};
            img.voxels[idx++] =
                static_cast<float>(texture(motion.invert(x, t)));
          }
      out.volumes.push_back(std::move(img));
    }
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile p must be in [0,1]");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  double h = (n - 1) * p;
  size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= n) return values[n - 1];
  double frac = h - lo;
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

TrackingErrorReport tracking_error(const std::vector<Trajectory>& trajectories,
                                   const FrameSequence& sequence,
                                   const GroundTruth& truth) {
  const int T = sequence.frame_count();
  if (truth.frame_count() != T)
    throw Error("ground truth frame count does not match sequence");
  std::vector<std::vector<double>> by_frame(T);
  for (const Trajectory& traj : trajectories) {
    if (static_cast<int>(traj.points.size()) != T)
      throw Error("trajectory does not span all frames");
    int j = match_start(sequence.point(traj.points[0]), truth);
    for (int t = 2; t <= T; ++t)
      by_frame[t - 1].push_back(norm(sequence.point(traj.points[t - 1]) -
                                     truth.positions[j][t - 1]));
  }
  return summarize(by_frame, truth.es_frame);
}

TrackingErrorReport tracking_error_paths(
    const std::vector<std::vector<PointId>>& paths,
    const FrameSequence& sequence, const GroundTruth& truth) {
  const int T = sequence.frame_count();
  if (truth.frame_count() != T)
    throw Error("ground truth frame count does not match sequence");
  std::vector<std::vector<double>> by_frame(T);
  for (const std::vector<PointId>& path : paths) {
    if (path.empty()) throw Error("empty walk");
    int j = match_start(sequence.point(path[0]), truth);
    for (int t = 2; t <= T; ++t) {
      // Walks that died early stay frozen at their last known position.
      const PointId& id = path[std::min<size_t>(t, path.size()) - 1];
      by_frame[t - 1].push_back(
          norm(sequence.point(id) - truth.positions[j][t - 1]));
    }
  }
  return summarize(by_frame, truth.es_frame);
}

std::vector<AblationRow> constraint_ablation(
    const FrameSequence& sequence, const GroundTruth& truth,
    const FeatureProvider& provider, const std::vector<VolumeImage>* images,
    const TrackingConfig& config) {
  TrackingConfig cfg = config;
  cfg.constraints = ConstraintSet{true, false, true, true};
  FlowNetwork network = build_network(sequence, provider, images, cfg);
  network = threshold_edges(network, cfg.p_th);

  const ConstraintSet rows[] = {
      {true, false, false, false},
      {true, true, false, false},
      {true, false, true, false},
      {true, false, true, true},
  };
  std::vector<AblationRow> table;
  for (const ConstraintSet& cs : rows) {
    FlowSolution sol = solve_flow(network, cs);
    table.push_back(
        {cs, tracking_error_paths(extract_paths(sol, network), sequence,
                                  truth)});
  }
  return table;
}

}  // namespace flowtrack
