#pragma once

#include <utility>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/features.hpp"
#include "flowtrack/network.hpp"

namespace flowtrack {

// True per-trajectory positions: positions[j][t-1] is trajectory j at frame
// t. Frame 1 of the generated sequences coincides with these starts, so
// frame-1 identity gives the correspondence.
struct GroundTruth {
  std::vector<std::vector<Point3>> positions;
  int es_frame = 1;

  int trajectory_count() const { return static_cast<int>(positions.size()); }
  int frame_count() const {
    return positions.empty() ? 0 : static_cast<int>(positions[0].size());
  }
};

// Median tracking error summary (mm). Overall pools frames 2..T; ES and ED
// are the end-systolic frame and the last frame.
struct TrackingErrorReport {
  double overall_median = 0.0, overall_iqr = 0.0;
  double es_median = 0.0, es_iqr = 0.0;
  double ed_median = 0.0, ed_iqr = 0.0;
};

// 1D+t toy: vertically stacked points embedded at y = z = 0. Without
// crossing the points stand still; with it the two lowest trajectories swap
// order over the sequence. Gaussian jitter (sigma = noise) perturbs the
// observed frames 2..T; frame 1 stays pristine.
struct Toy1dSpec {
  int points_per_frame = 5;
  int frames = 5;
  double noise = 0.0;
  bool crossing = false;
  unsigned seed = 1;
};
std::pair<FrameSequence, GroundTruth> gen_toy_1d(const Toy1dSpec& spec);

// Two concentric ellipsoidal shells sampled cylindrically once, then carried
// through a periodic contraction-plus-twist motion:
//   rho(t) = 1 - A sin^2(pi t / T)   (radial scale about the long axis)
//   theta(t) = B sin(2 pi t / T)     (twist, radians)
// applied to the undeformed base, so frame T is the base shape (ED) and
// frame T+1 would reproduce frame 1. End systole is the frame of minimum
// mean radius (T/2 for even T). Observed frames 2..T get Gaussian jitter of
// noise_sigma; ground truth stays clean. When volumes are requested, a
// band-limited random texture advected exactly with the motion provides one
// intensity volume per frame. The scene lives in the positive octant since
// the volume format carries no origin.
struct ShellPhantomSpec {
  int z_fr = 20;
  int theta_fr = 15;
  int frames = 16;
  double contraction_amplitude = 0.15;
  double twist_amplitude = 0.1;
  double noise_sigma = 0.0;
  unsigned seed = 1;
  bool volumes = false;
  Point3 center{40.0, 40.0, 40.0};
};
struct ShellPhantom {
  FrameSequence sequence;
  GroundTruth truth;
  std::vector<VolumeImage> volumes;
};
ShellPhantom gen_cyclic_shells(const ShellPhantomSpec& spec);

// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double p);

// Errors between tracked observed positions and clean ground truth, matched
// by frame-1 identity (nearest start within 1e-6, else UnmatchedTrajectory).
TrackingErrorReport tracking_error(const std::vector<Trajectory>& trajectories,
                                   const FrameSequence& sequence,
                                   const GroundTruth& truth);

// Same metric over raw per-start walks: a walk that ends early contributes
// its last known position for the remaining frames, so weaker constraint
// sets stay comparable to conservation-based ones.
TrackingErrorReport tracking_error_paths(
    const std::vector<std::vector<PointId>>& paths,
    const FrameSequence& sequence, const GroundTruth& truth);

struct AblationRow {
  ConstraintSet constraints;
  TrackingErrorReport report;
};

// Runs {out}, {out,in}, {out,bal}, {out,bal,loop} on one shared network
// (built with loop candidates; sets that exclude loop rows simply ignore
// those edges) and reports the tracking error per row.
std::vector<AblationRow> constraint_ablation(
    const FrameSequence& sequence, const GroundTruth& truth,
    const FeatureProvider& provider, const std::vector<VolumeImage>* images,
    const TrackingConfig& config);

}  // namespace flowtrack
