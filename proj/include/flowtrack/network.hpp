#pragma once

#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/features.hpp"

namespace flowtrack {

enum class EdgeKind { Source, Temporal, Loop };

struct Edge {
  EdgeKind kind;
  PointId from;  // kSourceNode for Source edges
  PointId to;
  double weight;
};

struct SigmaPair {
  double x = 1.0;
  double f = 1.0;
};

// Directed matching graph over a frame sequence: one Source edge per frame-1
// node, up to NK Temporal candidate edges per node toward the next frame, and
// (when requested) Loop candidate edges from the last frame back to frame 1.
struct FlowNetwork {
  FrameSequence sequence;
  std::vector<Edge> edges;
  // outgoing[t-1][i-1]: edge indices leaving node (t,i) in candidate rank
  // order (Temporal, or Loop for t = T). Source edges are kept separately.
  std::vector<std::vector<std::vector<int>>> outgoing;
  // source_edge[i-1]: the Source edge feeding frame-1 node i.
  std::vector<int> source_edge;
  // sigmas[t-1] covers transition t -> t+1; when loop edges exist the last
  // entry covers the wrap transition T -> 1.
  std::vector<SigmaPair> sigmas;
  bool has_loop_edges = false;

  int frame_count() const { return sequence.frame_count(); }
  const std::vector<int>& outgoing_edges(PointId node) const;
};

// w = exp(-spatial^2 / 2 sigma_x^2) * exp(-feature^2 / 2 sigma_f^2), in (0,1].
double edge_weight_from_distances(double spatial_dist, double feature_dist,
                                  double sigma_x, double sigma_f);
// Convenience overloads; the first uses the provider's metric, the second the
// plain Euclidean distance between feature vectors.
double edge_weight(const Point3& xi, const Point3& xj, const FeatureVector& fi,
                   const FeatureVector& fj, const FeatureProvider& provider,
                   double sigma_x, double sigma_f);
double edge_weight(const Point3& xi, const Point3& xj, const FeatureVector& fi,
                   const FeatureVector& fj, double sigma_x, double sigma_f);

// Per-transition population standard deviations of Euclidean and feature
// distances over the candidate pairs (sigmas[t-1] covers t -> t+1). Zero
// deviations are floored at 1e-9 * (1 + mean distance).
std::vector<SigmaPair> compute_sigmas(const FrameSequence& sequence,
                                      const FeatureProvider& provider,
                                      const std::vector<VolumeImage>* images,
                                      const TrackingConfig& config);

// Builds the candidate graph. Candidates are the NK feature-nearest points of
// the next frame, drawn from a spatial ball sized by the transition's RMS
// nearest-neighbor distance (widened to the whole frame when too few points
// fall inside); ties break by feature distance, then Euclidean distance, then
// smaller index. images may be null for providers that do not need one; when
// present it must hold one volume per frame.
FlowNetwork build_network(const FrameSequence& sequence,
                          const FeatureProvider& provider,
                          const std::vector<VolumeImage>* images,
                          const TrackingConfig& config);

// Drops Temporal and Loop edges with weight < p_th; Source edges are kept.
FlowNetwork threshold_edges(const FlowNetwork& network, double p_th);

}  // namespace flowtrack
