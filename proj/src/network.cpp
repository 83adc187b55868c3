#include "flowtrack/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace flowtrack {
namespace {

struct Candidate {
  int j;  // 0-based index in the target frame
  double feat_dist;
  double eucl_dist;
};

struct TransitionCandidates {
  std::vector<std::vector<Candidate>> per_node;  // rank order, <= NK each
};

std::vector<FeatureVector> extract_frame_features(
    const std::vector<Point3>& points, const FeatureProvider& provider,
    const VolumeImage* image) {
  std::vector<FeatureVector> feats;
  feats.reserve(points.size());
  for (const Point3& p : points) feats.push_back(provider.extract(p, image));
  return feats;
}

const VolumeImage* frame_image(const std::vector<VolumeImage>* images,
                               int frame_1based, int frame_count) {
  if (!images) return nullptr;
  if (static_cast<int>(images->size()) != frame_count)
    throw Error("expected one volume per frame, got " +
                std::to_string(images->size()) + " for " +
                std::to_string(frame_count) + " frames");
  return &(*images)[frame_1based - 1];
}

// NK feature-nearest candidates per source point, pre-filtered to a spatial
// ball of candidate_ball_factor times the RMS nearest-neighbor distance.
TransitionCandidates collect_candidates(
    const std::vector<Point3>& from_pts, const std::vector<Point3>& to_pts,
    const std::vector<FeatureVector>& from_feats,
    const std::vector<FeatureVector>& to_feats, const FeatureProvider& provider,
    const TrackingConfig& config) {
  const int n_from = static_cast<int>(from_pts.size());
  const int n_to = static_cast<int>(to_pts.size());
  const int take = std::min(config.nk, n_to);

  double ball = std::numeric_limits<double>::infinity();
  if (config.candidate_ball_factor > 0.0) {
    double sum_sq = 0.0;
    for (const Point3& p : from_pts) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point3& q : to_pts) best = std::min(best, squared_norm(q - p));
      sum_sq += best;
    }
    ball = config.candidate_ball_factor * std::sqrt(sum_sq / n_from);
  }

  TransitionCandidates out;
  out.per_node.resize(n_from);
  std::vector<Candidate> pool;
  for (int i = 0; i < n_from; ++i) {
    pool.clear();
    for (int j = 0; j < n_to; ++j) {
      double d = norm(to_pts[j] - from_pts[i]);
      if (d <= ball) pool.push_back({j, 0.0, d});
    }
    if (static_cast<int>(pool.size()) < take) {
      pool.clear();
      for (int j = 0; j < n_to; ++j)
        pool.push_back({j, 0.0, norm(to_pts[j] - from_pts[i])});
    }
    for (Candidate& c : pool)
      c.feat_dist = provider.distance(from_feats[i], to_feats[c.j]);
    std::sort(pool.begin(), pool.end(), [](const Candidate& a,
                                           const Candidate& b) {
      if (a.feat_dist != b.feat_dist) return a.feat_dist < b.feat_dist;
      if (a.eucl_dist != b.eucl_dist) return a.eucl_dist < b.eucl_dist;
      return a.j < b.j;
    });
    pool.resize(take);
    out.per_node[i] = pool;
  }
  return out;
}

SigmaPair sigma_from_candidates(const TransitionCandidates& cands) {
  double se = 0.0, sf = 0.0;
  int n = 0;
  for (const auto& node : cands.per_node)
    for (const Candidate& c : node) {
      se += c.eucl_dist;
      sf += c.feat_dist;
      ++n;
    }
  if (n == 0) return SigmaPair{1e-9, 1e-9};
  const double me = se / n;
  const double mf = sf / n;
  double ve = 0.0, vf = 0.0;
  for (const auto& node : cands.per_node)
    for (const Candidate& c : node) {
      ve += (c.eucl_dist - me) * (c.eucl_dist - me);
      vf += (c.feat_dist - mf) * (c.feat_dist - mf);
    }
  SigmaPair s;
  s.x = std::max(std::sqrt(ve / n), 1e-9 * (1.0 + me));
  s.f = std::max(std::sqrt(vf / n), 1e-9 * (1.0 + mf));
  return s;
}

}  // namespace

const std::vector<int>& FlowNetwork::outgoing_edges(PointId node) const {
  if (!sequence.contains(node))
    throw Error("node out of range: frame " + std::to_string(node.frame) +
                ", index " + std::to_string(node.index));
  return outgoing[node.frame - 1][node.index - 1];
}

double edge_weight_from_distances(double spatial_dist, double feature_dist,
                                  double sigma_x, double sigma_f) {
  if (!(sigma_x > 0.0) || !(sigma_f > 0.0))
    throw NonPositiveSigma("sigmas must be > 0");
  double ex = spatial_dist * spatial_dist / (2.0 * sigma_x * sigma_x);
  double ef = feature_dist * feature_dist / (2.0 * sigma_f * sigma_f);
  return std::exp(-ex - ef);
}

double edge_weight(const Point3& xi, const Point3& xj, const FeatureVector& fi,
                   const FeatureVector& fj, const FeatureProvider& provider,
                   double sigma_x, double sigma_f) {
  return edge_weight_from_distances(norm(xj - xi), provider.distance(fi, fj),
                                    sigma_x, sigma_f);
}

double edge_weight(const Point3& xi, const Point3& xj, const FeatureVector& fi,
                   const FeatureVector& fj, double sigma_x, double sigma_f) {
  PositionFeature l2;  // default Euclidean feature metric
  return edge_weight_from_distances(
      norm(xj - xi), static_cast<const FeatureProvider&>(l2).distance(fi, fj),
      sigma_x, sigma_f);
}

std::vector<SigmaPair> compute_sigmas(const FrameSequence& sequence,
                                      const FeatureProvider& provider,
                                      const std::vector<VolumeImage>* images,
                                      const TrackingConfig& config) {
  throw_on_violations(validate_sequence(sequence));
  const int T = sequence.frame_count();
  std::vector<FeatureVector> prev = extract_frame_features(
      sequence.frames[0], provider, frame_image(images, 1, T));
  std::vector<SigmaPair> sigmas;
  sigmas.reserve(T - 1);
  for (int t = 1; t < T; ++t) {
    std::vector<FeatureVector> next = extract_frame_features(
        sequence.frames[t], provider, frame_image(images, t + 1, T));
    TransitionCandidates cands =
        collect_candidates(sequence.frames[t - 1], sequence.frames[t], prev,
                           next, provider, config);
    sigmas.push_back(sigma_from_candidates(cands));
    prev = std::move(next);
  }
  return sigmas;
}

FlowNetwork build_network(const FrameSequence& sequence,
                          const FeatureProvider& provider,
                          const std::vector<VolumeImage>* images,
                          const TrackingConfig& config) {
  throw_on_violations(validate_sequence(sequence));
  if (config.nk < 1) throw Error("nk must be >= 1");
  const int T = sequence.frame_count();

  std::vector<std::vector<FeatureVector>> feats(T);
  for (int t = 1; t <= T; ++t)
    feats[t - 1] = extract_frame_features(sequence.frames[t - 1], provider,
                                          frame_image(images, t, T));

  FlowNetwork net;
  net.sequence = sequence;
  net.has_loop_edges = config.constraints.loop;
  net.outgoing.resize(T);
  for (int t = 1; t <= T; ++t)
    net.outgoing[t - 1].resize(sequence.point_count(t));

  const int n1 = sequence.point_count(1);
  net.source_edge.resize(n1);
  for (int i = 1; i <= n1; ++i) {
    net.source_edge[i - 1] = static_cast<int>(net.edges.size());
    net.edges.push_back({EdgeKind::Source, kSourceNode, PointId{1, i}, 1.0});
  }

  auto add_transition = [&](int from_t, int to_t, EdgeKind kind) {
    TransitionCandidates cands = collect_candidates(
        sequence.frames[from_t - 1], sequence.frames[to_t - 1],
        feats[from_t - 1], feats[to_t - 1], provider, config);
    SigmaPair sigma = config.sigma_mode == SigmaMode::Fixed
                          ? SigmaPair{config.sigma_x, config.sigma_f}
                          : sigma_from_candidates(cands);
    net.sigmas.push_back(sigma);
    for (int i = 1; i <= sequence.point_count(from_t); ++i) {
      for (const Candidate& c : cands.per_node[i - 1]) {
        double w = edge_weight_from_distances(c.eucl_dist, c.feat_dist,
                                              sigma.x, sigma.f);
        net.outgoing[from_t - 1][i - 1].push_back(
            static_cast<int>(net.edges.size()));
        net.edges.push_back({kind, PointId{from_t, i},
                             PointId{to_t, c.j + 1}, w});
      }
    }
  };

  for (int t = 1; t < T; ++t) add_transition(t, t + 1, EdgeKind::Temporal);
  if (config.constraints.loop) add_transition(T, 1, EdgeKind::Loop);
  return net;
}

FlowNetwork threshold_edges(const FlowNetwork& network, double p_th) {
  if (!(p_th >= 0.0) || !(p_th <= 1.0)) throw Error("p_th must be in [0,1]");

  FlowNetwork out;
  out.sequence = network.sequence;
  out.sigmas = network.sigmas;
  out.has_loop_edges = network.has_loop_edges;
  const int T = out.sequence.frame_count();
  out.outgoing.resize(T);
  for (int t = 1; t <= T; ++t)
    out.outgoing[t - 1].resize(out.sequence.point_count(t));
  out.source_edge.resize(out.sequence.point_count(1), -1);

  for (const Edge& e : network.edges) {
    if (e.kind != EdgeKind::Source && e.weight < p_th) continue;
    int id = static_cast<int>(out.edges.size());
    out.edges.push_back(e);
    if (e.kind == EdgeKind::Source)
      out.source_edge[e.to.index - 1] = id;
    else
      out.outgoing[e.from.frame - 1][e.from.index - 1].push_back(id);
  }
  return out;
}

}  // namespace flowtrack
