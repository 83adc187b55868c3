#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

// Scalar intensity volume on a regular grid. Voxel (i,j,k) sits at physical
// position (i*sx, j*sy, k*sz); storage is x-fastest raster order.
struct VolumeImage {
  int nx = 0, ny = 0, nz = 0;
  double sx = 1.0, sy = 1.0, sz = 1.0;
  std::vector<float> voxels;

  size_t index(int i, int j, int k) const {
    return static_cast<size_t>(i) +
           static_cast<size_t>(nx) *
               (static_cast<size_t>(j) + static_cast<size_t>(ny) * k);
  }
  // Access with edge replication: indices clamped to the valid range.
  float at(int i, int j, int k) const;
  double min_spacing() const;
  void validate() const;
};

struct FeatureVector {
  std::vector<double> values;
  int dim() const { return static_cast<int>(values.size()); }
};

// Pluggable appearance/shape descriptor. Providers are stateless; extraction
// and distance are safe to call concurrently.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  // image may be null for providers that do not need one.
  virtual FeatureVector extract(const Point3& point,
                                const VolumeImage* image) const = 0;
  // Default metric: Euclidean distance between the raw vectors.
  virtual double distance(const FeatureVector& a, const FeatureVector& b) const;
  virtual bool needs_image() const { return false; }
  virtual std::string name() const = 0;
};

// Constant descriptor [0]; all feature distances vanish, so edge weights
// reduce to their spatial factor.
class PositionFeature final : public FeatureProvider {
 public:
  FeatureVector extract(const Point3&, const VolumeImage*) const override;
  std::string name() const override { return "position"; }
};

// Cube of raw intensities (side 2r+1 voxels) around the nearest voxel,
// x-fastest raster order, edge replication outside the image. Distance is
// 1 - NCC; a zero-variance patch has NCC defined as 0 (distance 1).
class IntensityPatchFeature final : public FeatureProvider {
 public:
  explicit IntensityPatchFeature(int patch_radius = 5);
  FeatureVector extract(const Point3& point,
                        const VolumeImage* image) const override;
  double distance(const FeatureVector& a,
                  const FeatureVector& b) const override;
  bool needs_image() const override { return true; }
  std::string name() const override { return "patch"; }
  int patch_radius() const { return radius_; }

 private:
  int radius_;
};

// L1-normalized histogram of gradient magnitudes over the patch. Gradients
// use spacing-aware central differences (one-sided at image boundaries); the
// histogram range is fixed per image at [0, (Imax-Imin)/min_spacing].
class GradientHistogramFeature final : public FeatureProvider {
 public:
  explicit GradientHistogramFeature(int patch_radius = 5, int bins = 16);
  FeatureVector extract(const Point3& point,
                        const VolumeImage* image) const override;
  bool needs_image() const override { return true; }
  std::string name() const override { return "gradhist"; }
  int bins() const { return bins_; }

 private:
  int radius_;
  int bins_;
};

// Factory keyed by provider name ("position", "patch", "gradhist").
std::unique_ptr<FeatureProvider> make_feature_provider(const std::string& name,
                                                       int patch_radius = 5,
                                                       int bins = 16);

}  // namespace flowtrack
