#include "flowtrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowtrack {
namespace {

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

struct VoxelCoord {
  int i, j, k;
};

VoxelCoord nearest_voxel(const Point3& p, const VolumeImage& img) {
  return {clamp_index(static_cast<int>(std::lround(p.x / img.sx)), img.nx),
          clamp_index(static_cast<int>(std::lround(p.y / img.sy)), img.ny),
          clamp_index(static_cast<int>(std::lround(p.z / img.sz)), img.nz)};
}

const VolumeImage& require_image(const VolumeImage* image, const char* who) {
  if (!image) throw ImageRequired(std::string(who) + " needs a volume image");
  return *image;
}

// Spacing-aware gradient at voxel (i,j,k): central differences in the
// interior, one-sided at the boundary faces.
Point3 voxel_gradient(const VolumeImage& img, int i, int j, int k) {
  auto axis = [](int c, int n, double spacing, auto value) {
    int lo = c > 0 ? c - 1 : c;
    int hi = c < n - 1 ? c + 1 : c;
    if (hi == lo) return 0.0;
    return (value(hi) - value(lo)) / ((hi - lo) * spacing);
  };
  Point3 g;
  g.x = axis(i, img.nx, img.sx,
             [&](int c) { return static_cast<double>(img.at(c, j, k)); });
  g.y = axis(j, img.ny, img.sy,
             [&](int c) { return static_cast<double>(img.at(i, c, k)); });
  g.z = axis(k, img.nz, img.sz,
             [&](int c) { return static_cast<double>(img.at(i, j, c)); });
  return g;
}

}  // namespace

float VolumeImage::at(int i, int j, int k) const {
  return voxels[index(clamp_index(i, nx), clamp_index(j, ny),
                      clamp_index(k, nz))];
}

double VolumeImage::min_spacing() const { return std::min({sx, sy, sz}); }

void VolumeImage::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw Error("volume dims must be >= 1");
  if (!(sx > 0.0) || !(sy > 0.0) || !(sz > 0.0))
    throw Error("volume spacing must be > 0");
  if (voxels.size() != static_cast<size_t>(nx) * ny * nz)
    throw Error("voxel count does not match dims");
  for (float v : voxels)
    if (!std::isfinite(v)) throw Error("volume contains non-finite intensity");
}

double FeatureProvider::distance(const FeatureVector& a,
                                 const FeatureVector& b) const {
  if (a.dim() != b.dim())
    throw Error("feature dimension mismatch: " + std::to_string(a.dim()) +
                " vs " + std::to_string(b.dim()));
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s);
}

FeatureVector PositionFeature::extract(const Point3&,
                                       const VolumeImage*) const {
  return FeatureVector{{0.0}};
}

IntensityPatchFeature::IntensityPatchFeature(int patch_radius)
    : radius_(patch_radius) {
  if (patch_radius < 0) throw Error("patch_radius must be >= 0");
}

FeatureVector IntensityPatchFeature::extract(const Point3& point,
                                             const VolumeImage* image) const {
  const VolumeImage& img = require_image(image, "intensity patch feature");
  VoxelCoord c = nearest_voxel(point, img);
  FeatureVector f;
  int side = 2 * radius_ + 1;
  f.values.reserve(static_cast<size_t>(side) * side * side);
  for (int dk = -radius_; dk <= radius_; ++dk)
    for (int dj = -radius_; dj <= radius_; ++dj)
      for (int di = -radius_; di <= radius_; ++di)
        f.values.push_back(img.at(c.i + di, c.j + dj, c.k + dk));
  return f;
}

double IntensityPatchFeature::distance(const FeatureVector& a,
                                       const FeatureVector& b) const {
  if (a.dim() != b.dim()) throw Error("patch size mismatch");
  const int n = a.dim();
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += a.values[i];
    mb += b.values[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (int i = 0; i < n; ++i) {
    double da = a.values[i] - ma;
    double db = b.values[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  double ncc = 0.0;  // zero-variance convention: featureless patches score 0
  if (va > 0.0 && vb > 0.0) ncc = cov / std::sqrt(va * vb);
  ncc = std::clamp(ncc, -1.0, 1.0);
  return 1.0 - ncc;
}

GradientHistogramFeature::GradientHistogramFeature(int patch_radius, int bins)
    : radius_(patch_radius), bins_(bins) {
  if (patch_radius < 0) throw Error("patch_radius must be >= 0");
  if (bins < 2) throw Error("bins must be >= 2");
}

FeatureVector GradientHistogramFeature::extract(
    const Point3& point, const VolumeImage* image) const {
  const VolumeImage& img = require_image(image, "gradient histogram feature");

  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (float v : img.voxels) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = (static_cast<double>(hi) - lo) / img.min_spacing();

  VoxelCoord c = nearest_voxel(point, img);
  FeatureVector f;
  f.values.assign(bins_, 0.0);
  int count = 0;
  for (int dk = -radius_; dk <= radius_; ++dk)
    for (int dj = -radius_; dj <= radius_; ++dj)
      for (int di = -radius_; di <= radius_; ++di) {
        int i = clamp_index(c.i + di, img.nx);
        int j = clamp_index(c.j + dj, img.ny);
        int k = clamp_index(c.k + dk, img.nz);
        double mag = norm(voxel_gradient(img, i, j, k));
        int bin = 0;
        if (range > 0.0)
          bin = std::clamp(static_cast<int>(mag / range * bins_), 0, bins_ - 1);
        f.values[bin] += 1.0;
        ++count;
      }
  for (double& v : f.values) v /= count;
  return f;
}

std::unique_ptr<FeatureProvider> make_feature_provider(const std::string& name,
                                                       int patch_radius,
                                                       int bins) {
  if (name == "position") return std::make_unique<PositionFeature>();
  if (name == "patch")
    return std::make_unique<IntensityPatchFeature>(patch_radius);
  if (name == "gradhist")
    return std::make_unique<GradientHistogramFeature>(patch_radius, bins);
  throw Error("unknown feature provider: " + name);
}

}  // namespace flowtrack
