#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowtrack {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySlice : Error { using Error::Error; };
struct ImageRequired : Error { using Error::Error; };
struct NonPositiveSigma : Error { using Error::Error; };
struct InvalidConstraintSet : Error { using Error::Error; };
struct SolverFailure : Error { using Error::Error; };
struct BrokenPath : Error { using Error::Error; };
struct DegenerateSystem : Error { using Error::Error; };
struct OnAxis : Error { using Error::Error; };
struct UnmatchedTrajectory : Error { using Error::Error; };

struct NonIntegralSolution : Error {
  double max_deviation;
  explicit NonIntegralSolution(double dev)
      : Error("flow solution is not integral, max deviation " +
              std::to_string(dev)),
        max_deviation(dev) {}
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

// Position or 3-vector in millimeters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

inline Point3 operator+(const Point3& a, const Point3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline Point3 operator-(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline Point3 operator*(double s, const Point3& a) {
  return {s * a.x, s * a.y, s * a.z};
}
inline double dot(const Point3& a, const Point3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}
inline double squared_norm(const Point3& a) { return dot(a, a); }
inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }
inline bool finite(const Point3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Row-major 3x3 matrix; m[row][col].
using Mat3 = std::array<std::array<double, 3>, 3>;

// Identifies point i of frame t. Both indices are 1-based, matching the
// serialized formats.
struct PointId {
  int frame = 0;
  int index = 0;

  friend bool operator==(const PointId&, const PointId&) = default;
  friend auto operator<=>(const PointId&, const PointId&) = default;
};

// The virtual source node feeding frame 1; never a real point.
inline constexpr PointId kSourceNode{0, 0};

// ---------------------------------------------------------------------------
// Sequences and trajectories
// ---------------------------------------------------------------------------

// An ordered series of point clouds, one per time frame. Frame counts may
// differ between frames. Immutable once built.
struct FrameSequence {
  std::vector<std::vector<Point3>> frames;
  bool periodic = false;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int point_count(int t) const {
    return static_cast<int>(frames[static_cast<size_t>(t - 1)].size());
  }
  const Point3& point(PointId id) const {
    return frames[static_cast<size_t>(id.frame - 1)]
                 [static_cast<size_t>(id.index - 1)];
  }
  bool contains(PointId id) const {
    return id.frame >= 1 && id.frame <= frame_count() && id.index >= 1 &&
           id.index <= point_count(id.frame);
  }
};

// A tracked path visiting exactly one point per frame, t = 1..T. When the
// solve closed the cycle, loop_closure is the frame-1 point the path
// returned to.
struct Trajectory {
  std::vector<PointId> points;
  std::optional<PointId> loop_closure;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Which rows the flow optimization enforces. `out` is the backbone and is
// always on; `loop` needs `bal` (loop balance is meaningless without
// conservation).
struct ConstraintSet {
  bool out = true;
  bool inc = false;
  bool bal = false;
  bool loop = false;

  void validate() const {
    if (!out) throw InvalidConstraintSet("C_out must always be enabled");
    if (loop && !bal)
      throw InvalidConstraintSet("C_loop requires C_bal");
  }
  std::string label() const;

  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

// Parse "out,bal,loop" style labels (order-insensitive).
ConstraintSet constraint_set_from_label(const std::string& label);

enum class SigmaMode { PerFrameStddev, Fixed };

struct TrackingConfig {
  int nk = 3;            // candidate neighbors per node
  double p_th = 0.5;     // edge-weight threshold for outlier rejection
  int z_fr = 40;         // axial sampling density
  int theta_fr = 30;     // angular sampling density
  ConstraintSet constraints{true, false, true, true};
  SigmaMode sigma_mode = SigmaMode::PerFrameStddev;
  double sigma_x = 1.0;  // used when sigma_mode == Fixed
  double sigma_f = 1.0;
  // Spatial prefilter for candidate search: ball radius as a multiple of the
  // per-transition RMS nearest-neighbor distance. <= 0 disables the filter.
  double candidate_ball_factor = 3.0;

  friend bool operator==(const TrackingConfig&, const TrackingConfig&) =
      default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
  std::string what;
  std::optional<PointId> where;
};

// Report-style check of the FrameSequence invariants: T >= 2, no empty
// frame, all coordinates finite. Empty result iff the sequence is usable.
std::vector<Violation> validate_sequence(const FrameSequence& seq);

// Escalates a non-empty report to an exception (first violation wins).
inline void throw_on_violations(const std::vector<Violation>& report) {
  if (!report.empty()) throw Error(report.front().what);
}

}  // namespace flowtrack
