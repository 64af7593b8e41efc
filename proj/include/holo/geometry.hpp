#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace holo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Thrown when a point configuration cannot support a rigid solve
/// (fewer than three correspondences, or collinear points).
struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown by ICP when no point pairs fall within the distance gate.
struct NoCorrespondences : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rigid transform: x_out = rotation * x_in + translation.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    /// Orthonormal rotation with det +1, both within `tol`.
    bool is_valid(double tol = 1e-9) const;

    static Pose identity() { return {}; }
};

Pose compose(const Pose& outer, const Pose& inner);
Pose inverse(const Pose& pose);
inline Vec3 transform(const Pose& pose, const Vec3& p) {
    return pose.rotation * p + pose.translation;
}

using Rgb = std::array<std::uint8_t, 3>;

/// Colored 3D points expressed in a named coordinate frame.
/// `colors` is either empty or one entry per point.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Rgb> colors;
    std::string frame_id;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_colors() const { return !colors.empty(); }
};

/// One sighting of the three-marker calibration wand by one camera,
/// expressed in that camera's coordinate frame.
struct WandObservation {
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    Vec3 c = Vec3::Zero();
    int camera_id = 0;
    int frame_index = 0;
};

/// Physical wand description and acceptance tolerances for observations.
struct WandSpec {
    double length = 0.60;           // meters, marker A to marker C
    double b_fraction = 0.5;        // position of B along the A->C segment
    double collinearity_tol = 0.005;  // max point-to-line distance, meters
    double length_tol = 0.005;        // |dist(a,c) - length| bound, meters
};

/// Checks the collinearity and length invariants of a wand sighting.
bool wand_observation_valid(const WandObservation& obs, const WandSpec& spec);

/// Least-squares rigid transform taking `src` onto `dst`
/// (index-aligned correspondences, SVD of the centered cross-covariance,
/// reflection corrected so det(R) = +1).
/// Throws DegenerateInput for fewer than 3 pairs or collinear configurations.
Pose estimate_rigid_transform(std::span<const Vec3> src, std::span<const Vec3> dst);

/// Applies a pose to every point; colors and ordering are preserved.
/// `target_frame`, when non-empty, becomes the output frame_id.
PointCloud apply_pose(const Pose& pose, const PointCloud& cloud,
                      std::string_view target_frame = {});

struct IndexPair {
    int query = 0;
    int target = 0;
    bool operator==(const IndexPair&) const = default;
};

/// For each query point whose nearest target point (Euclidean) lies within
/// `max_dist`, emits one (query, target) pair. Ties break to the lowest
/// target index. Brute force for small targets, k-d tree above 5k points;
/// both give identical results.
std::vector<IndexPair> nearest_neighbors(const PointCloud& query,
                                         const PointCloud& target,
                                         double max_dist);

struct IcpParams {
    double max_dist = std::numeric_limits<double>::infinity();
    double tol = 1e-6;   // stop when RMSE improves by less than this (meters)
    int max_iters = 50;
};

struct IcpResult {
    Pose pose;
    double rmse = 0.0;                 // meters, over the final matched pairs
    int iterations = 0;
    std::vector<double> rmse_history;  // one entry per iteration, non-increasing
};

/// Point-to-point ICP: alternates nearest-neighbor matching with the
/// closed-form rigid solve, starting from `init`. Returns the best pose
/// seen, so the result never scores worse than the initialization.
/// Throws NoCorrespondences when the distance gate empties the match set.
IcpResult icp_refine(const PointCloud& src, const PointCloud& dst,
                     const Pose& init, const IcpParams& params = {});

/// ASCII PLY (vertex: float x,y,z; optional uchar red,green,blue).
/// Coordinates are written with enough digits to round-trip float32,
/// matching the precision the wire protocol carries.
void save_ply(const std::string& path, const PointCloud& cloud);
PointCloud load_ply(const std::string& path);

}  // namespace holo
