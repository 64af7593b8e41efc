#pragma once

#include "holo/geometry.hpp"

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <utility>

namespace holo {

struct BehindCamera : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateConfiguration : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergedOrStalled : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyObservations : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Pinhole intrinsics with Brown radial/tangential distortion.
/// Distortion acts on normalized coordinates (x/z, y/z) before the
/// affine pixel map u = focal*x_d + skew*y_d + u0, v = focal*y_d + v0.
struct Intrinsics {
    double focal = 1.0;   // alpha, pixels (shared by both axes)
    double skew = 0.0;    // gamma
    double u0 = 0.0;
    double v0 = 0.0;
    Vec3 radial = Vec3::Zero();        // k1, k2, k3
    Vec2 tangential = Vec2::Zero();    // p1, p2
    int width = 0;
    int height = 0;

    bool has_distortion() const {
        return radial.cwiseAbs().maxCoeff() > 0.0 ||
               tangential.cwiseAbs().maxCoeff() > 0.0;
    }
};

enum class CameraKind { color, depth };

std::string to_string(CameraKind kind);
CameraKind camera_kind_from_string(const std::string& s);

struct CameraParams {
    Intrinsics intrinsics;
    Pose pose;  // camera-from-reference
    int camera_id = 0;
    CameraKind kind = CameraKind::color;
};

/// A reference-frame 3D point paired with its observed pixel.
struct Observation2D3D {
    Vec3 world = Vec3::Zero();
    Vec2 pixel = Vec2::Zero();
};

/// Forward Brown model on normalized coordinates.
Vec2 distort_normalized(const Intrinsics& intr, const Vec2& xy);

/// Inverts the Brown model by damped Newton iteration.
/// Guarantees |distort(result) - distorted| < 1e-8, else throws NoConvergence.
Vec2 undistort_normalized(const Intrinsics& intr, const Vec2& distorted);

/// Projects a camera-frame point (z > 0) to pixels.
Vec2 project_camera_frame(const Intrinsics& intr, const Vec3& p_cam);

/// Projects a reference-frame point through pose + intrinsics.
/// Throws BehindCamera when the camera-frame depth is <= 0.
Vec2 project(const CameraParams& cam, const Vec3& p);

struct DltResult {
    Intrinsics intrinsics;  // distortion zero
    Pose pose;              // camera-from-reference
};

/// Linear (DLT) estimate of the projection matrix from >= 6 non-coplanar
/// 2D-3D correspondences, decomposed into intrinsics and pose.
DltResult estimate_intrinsics_dlt(std::span<const Observation2D3D> obs,
                                  int image_width, int image_height);

struct LmOptions {
    int max_iters = 100;
    double lambda_init = 1e-3;
    double lambda_factor = 10.0;
    double lambda_max = 1e12;
    double tol = 1e-14;      // relative cost improvement below which we stop
    bool freeze_pose = false;
};

struct LmResult {
    CameraParams params;
    double rmse = 0.0;  // pixels
    int iterations = 0;
    std::vector<double> rmse_history;  // accepted steps only, non-increasing
};

/// Levenberg-Marquardt refinement of focal, skew, principal point, the five
/// distortion coefficients and (unless frozen) the pose, minimizing the
/// summed squared reprojection error. Rotation updates use a local
/// axis-angle chart composed onto the current rotation.
LmResult refine_lm(const CameraParams& initial, std::span<const Observation2D3D> obs,
                   const LmOptions& opts = {});

/// sqrt(mean squared pixel residual). Throws EmptyObservations.
double reprojection_rmse(const CameraParams& cam, std::span<const Observation2D3D> obs);

// --- LM internals exposed for derivative checks ---------------------------

/// Number of parameters in the LM chart (9 intrinsic/distortion [+6 pose]).
int lm_parameter_count(bool freeze_pose);

/// Applies a step in the LM chart:
/// delta = [d_focal, d_skew, d_u0, d_v0, d_k1..d_k3, d_p1, d_p2, w(3), d_t(3)]
/// where w composes exp([w]x) onto the rotation.
CameraParams lm_apply_step(const CameraParams& base, const Eigen::VectorXd& delta,
                           bool freeze_pose);

/// Stacked residual vector (2 rows per observation) at base (+) delta.
Eigen::VectorXd lm_residuals(const CameraParams& base, std::span<const Observation2D3D> obs,
                             const Eigen::VectorXd& delta, bool freeze_pose);

/// Analytic Jacobian of lm_residuals with respect to delta, at delta = 0.
Eigen::MatrixXd lm_jacobian(const CameraParams& base, std::span<const Observation2D3D> obs,
                            bool freeze_pose);

/// Rodrigues exponential map.
Mat3 axis_angle_to_rotation(const Vec3& w);

}  // namespace holo
