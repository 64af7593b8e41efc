#pragma once

#include "holo/camera_model.hpp"
#include "holo/geometry.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace holo {

struct InsufficientSharedFrames : std::runtime_error {
    explicit InsufficientSharedFrames(int camera, const std::string& msg)
        : std::runtime_error(msg), camera_id(camera) {}
    int camera_id;
};

/// A sub-step failure wrapped with the camera it happened on.
struct CalibrationError : std::runtime_error {
    CalibrationError(int camera, const std::string& stage_name, const std::string& msg)
        : std::runtime_error("camera " + std::to_string(camera) + " [" + stage_name +
                             "]: " + msg),
          camera_id(camera), stage(stage_name) {}
    int camera_id;
    std::string stage;
};

/// Wand sightings for every camera, keyed by camera id.
struct CalibrationSession {
    std::map<int, std::vector<WandObservation>> observations;
    int reference_camera_id = 1;
    WandSpec wand;
};

/// Per-camera sensor dump used for the cloud-based calibration stages:
/// a point cloud in the camera's own frame and the pixel each point was
/// observed at.
struct CameraCapture {
    PointCloud cloud;
    std::vector<Vec2> pixels;
    CameraKind kind = CameraKind::depth;
    int width = 0;
    int height = 0;
};

struct RigCalibration {
    int reference_camera_id = 1;
    std::vector<CameraParams> cameras;
    std::vector<double> rmse;  // pixels, aligned with `cameras`
    std::string created_at;

    const CameraParams* find(int camera_id) const;
};

/// Closed-form extrinsics from co-observed wand markers: for each camera the
/// pose taking its frame onto the reference frame. The reference maps to
/// identity. Requires >= 3 shared frames per camera.
std::map<int, Pose> align_extrinsics(const CalibrationSession& session);

/// Refines each camera-to-reference pose by ICP of its capture cloud against
/// the reference capture cloud.
std::map<int, Pose> refine_alignment_icp(const std::map<int, Pose>& poses,
                                         const std::map<int, CameraCapture>& captures,
                                         int reference_camera_id,
                                         const IcpParams& params = {});

/// Builds per-camera 2D-3D correspondences: every capture point whose aligned
/// position has a reference-cloud neighbor within `max_dist` yields one
/// (reference 3D point, observing-camera pixel) pair.
std::map<int, std::vector<Observation2D3D>> gather_correspondences(
    const std::map<int, Pose>& poses, const std::map<int, CameraCapture>& captures,
    int reference_camera_id, double max_dist);

struct CalibrateOptions {
    bool use_icp = true;
    double match_max_dist = 0.02;  // meters, correspondence gate
    IcpParams icp;
    LmOptions lm;
    /// When set for a camera, skips the linear bootstrap and seeds LM with
    /// these intrinsics plus the cloud-aligned pose.
    std::map<int, Intrinsics> initial_intrinsics;
};

/// Full pipeline: wand alignment, optional ICP refinement, correspondence
/// gathering, linear intrinsic bootstrap (or provided initial intrinsics),
/// and per-camera Levenberg-Marquardt polish. The reference camera keeps an
/// identity pose throughout.
RigCalibration calibrate_rig(const CalibrationSession& session,
                             const std::map<int, CameraCapture>& captures,
                             const CalibrateOptions& opts = {});

/// Versioned JSON round-trip of the rig file. Doubles survive bit-exactly;
/// rotations are re-checked for orthonormality on load.
void save_rig_calibration(const std::string& path, const RigCalibration& rig);
RigCalibration load_rig_calibration(const std::string& path);

/// Wand CSV: `frame,camera_id,marker,x,y,z` with marker one of A,B,C.
/// Observations violating the wand geometry tolerances are dropped;
/// `rejected`, when given, receives the number of dropped sightings.
std::map<int, std::vector<WandObservation>> load_wand_csv(const std::string& path,
                                                          const WandSpec& spec,
                                                          int* rejected = nullptr);
void save_wand_csv(const std::string& path,
                   const std::map<int, std::vector<WandObservation>>& obs);

}  // namespace holo
